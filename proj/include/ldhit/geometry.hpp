#pragma once

#include "ldhit/rates.hpp"

namespace ldhit {

// The three clauses of the vertex condition at r = r_G, tested with a
// numerical margin: values inside the margin are flagged marginal rather
// than decided, since the asymptotic form changes at the boundary.
struct C3Flags {
    bool normal_in_orthant = false;  // lambda(r_G g) has all positive components
    bool in_cramer_range = false;    // r_G g admits a conjugate point
    bool drift_negative = false;     // <E xi, lambda(r_G g)> < 0
    bool marginal = false;           // some strict inequality sits inside the margin

    bool all() const { return normal_in_orthant && in_cramer_range && drift_negative; }
};

// Most-probable-time/point report for the orthant target g + cl(Q+).
struct MppReport {
    double u_g = 0.0;  // most probable time
    double r_g = 0.0;  // 1/u_g
    double d_g = 0.0;  // second rate function at g
    Vec alpha_star;    // r_g * g, the most probable point of r_g G
    Vec normal;        // N(r_g) = lambda(alpha_star), normal to the rate level surface
    Vec zeta;          // normal / ||normal||
    C3Flags c3;
};

struct OrthantTarget {
    Vec g;
};

MppReport mpp_orthant(const RateEvaluator& ev, const Vec& g, double margin = 1e-8);

// throws C3Violated / C3Marginal when the report does not support the
// vertex form of the hitting asymptotics
void require_c3(const MppReport& report);

// Geometry of the auxiliary half-space tangent to the rate level surface at
// the vertex: the hyperplane frame, the moving half-space MPP beta(1/u), and
// the first-order displacement vector kappa of n*beta(s/n) - s*g.
class HalfSpaceGeometry {
public:
    HalfSpaceGeometry(const RateEvaluator& ev, const Vec& g, MppReport report);

    const MppReport& report() const { return report_; }
    const Vec& vertex() const { return g_; }
    const RateEvaluator& evaluator() const { return ev_; }

    // rows: orthonormal basis of the tangent hyperplane (orthogonal to zeta)
    const Mat& frame() const { return frame_; }

    // MPP of the scaled half-space (1/u) * H_hat(r_G): minimizes Lambda over
    // the hyperplane <v, N> = <g, N>/u; at u = u_G this is r_G g
    Vec beta(double u) const;

    // closed-form displacement vector from the moving-MPP expansion
    Vec kappa() const;

    // quadratic coefficient a(u_G) = kappa' Lambda''(r_G g) kappa
    double a_coeff() const;

    // curvature of u -> u Lambda(beta(1/u)) at u_G by central differences
    // with a step-halving consistency check
    double sigma2_d(double rel_step = 1e-3) const;

    // first derivative of the same map (vanishes at u_G)
    double d_u_derivative(double u, double rel_step = 1e-3) const;

    double d_u_halfspace(double u) const;  // u * Lambda(beta(1/u))

private:
    const RateEvaluator& ev_;
    Vec g_;
    MppReport report_;
    Mat frame_;
};

}  // namespace ldhit
