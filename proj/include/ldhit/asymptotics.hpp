#pragma once

#include <cstdint>
#include <vector>

#include "ldhit/geometry.hpp"
#include "ldhit/simulate.hpp"

namespace ldhit {

struct PointEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Scalars of the Laplace step in the hitting-time sum: the curvature of
// u -> u Lambda(beta(1/u)) at the most probable time, the quadratic
// coefficient built from kappa, their combination sigma*_D, and the
// tilted-covariance determinant factor at the vertex.
struct LaplaceQuantities {
    double sigma2_d = 0.0;
    double a_ug = 0.0;
    double sigma_star_d = 0.0;  // sqrt(sigma2_d + a_ug / u_g)
    double sigma_alpha = 0.0;   // sqrt(det Cov of the tilted jump at the vertex)
};

LaplaceQuantities laplace_quantities(const HalfSpaceGeometry& geom);

// Monte Carlo estimators of the two walk functionals entering the E-integral.
//
// p(z) is the probability that the untilted walk ever enters cl(Q+) - z;
// q(z) is the probability that the vertex-tilted walk keeps its projection
// on the level-surface normal at or above <N, z> forever.  Both use
// certified Lundberg stopping rules so that the per-trajectory truncation
// bias is at most stop_tol (downward for p, upward for q).
class OrthantHitting {
public:
    OrthantHitting(const JumpModel& model, const MppReport& report);

    // untilted hitting probability of cl(Q+) - z; returns exactly 1 inside
    PointEstimate estimate_p(const Vec& z, std::uint64_t n_samples, int horizon,
                             std::uint64_t seed, double stop_tol = 1e-12) const;

    // all-time lower bound probability for the tilted projected walk
    PointEstimate estimate_q(const Vec& z, std::uint64_t n_samples, int horizon,
                             std::uint64_t seed, double stop_tol = 1e-12) const;

    // horizon from the drift rule: smallest n with drift*n beyond the
    // threshold plus six standard deviations of the projected position
    int q_horizon_for(double threshold) const;

    const Vec& zeta() const { return zeta_; }
    const Vec& normal() const { return normal_; }
    double normal_norm() const { return normal_norm_; }
    const Vec& coordinate_exponents() const { return nu_coord_; }

private:
    const JumpModel& model_;
    Vec normal_;
    Vec zeta_;
    double normal_norm_;
    Vec tilt_;          // = normal (the vertex tilt)
    double q_drift_;    // per-step drift of the tilted projection
    double q_step_sd_;  // per-step standard deviation of the tilted projection
    Vec nu_coord_;      // coordinate Lundberg exponents (0 where unavailable)
};

struct EIntegralSettings {
    std::uint64_t p_samples = 1200;
    int p_horizon = 10000;
    std::uint64_t q_samples = 20000;
    int q_horizon = 0;  // 0: drift rule
    double stop_tol = 1e-12;

    double tangential_radius = 0.0;  // 0: from the certified tail bound
    double y_radius = 0.0;           // 0: from the certified tail bound
    int panels_tangential = 20;
    int panels_normal = 12;
    int gl_order = 4;

    // absolute certification target for the truncated tails; 0 disables
    // certification (explicit radii required)
    double tail_tol = 1e-3;

    std::uint64_t seed = 99991;
    int threads = 0;

    // test modes replacing the MC factors by the constant 1
    bool force_unit_p = false;
    bool force_unit_q = false;
};

struct EIntegralEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double tail_bound = 0.0;  // certified bound on the un-integrated mass
    double tangential_radius = 0.0;
    double y_radius = 0.0;
    EIntegralSettings settings;
};

// Quadrature of exp(-<N, v>) p(v) q(v) over the tangent half-space through
// the origin, in frame coordinates (tangential box x normal ray), with p and
// q estimated pointwise by Monte Carlo at independent node streams.
EIntegralEstimate estimate_e_integral(const HalfSpaceGeometry& geom,
                                      const EIntegralSettings& settings);

// A = E / ((2 pi)^{(d-1)/2} u_G^{d/2} sigma*_D sigma(alpha*))
PointEstimate constant_a(const LaplaceQuantities& laplace, const EIntegralEstimate& e_est,
                         double u_g, int dim);

enum class AProvenance { estimated, fitted };

struct AsymptoticModel {
    double d_g = 0.0;
    double a = 0.0;
    int dim = 2;
    AProvenance provenance = AProvenance::estimated;
};

// A s^{-(d-1)/2} exp(-s D)
double predict(const AsymptoticModel& model, double s);

struct FitResult {
    double a_fit = 0.0;
    double d_fit = 0.0;
    double log_a_se = 0.0;
    double d_se = 0.0;
    std::vector<double> residuals;  // in log space, per used grid point
    std::size_t n_used = 0;
};

// Weighted least squares of ln P(s) + ((d-1)/2) ln s against b - D s, with
// delta-method weights (estimate/std_error)^2.  Runs with nonpositive
// estimates or zero standard error are skipped.
FitResult fit_asymptote(const std::vector<McRun>& runs, int dim);

}  // namespace ldhit
