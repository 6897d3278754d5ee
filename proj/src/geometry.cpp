#include "ldhit/geometry.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace ldhit {

MppReport mpp_orthant(const RateEvaluator& ev, const Vec& g, double margin) {
    if (g.size() != ev.model().dim()) throw ConfigError("g has wrong dimension");
    if ((g.array() <= 0.0).any()) throw ConfigError("target vertex g must be strictly positive");
    if ((ev.model().mean().array() >= 0.0).all())
        throw NoLargeDeviationRegime("mean jump lies in the closed positive orthant");

    const SecondRateResult sr = ev.second_rate(g);

    MppReport rep;
    rep.u_g = sr.u;
    rep.r_g = sr.t;
    rep.d_g = sr.d;
    rep.alpha_star = sr.t * g;
    rep.normal = ev.lambda_of_alpha(rep.alpha_star);
    rep.zeta = rep.normal / rep.normal.norm();

    rep.c3.in_cramer_range = true;  // the conjugate solve above converged
    const double min_component = rep.normal.minCoeff();
    rep.c3.normal_in_orthant = min_component > margin;
    if (std::abs(min_component) <= margin) rep.c3.marginal = true;

    const double drift = ev.model().mean().dot(rep.normal);
    rep.c3.drift_negative = drift < -margin;
    if (std::abs(drift) <= margin) rep.c3.marginal = true;
    return rep;
}

void require_c3(const MppReport& report) {
    if (report.c3.marginal)
        throw C3Marginal("a vertex-condition inequality sits inside the numerical margin");
    if (!report.c3.all())
        throw C3Violated("vertex condition fails: the most probable point is not at the vertex");
}

HalfSpaceGeometry::HalfSpaceGeometry(const RateEvaluator& ev, const Vec& g, MppReport report)
    : ev_(ev), g_(g), report_(std::move(report)) {
    const int d = static_cast<int>(g_.size());
    // Gram-Schmidt over the standard basis with zeta removed, in coordinate
    // order, so the frame is reproducible
    frame_ = Mat::Zero(d - 1, d);
    int rows = 0;
    for (int k = 0; k < d && rows < d - 1; ++k) {
        Vec w = Vec::Unit(d, k);
        w -= w.dot(report_.zeta) * report_.zeta;
        for (int r = 0; r < rows; ++r) w -= w.dot(frame_.row(r)) * frame_.row(r).transpose();
        const double n = w.norm();
        if (n > 1e-8) frame_.row(rows++) = w / n;
    }
    if (rows != d - 1) throw SingularFrame("failed to build a tangent frame");
}

Vec HalfSpaceGeometry::beta(double u) const {
    if (!(u > 0.0)) throw ConfigError("u must be positive");
    const Vec& normal = report_.normal;
    const double c = g_.dot(normal) / u;

    // the constrained minimizer of Lambda over <v, N> = c has a conjugate
    // point parallel to N, so it is grad K(m N) for the scalar m solving
    // <grad K(m N), N> = c; that map is strictly increasing in m
    auto h = [&](double m, double& deriv) -> double {
        const Vec lam = m * normal;
        if (!ev_.model().in_mgf_domain(lam))
            throw ConstrainedSolveFailed("scalar tilt left the MGF domain");
        deriv = normal.dot(ev_.model().cumulant_hess(lam) * normal);
        return normal.dot(ev_.model().cumulant_grad(lam)) - c;
    };

    double m = report_.u_g / u;  // exact scale guess at u = u_G
    double deriv;
    double val;
    try {
        val = h(m, deriv);
    } catch (const ConstrainedSolveFailed&) {
        m = 0.0;
        val = h(m, deriv);
    }

    // bracket the root: h is increasing in m
    double lo = m, hi = m, val_lo = val, val_hi = val;
    int budget = 200;
    while (val_lo > 0.0) {
        if (budget-- <= 0) throw ConstrainedSolveFailed("bracketing budget exhausted");
        hi = lo;
        val_hi = val_lo;
        lo -= std::max(1.0, std::abs(lo));
        val_lo = h(lo, deriv);
    }
    double step = std::max(1.0, std::abs(hi));
    while (val_hi < 0.0) {
        if (budget-- <= 0) throw ConstrainedSolveFailed("bracketing budget exhausted");
        double trial = hi + step;
        double v2;
        try {
            v2 = h(trial, deriv);
        } catch (const ConstrainedSolveFailed&) {
            step *= 0.5;
            if (step < 1e-12)
                throw ConstrainedSolveFailed("constrained minimum sits outside the MGF domain");
            continue;
        }
        lo = hi;
        val_lo = val_hi;
        hi = trial;
        val_hi = v2;
    }

    // Newton with bisection safeguard inside [lo, hi]
    m = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        val = h(m, deriv);
        if (std::abs(val) <= 1e-12 * (1.0 + std::abs(c))) break;
        if (val > 0.0)
            hi = m;
        else
            lo = m;
        double next = m - val / deriv;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        m = next;
    }
    return ev_.model().cumulant_grad(m * normal);
}

Vec HalfSpaceGeometry::kappa() const {
    const Mat a = ev_.rate_hess(report_.alpha_star);
    const Mat jajt = frame_ * a * frame_.transpose();
    Eigen::LLT<Mat> llt(jajt);
    if (llt.info() != Eigen::Success)
        throw SingularFrame("projected rate Hessian not positive definite");
    const Vec az = a * report_.zeta;                       // A zeta (A symmetric)
    const Vec y = llt.solve(frame_ * az);                  // (J A J^T)^{-1} J A zeta
    const Vec tangential = frame_.transpose() * y;         // zeta A J^T (...)^{-1} J
    return report_.r_g * ((tangential - report_.zeta) * g_.dot(report_.zeta) + g_);
}

double HalfSpaceGeometry::a_coeff() const {
    const Vec k = kappa();
    return k.dot(ev_.rate_hess(report_.alpha_star) * k);
}

double HalfSpaceGeometry::d_u_halfspace(double u) const {
    return u * ev_.rate(beta(u));
}

double HalfSpaceGeometry::d_u_derivative(double u, double rel_step) const {
    const double h = rel_step * report_.u_g;
    return (d_u_halfspace(u + h) - d_u_halfspace(u - h)) / (2.0 * h);
}

double HalfSpaceGeometry::sigma2_d(double rel_step) const {
    const double u = report_.u_g;
    auto second_diff = [&](double h) {
        return (d_u_halfspace(u + h) - 2.0 * d_u_halfspace(u) + d_u_halfspace(u - h)) / (h * h);
    };
    const double h = rel_step * u;
    const double coarse = second_diff(h);
    const double fine = second_diff(0.5 * h);
    if (!(fine > 0.0))
        throw NonPositiveCurvature("second difference of the half-space rate is not positive");
    if (std::abs(coarse - fine) > 1e-3 * std::abs(fine))
        throw NonPositiveCurvature("step-halving check failed for the curvature estimate");
    return fine;
}

}  // namespace ldhit
