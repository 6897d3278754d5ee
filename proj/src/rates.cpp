#include "ldhit/rates.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace ldhit {

namespace {

bool finite_point(const JumpModel& m, const Vec& lambda, double& k_out) {
    if (!m.in_mgf_domain(lambda)) return false;
    try {
        k_out = m.cumulant(lambda);
    } catch (const DomainError&) {
        return false;
    }
    return std::isfinite(k_out);
}

}  // namespace

RateEvaluator::RateEvaluator(const JumpModel& model, RateOptions opts)
    : model_(model), opts_(opts) {}

Vec RateEvaluator::lambda_of_alpha(const Vec& alpha) const {
    if (alpha.size() != model_.dim()) throw ConfigError("alpha has wrong dimension");

    Vec lambda = (opts_.warm_start && cached_lambda_ && cached_lambda_->size() == alpha.size())
                     ? *cached_lambda_
                     : Vec::Zero(alpha.size());
    double k;
    if (!finite_point(model_, lambda, k)) lambda = Vec::Zero(alpha.size());

    const double tol = opts_.newton_tol * (1.0 + alpha.norm());
    Vec resid = model_.cumulant_grad(lambda) - alpha;
    double r2 = resid.squaredNorm();

    for (int it = 0; it < opts_.max_newton_iter; ++it) {
        if (std::sqrt(r2) <= tol) {
            if (opts_.warm_start) cached_lambda_ = lambda;
            return lambda;
        }
        const Mat hess = model_.cumulant_hess(lambda);
        Eigen::LLT<Mat> llt(hess);
        // membership in the range is operational; a Hessian breakdown on the
        // way means the solve failed, not that the model is broken
        if (llt.info() != Eigen::Success)
            throw NotInCramerRange("cumulant Hessian broke down during the Newton solve");
        const Vec step = llt.solve(-resid);

        // backtrack on the squared residual, rejecting points outside the domain
        double a = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Vec trial = lambda + a * step;
            double k_trial;
            if (finite_point(model_, trial, k_trial)) {
                const Vec resid_trial = model_.cumulant_grad(trial) - alpha;
                const double r2_trial = resid_trial.squaredNorm();
                if (r2_trial <= (1.0 - 1e-4 * a) * r2 || r2_trial < tol * tol) {
                    lambda = trial;
                    resid = resid_trial;
                    r2 = r2_trial;
                    accepted = true;
                    break;
                }
            }
            a *= 0.5;
        }
        if (!accepted) throw NotInCramerRange("Newton line search stalled; alpha outside Cramer range");
    }
    if (std::sqrt(r2) <= tol) {
        if (opts_.warm_start) cached_lambda_ = lambda;
        return lambda;
    }
    throw NotInCramerRange("Newton iteration budget exhausted; alpha outside Cramer range");
}

double RateEvaluator::rate(const Vec& alpha) const {
    const Vec lambda = lambda_of_alpha(alpha);
    return alpha.dot(lambda) - model_.cumulant(lambda);
}

Mat RateEvaluator::rate_hess(const Vec& alpha) const {
    const Vec lambda = lambda_of_alpha(alpha);
    const Mat hess = model_.cumulant_hess(lambda);
    Eigen::LLT<Mat> llt(hess);
    if (llt.info() != Eigen::Success)
        throw SingularHessian("tilted covariance not positive definite");
    return llt.solve(Mat::Identity(hess.rows(), hess.cols()));
}

double RateEvaluator::sigma2(const Vec& alpha) const {
    const Vec lambda = lambda_of_alpha(alpha);
    const Mat hess = model_.cumulant_hess(lambda);
    const double det = hess.determinant();
    if (!(det > 0.0)) throw SingularHessian("tilted covariance has nonpositive determinant");
    return det;
}

double RateEvaluator::d_u(const Vec& v, double u) const {
    if (!(u > 0.0)) throw ConfigError("u must be positive");
    return u * rate(v / u);
}

std::optional<double> RateEvaluator::second_rate_slope(const Vec& v, double t,
                                                       double& value_out) const {
    Vec lambda;
    try {
        lambda = lambda_of_alpha(t * v);
    } catch (const Error&) {
        return std::nullopt;
    }
    const double lam_v = (t * v).dot(lambda) - model_.cumulant(lambda);  // Lambda(t v)
    value_out = lam_v / t;
    // d/dt [Lambda(t v)/t] = (<v, lambda(t v)> - Lambda(t v)/t) / t
    return (v.dot(lambda) - value_out) / t;
}

SecondRateResult RateEvaluator::second_rate(const Vec& v) const {
    if (v.size() != model_.dim()) throw ConfigError("v has wrong dimension");
    if (v.norm() == 0.0) throw ConfigError("v must be nonzero");

    // find a starting t where the solve works
    double t0 = 1.0;
    double phi0;
    std::optional<double> s0;
    for (int i = 0; i < 80; ++i) {
        s0 = second_rate_slope(v, t0, phi0);
        if (s0) break;
        t0 *= 0.5;
    }
    if (!s0) throw NoInteriorMinimum("no evaluable point on the ray");

    // bracket a sign change of the slope by geometric expansion
    double lo = t0, hi = t0, slo = *s0, shi = *s0;
    double phi_tmp;
    int budget = 200;
    while (slo > 0.0 && budget-- > 0) {
        hi = lo;
        shi = slo;
        lo *= 0.5;
        const auto s = second_rate_slope(v, lo, phi_tmp);
        if (!s) throw NoInteriorMinimum("lower bracket left the Cramer range");
        slo = *s;
    }
    budget = 200;
    while (shi < 0.0 && budget-- > 0) {
        lo = hi;
        slo = shi;
        const double next = hi * 2.0;
        const auto s = second_rate_slope(v, next, phi_tmp);
        if (!s) {
            // the range ends before the slope turns positive: creep toward the edge
            double edge = next;
            bool found = false;
            for (int i = 0; i < 60; ++i) {
                const double mid = 0.5 * (hi + edge);
                const auto sm = second_rate_slope(v, mid, phi_tmp);
                if (sm) {
                    if (*sm >= 0.0) {
                        hi = mid;
                        shi = *sm;
                        found = true;
                        break;
                    }
                    lo = hi = mid;
                    slo = shi = *sm;
                } else {
                    edge = mid;
                }
            }
            if (!found) throw NoInteriorMinimum("bracket expansion exhausted at the range boundary");
            break;
        }
        hi = next;
        shi = *s;
    }
    if (slo > 0.0 || shi < 0.0) throw NoInteriorMinimum("bracket expansion exhausted");

    // safeguarded Newton on the slope inside [lo, hi]
    double t = 0.5 * (lo + hi);
    double phi = 0.0;
    for (int it = 0; it < 200; ++it) {
        const auto s = second_rate_slope(v, t, phi);
        if (!s) throw NoInteriorMinimum("interior point left the Cramer range");
        const double slope = *s;
        if (std::abs(slope) <= opts_.second_rate_tol * (1.0 + std::abs(phi))) break;
        if (slope > 0.0)
            hi = t;
        else
            lo = t;
        // curvature of Lambda(t v)/t
        const Mat lam_hess = rate_hess(t * v);
        const double curv = v.dot(lam_hess * v) / t - 2.0 * slope / t;
        double t_next = (curv > 0.0) ? t - slope / curv : 0.5 * (lo + hi);
        if (!(t_next > lo && t_next < hi)) t_next = 0.5 * (lo + hi);
        t = t_next;
    }

    SecondRateResult out;
    second_rate_slope(v, t, phi);
    out.d = phi;
    out.t = t;
    out.u = 1.0 / t;
    return out;
}

SecondRateResult RateEvaluator::second_rate_dual(const Vec& v) const {
    SecondRateResult primal;
    try {
        primal = second_rate(v);
    } catch (const Error& e) {
        throw DualSolveFailed(std::string("primal warm start failed: ") + e.what());
    }

    // maximize <lambda, v> subject to K(lambda) = 0 via Lagrange-Newton,
    // started from the conjugate point at the primal minimizer, where the
    // constraint already holds up to the primal tolerance
    const int d = model_.dim();
    Vec lambda = lambda_of_alpha(primal.t * v);
    double tau = primal.u;  // multiplier: v = tau * grad K(lambda)

    bool converged = false;
    for (int it = 0; it < 60; ++it) {
        const Vec grad = model_.cumulant_grad(lambda);
        const double kval = model_.cumulant(lambda);
        Vec f(d + 1);
        f.head(d) = v - tau * grad;
        f[d] = kval;
        if (f.head(d).norm() <= 1e-12 * (1.0 + v.norm()) && std::abs(kval) <= 1e-12) {
            converged = true;
            break;
        }
        Mat jac = Mat::Zero(d + 1, d + 1);
        jac.topLeftCorner(d, d) = -tau * model_.cumulant_hess(lambda);
        jac.topRightCorner(d, 1) = -grad;
        jac.bottomLeftCorner(1, d) = grad.transpose();
        Eigen::FullPivLU<Mat> lu(jac);
        if (!lu.isInvertible()) throw DualSolveFailed("singular KKT system");
        const Vec step = lu.solve(-f);

        double a = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            const Vec lam_trial = lambda + a * step.head(d);
            const double tau_trial = tau + a * step[d];
            double k_trial;
            if (tau_trial > 0.0 && finite_point(model_, lam_trial, k_trial)) {
                const Vec f_trial_head = v - tau_trial * model_.cumulant_grad(lam_trial);
                const double n_new = f_trial_head.squaredNorm() + k_trial * k_trial;
                const double n_old = f.head(d).squaredNorm() + kval * kval;
                if (n_new <= (1.0 - 1e-4 * a) * n_old || n_new < 1e-28) {
                    lambda = lam_trial;
                    tau = tau_trial;
                    accepted = true;
                    break;
                }
            }
            a *= 0.5;
        }
        if (!accepted) throw DualSolveFailed("KKT line search stalled");
    }
    if (!converged) {
        const double kval = model_.cumulant(lambda);
        if (std::abs(kval) > 1e-8) throw DualSolveFailed("KKT iteration did not converge");
    }

    SecondRateResult out;
    out.d = lambda.dot(v);
    out.t = primal.t;
    out.u = primal.u;
    out.lambda_opt = lambda;

    if (std::abs(model_.psi(lambda) - 1.0) > 1e-8)
        throw DualSolveFailed("dual optimizer does not sit on the unit-psi surface");
    if (std::abs(out.d - primal.d) > 1e-6 * (1.0 + std::abs(primal.d)))
        throw DualSolveFailed("dual value disagrees with the primal infimum");
    return out;
}

}  // namespace ldhit
