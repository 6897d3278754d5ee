#pragma once

#include <optional>

#include "ldhit/models.hpp"

namespace ldhit {

// Output of the one-dimensional minimization of Lambda(t v)/t over t > 0.
// At the minimizer one has K(lambda(t v)) = 0, so the conjugate point there
// is also the maximizer of <lambda, v> over the unit-psi body; it is stored
// in lambda_opt when the dual route computed it.
struct SecondRateResult {
    double d = 0.0;  // D(v)
    double t = 0.0;  // minimizing t(v)
    double u = 0.0;  // 1/t(v), the most probable time per unit of v
    std::optional<Vec> lambda_opt;
};

struct RateOptions {
    double newton_tol = 1e-10;   // relative residual on grad K(lambda) = alpha
    int max_newton_iter = 100;
    double second_rate_tol = 1e-10;  // on the derivative of Lambda(t v)/t
    bool warm_start = true;
};

// First and second deviation rate functions of a jump model.
//
// Lambda(alpha) = sup_lambda { <alpha, lambda> - K(lambda) } is evaluated by
// solving grad K(lambda) = alpha with a damped Newton iteration; membership
// of alpha in the Cramer range is decided operationally by whether that
// solve converges.  D(v) = inf_{t>0} Lambda(t v)/t is solved by bracketing
// plus safeguarded Newton on the derivative, and cross-checkable against the
// dual representation sup { <lambda, v> : psi(lambda) <= 1 }.
//
// The warm-start cache makes an instance stateful: use one evaluator per
// thread, or construct with warm_start = false.
class RateEvaluator {
public:
    explicit RateEvaluator(const JumpModel& model, RateOptions opts = {});

    const JumpModel& model() const { return model_; }

    // conjugate point: the unique lambda with grad K(lambda) = alpha
    Vec lambda_of_alpha(const Vec& alpha) const;

    double rate(const Vec& alpha) const;  // Lambda(alpha)

    // Hessian of Lambda: inverse of the tilted covariance at lambda(alpha)
    Mat rate_hess(const Vec& alpha) const;

    // determinant of the tilted covariance matrix at lambda(alpha)
    double sigma2(const Vec& alpha) const;

    SecondRateResult second_rate(const Vec& v) const;
    SecondRateResult second_rate_dual(const Vec& v) const;

    // time-scaled rate u * Lambda(v / u)
    double d_u(const Vec& v, double u) const;

private:
    const JumpModel& model_;
    RateOptions opts_;
    mutable std::optional<Vec> cached_lambda_;

    // derivative of Lambda(t v)/t; nullopt when t v falls outside the range
    std::optional<double> second_rate_slope(const Vec& v, double t, double& value_out) const;
};

}  // namespace ldhit
