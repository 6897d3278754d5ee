#include "ldhit/models.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace ldhit {

namespace {

void require_finite(const Vec& v, const char* what) {
    if (!v.allFinite()) throw ConfigError(std::string(what) + " must be finite");
}

}  // namespace

// ---------------------------------------------------------------------------
// Gaussian

GaussianJumpModel::GaussianJumpModel(Vec mu, Mat sigma)
    : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    require_finite(mu_, "mu");
    if (sigma_.rows() != sigma_.cols() || sigma_.rows() != mu_.size())
        throw ConfigError("sigma must be square with the dimension of mu");
    if (!sigma_.isApprox(sigma_.transpose(), 1e-12))
        throw ConfigError("sigma must be symmetric");
    Eigen::LLT<Mat> llt(sigma_);
    if (llt.info() != Eigen::Success)
        throw ConfigError("sigma must be positive definite");
    chol_ = llt.matrixL();
}

double GaussianJumpModel::cumulant(const Vec& lambda) const {
    check_dim(lambda);
    return mu_.dot(lambda) + 0.5 * lambda.dot(sigma_ * lambda);
}

Vec GaussianJumpModel::cumulant_grad(const Vec& lambda) const {
    check_dim(lambda);
    return mu_ + sigma_ * lambda;
}

Mat GaussianJumpModel::cumulant_hess(const Vec& lambda) const {
    check_dim(lambda);
    return sigma_;
}

Vec GaussianJumpModel::sample(Rng& rng) const {
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) z[i] = rng.normal();
    return mu_ + chol_ * z;
}

Vec GaussianJumpModel::sample_tilted(const Vec& lambda, Rng& rng) const {
    check_dim(lambda);
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) z[i] = rng.normal();
    return mu_ + sigma_ * lambda + chol_ * z;
}

// ---------------------------------------------------------------------------
// Exponential claim families

ProportionalExpClaims::ProportionalExpClaims(Vec weights, double rate)
    : weights_(std::move(weights)), rate_(rate) {
    require_finite(weights_, "weights");
    if ((weights_.array() < 0.0).any()) throw ConfigError("claim weights must be nonnegative");
    if (!(rate_ > 0.0)) throw ConfigError("claim rate must be positive");
}

double ProportionalExpClaims::cumulant(const Vec& lambda) const {
    check_dim(lambda);
    const double s = weights_.dot(lambda);
    if (s >= rate_) throw DomainError("tilt outside MGF domain of exponential claims");
    return std::log(rate_ / (rate_ - s));
}

Vec ProportionalExpClaims::cumulant_grad(const Vec& lambda) const {
    check_dim(lambda);
    const double s = weights_.dot(lambda);
    if (s >= rate_) throw DomainError("tilt outside MGF domain of exponential claims");
    return weights_ / (rate_ - s);
}

Mat ProportionalExpClaims::cumulant_hess(const Vec& lambda) const {
    check_dim(lambda);
    const double s = weights_.dot(lambda);
    if (s >= rate_) throw DomainError("tilt outside MGF domain of exponential claims");
    const double f = 1.0 / ((rate_ - s) * (rate_ - s));
    return f * (weights_ * weights_.transpose());
}

Vec ProportionalExpClaims::sample_tilted(const Vec& lambda, Rng& rng) const {
    check_dim(lambda);
    const double s = weights_.dot(lambda);
    if (s >= rate_) throw DomainError("tilt outside MGF domain of exponential claims");
    return weights_ * rng.exponential(rate_ - s);
}

IndependentExpClaims::IndependentExpClaims(Vec rates) : rates_(std::move(rates)) {
    require_finite(rates_, "rates");
    if ((rates_.array() <= 0.0).any()) throw ConfigError("claim rates must be positive");
}

double IndependentExpClaims::cumulant(const Vec& lambda) const {
    check_dim(lambda);
    if (!in_mgf_domain(lambda)) throw DomainError("tilt outside MGF domain of exponential claims");
    return -(1.0 - lambda.array() / rates_.array()).log().sum();
}

Vec IndependentExpClaims::cumulant_grad(const Vec& lambda) const {
    check_dim(lambda);
    if (!in_mgf_domain(lambda)) throw DomainError("tilt outside MGF domain of exponential claims");
    return (rates_ - lambda).cwiseInverse();
}

Mat IndependentExpClaims::cumulant_hess(const Vec& lambda) const {
    check_dim(lambda);
    if (!in_mgf_domain(lambda)) throw DomainError("tilt outside MGF domain of exponential claims");
    return (rates_ - lambda).cwiseAbs2().cwiseInverse().asDiagonal();
}

Vec IndependentExpClaims::sample(Rng& rng) const {
    Vec out(dim());
    for (int i = 0; i < dim(); ++i) out[i] = rng.exponential(rates_[i]);
    return out;
}

Vec IndependentExpClaims::sample_tilted(const Vec& lambda, Rng& rng) const {
    check_dim(lambda);
    if (!in_mgf_domain(lambda)) throw DomainError("tilt outside MGF domain of exponential claims");
    Vec out(dim());
    for (int i = 0; i < dim(); ++i) out[i] = rng.exponential(rates_[i] - lambda[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Interarrival models

ExponentialInterarrival::ExponentialInterarrival(double rate) : rate_(rate) {
    if (!(rate_ > 0.0)) throw ConfigError("interarrival rate must be positive");
}

double ExponentialInterarrival::log_mgf(double theta) const {
    if (theta >= rate_) throw DomainError("theta outside interarrival MGF domain");
    return std::log(rate_ / (rate_ - theta));
}

double ExponentialInterarrival::log_mgf_d1(double theta) const {
    if (theta >= rate_) throw DomainError("theta outside interarrival MGF domain");
    return 1.0 / (rate_ - theta);
}

double ExponentialInterarrival::log_mgf_d2(double theta) const {
    if (theta >= rate_) throw DomainError("theta outside interarrival MGF domain");
    return 1.0 / ((rate_ - theta) * (rate_ - theta));
}

double ExponentialInterarrival::sample_tilted(double theta, Rng& rng) const {
    if (theta >= rate_) throw DomainError("theta outside interarrival MGF domain");
    return rng.exponential(rate_ - theta);
}

DeterministicInterarrival::DeterministicInterarrival(double value) : value_(value) {
    if (!(value_ > 0.0)) throw ConfigError("interarrival time must be positive");
}

GammaInterarrival::GammaInterarrival(double shape, double rate) : shape_(shape), rate_(rate) {
    if (!(shape_ > 0.0) || !(rate_ > 0.0))
        throw ConfigError("gamma interarrival shape and rate must be positive");
}

double GammaInterarrival::log_mgf(double theta) const {
    if (theta >= rate_) throw DomainError("theta outside interarrival MGF domain");
    return -shape_ * std::log1p(-theta / rate_);
}

double GammaInterarrival::log_mgf_d1(double theta) const {
    if (theta >= rate_) throw DomainError("theta outside interarrival MGF domain");
    return shape_ / (rate_ - theta);
}

double GammaInterarrival::log_mgf_d2(double theta) const {
    if (theta >= rate_) throw DomainError("theta outside interarrival MGF domain");
    return shape_ / ((rate_ - theta) * (rate_ - theta));
}

double GammaInterarrival::sample_tilted(double theta, Rng& rng) const {
    if (theta >= rate_) throw DomainError("theta outside interarrival MGF domain");
    return rng.gamma(shape_) / (rate_ - theta);
}

// ---------------------------------------------------------------------------
// Sparre Andersen composite

SparreAndersenModel::SparreAndersenModel(Vec premium,
                                         std::shared_ptr<const JumpModel> claims,
                                         std::shared_ptr<const InterarrivalModel> interarrival)
    : premium_(std::move(premium)),
      claims_(std::move(claims)),
      interarrival_(std::move(interarrival)) {
    if (!claims_ || !interarrival_) throw ConfigError("claims and interarrival models required");
    require_finite(premium_, "premium");
    if ((premium_.array() <= 0.0).any()) throw ConfigError("premium rates must be strictly positive");
    if (claims_->dim() != premium_.size())
        throw ConfigError("claims dimension does not match premium vector");
}

Vec SparreAndersenModel::mean() const {
    return claims_->mean() - premium_ * interarrival_->mean();
}

bool SparreAndersenModel::in_mgf_domain(const Vec& lambda) const {
    return lambda.size() == dim() && claims_->in_mgf_domain(lambda) &&
           interarrival_->in_mgf_domain(-lambda.dot(premium_));
}

double SparreAndersenModel::cumulant(const Vec& lambda) const {
    check_dim(lambda);
    return claims_->cumulant(lambda) + interarrival_->log_mgf(-lambda.dot(premium_));
}

Vec SparreAndersenModel::cumulant_grad(const Vec& lambda) const {
    check_dim(lambda);
    const double theta = -lambda.dot(premium_);
    return claims_->cumulant_grad(lambda) - premium_ * interarrival_->log_mgf_d1(theta);
}

Mat SparreAndersenModel::cumulant_hess(const Vec& lambda) const {
    check_dim(lambda);
    const double theta = -lambda.dot(premium_);
    return claims_->cumulant_hess(lambda) +
           interarrival_->log_mgf_d2(theta) * (premium_ * premium_.transpose());
}

Vec SparreAndersenModel::sample(Rng& rng) const {
    const double tau = interarrival_->sample(rng);
    return claims_->sample(rng) - premium_ * tau;
}

Vec SparreAndersenModel::sample_tilted(const Vec& lambda, Rng& rng) const {
    check_dim(lambda);
    if (!in_mgf_domain(lambda)) throw DomainError("tilt outside composite MGF domain");
    // independence: the tilt factorizes into a claims tilt at lambda and an
    // interarrival tilt at -<lambda, c>
    const double theta = -lambda.dot(premium_);
    const double tau = interarrival_->sample_tilted(theta, rng);
    return claims_->sample_tilted(lambda, rng) - premium_ * tau;
}

std::shared_ptr<const JumpModel> build_sparre_andersen(
    Vec premium, std::shared_ptr<const JumpModel> claims,
    std::shared_ptr<const InterarrivalModel> interarrival) {
    return std::make_shared<SparreAndersenModel>(std::move(premium), std::move(claims),
                                                 std::move(interarrival));
}

// ---------------------------------------------------------------------------

double lundberg_exponent(const JumpModel& model, const Vec& direction) {
    if (direction.size() != model.dim()) throw ConfigError("direction has wrong dimension");
    if (!(model.mean().dot(direction) < 0.0)) return 0.0;

    auto k_of = [&](double nu) -> double {
        const Vec lam = nu * direction;
        if (!model.in_mgf_domain(lam)) return std::numeric_limits<double>::quiet_NaN();
        const double k = model.cumulant(lam);
        return std::isfinite(k) ? k : std::numeric_limits<double>::quiet_NaN();
    };

    // expand until K > 0 or the domain edge cuts the search off
    double lo = 0.0, hi = 1.0;
    double k_hi = k_of(hi);
    int expansions = 0;
    while (std::isfinite(k_hi) && k_hi <= 0.0 && expansions < 200) {
        lo = hi;
        hi *= 2.0;
        k_hi = k_of(hi);
        ++expansions;
    }
    if (!std::isfinite(k_hi)) {
        // root may sit between lo and the domain edge; shrink onto it
        double edge = hi;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + edge);
            const double k = k_of(mid);
            if (std::isfinite(k)) {
                if (k > 0.0) {
                    hi = mid;
                    k_hi = k;
                    break;
                }
                lo = mid;
            } else {
                edge = mid;
            }
        }
        if (!(std::isfinite(k_hi) && k_hi > 0.0)) return 0.0;
    }
    if (k_hi <= 0.0) return 0.0;

    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double k = k_of(mid);
        if (std::isfinite(k) && k > 0.0)
            hi = mid;
        else
            lo = mid;
        if (hi - lo < 1e-14 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace ldhit
