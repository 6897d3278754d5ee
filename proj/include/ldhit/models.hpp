#pragma once

#include <Eigen/Dense>
#include <memory>

#include "ldhit/errors.hpp"
#include "ldhit/rng.hpp"

namespace ldhit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A jump distribution: cumulant K = ln psi with derivatives on the interior
// of its finiteness domain, a plain sampler and (where the family allows it)
// a sampler of the exponentially tilted distribution.
//
// Contracts: psi(0) = 1, cumulant_grad(0) = mean(), and cumulant_hess is
// symmetric positive definite on the interior of the domain for any model
// whose support is not confined to a hyperplane.  Models are immutable after
// construction and safe to share across threads; RNG state is caller-owned.
class JumpModel {
public:
    virtual ~JumpModel() = default;

    virtual int dim() const = 0;
    virtual Vec mean() const = 0;

    // membership predicate for the finiteness domain of the MGF
    virtual bool in_mgf_domain(const Vec& lambda) const = 0;

    // K(lambda) = ln E exp<lambda, xi>; throws DomainError outside the domain
    virtual double cumulant(const Vec& lambda) const = 0;
    virtual Vec cumulant_grad(const Vec& lambda) const = 0;
    virtual Mat cumulant_hess(const Vec& lambda) const = 0;

    virtual Vec sample(Rng& rng) const = 0;

    // draw from the tilted law F_lambda; lambda = 0 must reduce to sample()
    virtual Vec sample_tilted(const Vec& lambda, Rng& rng) const {
        (void)lambda;
        (void)rng;
        throw UnsupportedTilt("no tilted sampler for this model family");
    }

    double psi(const Vec& lambda) const { return std::exp(cumulant(lambda)); }

protected:
    void check_dim(const Vec& lambda) const {
        if (lambda.size() != dim()) throw ConfigError("tilt vector has wrong dimension");
    }
};

// Multivariate normal jumps.  The MGF is finite everywhere and the tilted
// law is the same Gaussian shifted to mu + Sigma*lambda.
class GaussianJumpModel final : public JumpModel {
public:
    GaussianJumpModel(Vec mu, Mat sigma);

    int dim() const override { return static_cast<int>(mu_.size()); }
    Vec mean() const override { return mu_; }
    bool in_mgf_domain(const Vec& lambda) const override { return lambda.size() == dim(); }
    double cumulant(const Vec& lambda) const override;
    Vec cumulant_grad(const Vec& lambda) const override;
    Mat cumulant_hess(const Vec& lambda) const override;
    Vec sample(Rng& rng) const override;
    Vec sample_tilted(const Vec& lambda, Rng& rng) const override;

    const Mat& covariance() const { return sigma_; }

private:
    Vec mu_;
    Mat sigma_;
    Mat chol_;  // lower Cholesky factor of sigma
};

// Deterministic jump (point mass).  Lattice; useful only as a building block
// and in degenerate-configuration tests, never as input to the rate solvers.
class DeterministicJump final : public JumpModel {
public:
    explicit DeterministicJump(Vec value) : value_(std::move(value)) {}

    int dim() const override { return static_cast<int>(value_.size()); }
    Vec mean() const override { return value_; }
    bool in_mgf_domain(const Vec& lambda) const override { return lambda.size() == dim(); }
    double cumulant(const Vec& lambda) const override { return lambda.dot(value_); }
    Vec cumulant_grad(const Vec&) const override { return value_; }
    Mat cumulant_hess(const Vec&) const override { return Mat::Zero(dim(), dim()); }
    Vec sample(Rng&) const override { return value_; }
    Vec sample_tilted(const Vec&, Rng&) const override { return value_; }

private:
    Vec value_;
};

// Claims proportional to a common exponential severity: J = weights * X,
// X ~ Exp(rate).  Tilting by lambda tilts X at <weights, lambda>.
class ProportionalExpClaims final : public JumpModel {
public:
    ProportionalExpClaims(Vec weights, double rate);

    int dim() const override { return static_cast<int>(weights_.size()); }
    Vec mean() const override { return weights_ / rate_; }
    bool in_mgf_domain(const Vec& lambda) const override {
        return lambda.size() == dim() && weights_.dot(lambda) < rate_;
    }
    double cumulant(const Vec& lambda) const override;
    Vec cumulant_grad(const Vec& lambda) const override;
    Mat cumulant_hess(const Vec& lambda) const override;
    Vec sample(Rng& rng) const override { return weights_ * rng.exponential(rate_); }
    Vec sample_tilted(const Vec& lambda, Rng& rng) const override;

private:
    Vec weights_;
    double rate_;
};

// Independent exponential claim components with per-company rates.
class IndependentExpClaims final : public JumpModel {
public:
    explicit IndependentExpClaims(Vec rates);

    int dim() const override { return static_cast<int>(rates_.size()); }
    Vec mean() const override { return rates_.cwiseInverse(); }
    bool in_mgf_domain(const Vec& lambda) const override {
        return lambda.size() == dim() && (lambda.array() < rates_.array()).all();
    }
    double cumulant(const Vec& lambda) const override;
    Vec cumulant_grad(const Vec& lambda) const override;
    Mat cumulant_hess(const Vec& lambda) const override;
    Vec sample(Rng& rng) const override;
    Vec sample_tilted(const Vec& lambda, Rng& rng) const override;

private:
    Vec rates_;
};

// Positive interarrival time with an MGF finite on (-inf, theta_max).
class InterarrivalModel {
public:
    virtual ~InterarrivalModel() = default;

    virtual double mean() const = 0;
    virtual bool in_mgf_domain(double theta) const = 0;
    virtual double log_mgf(double theta) const = 0;        // ln E exp(theta tau)
    virtual double log_mgf_d1(double theta) const = 0;
    virtual double log_mgf_d2(double theta) const = 0;
    virtual double sample(Rng& rng) const = 0;
    virtual double sample_tilted(double theta, Rng& rng) const = 0;
};

class ExponentialInterarrival final : public InterarrivalModel {
public:
    explicit ExponentialInterarrival(double rate);
    double mean() const override { return 1.0 / rate_; }
    bool in_mgf_domain(double theta) const override { return theta < rate_; }
    double log_mgf(double theta) const override;
    double log_mgf_d1(double theta) const override;
    double log_mgf_d2(double theta) const override;
    double sample(Rng& rng) const override { return rng.exponential(rate_); }
    double sample_tilted(double theta, Rng& rng) const override;

private:
    double rate_;
};

class DeterministicInterarrival final : public InterarrivalModel {
public:
    explicit DeterministicInterarrival(double value);
    double mean() const override { return value_; }
    bool in_mgf_domain(double) const override { return true; }
    double log_mgf(double theta) const override { return theta * value_; }
    double log_mgf_d1(double) const override { return value_; }
    double log_mgf_d2(double) const override { return 0.0; }
    double sample(Rng&) const override { return value_; }
    double sample_tilted(double, Rng&) const override { return value_; }

private:
    double value_;
};

class GammaInterarrival final : public InterarrivalModel {
public:
    GammaInterarrival(double shape, double rate);
    double mean() const override { return shape_ / rate_; }
    bool in_mgf_domain(double theta) const override { return theta < rate_; }
    double log_mgf(double theta) const override;
    double log_mgf_d1(double theta) const override;
    double log_mgf_d2(double theta) const override;
    double sample(Rng& rng) const override { return rng.gamma(shape_) / rate_; }
    double sample_tilted(double theta, Rng& rng) const override;

private:
    double shape_;
    double rate_;
};

// Embedded jump of a multivariate Sparre Andersen risk process:
// xi = J - c * tau with claims J independent of the interarrival time tau.
// Independence gives the product form psi_xi(lambda) = psi_J(lambda) *
// M_tau(-<lambda, c>), and the tilted law factorizes the same way.
class SparreAndersenModel final : public JumpModel {
public:
    SparreAndersenModel(Vec premium, std::shared_ptr<const JumpModel> claims,
                        std::shared_ptr<const InterarrivalModel> interarrival);

    int dim() const override { return static_cast<int>(premium_.size()); }
    Vec mean() const override;
    bool in_mgf_domain(const Vec& lambda) const override;
    double cumulant(const Vec& lambda) const override;
    Vec cumulant_grad(const Vec& lambda) const override;
    Mat cumulant_hess(const Vec& lambda) const override;
    Vec sample(Rng& rng) const override;
    Vec sample_tilted(const Vec& lambda, Rng& rng) const override;

    const Vec& premium() const { return premium_; }

private:
    Vec premium_;
    std::shared_ptr<const JumpModel> claims_;
    std::shared_ptr<const InterarrivalModel> interarrival_;
};

std::shared_ptr<const JumpModel> build_sparre_andersen(
    Vec premium, std::shared_ptr<const JumpModel> claims,
    std::shared_ptr<const InterarrivalModel> interarrival);

// Positive root of K(nu * direction) = 0, the decay exponent of the maximum
// of the one-dimensional projected walk (Lundberg).  Requires the projected
// drift <mean, direction> to be negative; returns 0 when no root is found
// inside the MGF domain.
double lundberg_exponent(const JumpModel& model, const Vec& direction);

}  // namespace ldhit
