#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

using namespace ldhit;
using namespace ldhit::testing;

TEST_CASE("gaussian psi closed form") {
    const GaussianJumpModel model = example_model();
    CHECK(model.psi(Vec::Zero(2)) == doctest::Approx(1.0).epsilon(1e-14));

    // the reported tilt sits on the unit-psi surface up to its printed digits
    const double excess = model.psi(example_lambda_star()) - 1.0;
    CHECK(excess == doctest::Approx(2.6e-8).epsilon(0.03));

    // conjugate tilt of the vertex point, rounded as reported
    Vec lam(2);
    lam << 0.596727, 0.667138;
    CHECK(std::abs(model.psi(lam) - 1.0) < 1e-4);
}

TEST_CASE("gaussian cumulant derivatives") {
    const GaussianJumpModel model = example_model();
    CHECK((model.cumulant_grad(Vec::Zero(2)) - example_mu()).norm() < 1e-14);

    const Vec alpha = model.cumulant_grad(example_lambda_star());
    CHECK(std::abs(alpha[0] - 0.2874500) < 1e-6);
    CHECK(std::abs(alpha[1] - 0.4594125) < 1e-6);

    CHECK((model.cumulant_hess(Vec::Zero(2)) - example_sigma()).norm() < 1e-14);
    CHECK((model.cumulant_hess(example_lambda_star()) - example_sigma()).norm() < 1e-14);
}

TEST_CASE("cumulant gradient matches finite differences") {
    const GaussianJumpModel gauss = example_model();
    const auto sa = sa_test_model();
    auto check_model = [](const JumpModel& m, const Vec& lambda) {
        const auto k = [&](const Vec& l) { return m.cumulant(l); };
        const Vec grad = m.cumulant_grad(lambda);
        const Vec fd = fd_gradient(k, lambda);
        CHECK((grad - fd).norm() <= 1e-6 * (1.0 + grad.norm()));
    };
    Vec l1(2), l2(2), l3(2);
    l1 << 0.3, -0.2;
    l2 << -0.7, 0.5;
    l3 << 0.1, 0.1;
    check_model(gauss, l1);
    check_model(gauss, l2);
    check_model(*sa, l3);
    check_model(*sa, l1);
}

TEST_CASE("cumulant hessian matches finite differences and is positive definite") {
    const auto sa = sa_test_model();
    Vec lambda(2);
    lambda << 0.05, -0.05;
    const auto k = [&](const Vec& l) { return sa->cumulant(l); };
    const Mat hess = sa->cumulant_hess(lambda);
    const Mat fd = fd_hessian(k, lambda);
    CHECK((hess - fd).norm() <= 1e-5 * (1.0 + hess.norm()));

    Rng rng(7);
    const GaussianJumpModel gauss = example_model();
    for (int rep = 0; rep < 20; ++rep) {
        Vec l(2);
        l << rng.normal(), rng.normal();
        const Eigen::SelfAdjointEigenSolver<Mat> es(gauss.cumulant_hess(l));
        CHECK(es.eigenvalues().minCoeff() > 0.0);
        Vec ls = 0.2 * l;
        if (sa->in_mgf_domain(ls)) {
            const Eigen::SelfAdjointEigenSolver<Mat> es2(sa->cumulant_hess(ls));
            CHECK(es2.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("cumulant convexity along random chords") {
    const auto sa = sa_test_model();
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        Vec l1(2), l2(2);
        l1 << 0.4 * rng.normal(), 0.4 * rng.normal();
        l2 << 0.4 * rng.normal(), 0.4 * rng.normal();
        if (!sa->in_mgf_domain(l1) || !sa->in_mgf_domain(l2)) continue;
        const double a = rng.uniform();
        const Vec mid = a * l1 + (1.0 - a) * l2;
        CHECK(sa->cumulant(mid) <=
              a * sa->cumulant(l1) + (1.0 - a) * sa->cumulant(l2) + 1e-12);
    }
}

TEST_CASE("domain membership and errors") {
    const auto sa = sa_test_model();
    Vec inside(2), outside(2);
    inside << 0.2, 0.2;
    outside << 2.0, 0.0;  // <weights, lambda> = 1.2 >= claim rate
    CHECK(sa->in_mgf_domain(inside));
    CHECK(!sa->in_mgf_domain(outside));
    CHECK_THROWS_AS(sa->cumulant(outside), DomainError);
    CHECK_THROWS_AS(sa->cumulant_grad(outside), DomainError);

    Rng rng(1);
    CHECK_THROWS_AS(sa->sample_tilted(outside, rng), DomainError);
}

TEST_CASE("unsupported tilt reported for families without a tilted sampler") {
    struct Untiltable final : JumpModel {
        int dim() const override { return 1; }
        Vec mean() const override { return Vec::Zero(1); }
        bool in_mgf_domain(const Vec&) const override { return true; }
        double cumulant(const Vec&) const override { return 0.0; }
        Vec cumulant_grad(const Vec&) const override { return Vec::Zero(1); }
        Mat cumulant_hess(const Vec&) const override { return Mat::Identity(1, 1); }
        Vec sample(Rng&) const override { return Vec::Zero(1); }
    } model;
    Rng rng(1);
    CHECK_THROWS_AS(model.sample_tilted(Vec::Zero(1), rng), UnsupportedTilt);
}

namespace {

struct MomentStats {
    Vec mean;
    Mat cov;
    Vec mean_se;
    Mat cov_se;
};

MomentStats tilted_moments(const JumpModel& model, const Vec& lambda, std::uint64_t n,
                           std::uint64_t seed) {
    const int d = model.dim();
    std::vector<Vec> draws;
    draws.reserve(n);
    Rng rng(seed);
    Vec sum = Vec::Zero(d);
    for (std::uint64_t i = 0; i < n; ++i) {
        draws.push_back(model.sample_tilted(lambda, rng));
        sum += draws.back();
    }
    MomentStats out;
    out.mean = sum / static_cast<double>(n);
    Mat cov = Mat::Zero(d, d);
    for (const Vec& x : draws) cov += (x - out.mean) * (x - out.mean).transpose();
    out.cov = cov / static_cast<double>(n - 1);

    out.mean_se = (out.cov.diagonal() / static_cast<double>(n)).cwiseSqrt();
    out.cov_se = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double var = 0.0;
            for (const Vec& x : draws) {
                const double prod = (x[i] - out.mean[i]) * (x[j] - out.mean[j]);
                var += (prod - out.cov(i, j)) * (prod - out.cov(i, j));
            }
            out.cov_se(i, j) = std::sqrt(var / static_cast<double>(n)) /
                               std::sqrt(static_cast<double>(n));
        }
    return out;
}

}  // namespace

TEST_CASE("tilted sampling moments match the cumulant derivatives") {
    const GaussianJumpModel gauss = example_model();
    const std::uint64_t n = 100000;

    const MomentStats untilted = tilted_moments(gauss, Vec::Zero(2), n, 12345);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(untilted.mean[i] - example_mu()[i]) <= 3.0 * untilted.mean_se[i]);

    const MomentStats tilted = tilted_moments(gauss, example_lambda_star(), n, 54321);
    const Vec alpha = example_tilted_mean();
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(tilted.mean[i] - alpha[i]) <= 3.0 * tilted.mean_se[i]);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(tilted.cov(i, j) - example_sigma()(i, j)) <=
                  4.0 * tilted.cov_se(i, j));

    const auto sa = sa_test_model();
    Vec lam(2);
    lam << 0.3, 0.1;
    const MomentStats sa_tilted = tilted_moments(*sa, lam, n, 777);
    const Vec want_mean = sa->cumulant_grad(lam);
    const Mat want_cov = sa->cumulant_hess(lam);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(sa_tilted.mean[i] - want_mean[i]) <= 3.0 * sa_tilted.mean_se[i]);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(sa_tilted.cov(i, j) - want_cov(i, j)) <=
                  4.0 * sa_tilted.cov_se(i, j));
}

TEST_CASE("sparre andersen composite construction") {
    Vec c(2);
    c << 1.0, 1.0;

    // degenerate pieces give the deterministic mean
    const auto degenerate = build_sparre_andersen(
        c, std::make_shared<DeterministicJump>(Vec::Zero(2)),
        std::make_shared<DeterministicInterarrival>(1.0));
    CHECK((degenerate->mean() - Vec::Constant(2, -1.0)).norm() < 1e-15);

    Vec c2(2), w(2);
    c2 << 2.0, 1.0;
    w << 1.0, 0.5;  // E J = (1, 0.5) with rate-1 severity
    const auto linear = build_sparre_andersen(c2, std::make_shared<ProportionalExpClaims>(w, 1.0),
                                              std::make_shared<ExponentialInterarrival>(1.0));
    Vec want(2);
    want << -1.0, -0.5;
    CHECK((linear->mean() - want).norm() < 1e-15);

    Vec bad(3);
    bad << 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(build_sparre_andersen(bad, std::make_shared<ProportionalExpClaims>(w, 1.0),
                                          std::make_shared<ExponentialInterarrival>(1.0)),
                    ConfigError);
    Vec neg(2);
    neg << 1.0, -1.0;
    CHECK_THROWS_AS(build_sparre_andersen(neg, std::make_shared<ProportionalExpClaims>(w, 1.0),
                                          std::make_shared<ExponentialInterarrival>(1.0)),
                    ConfigError);
    CHECK_THROWS_AS(ProportionalExpClaims(w, -1.0), ConfigError);
}

TEST_CASE("sparre andersen product-form MGF agrees with Monte Carlo") {
    const auto sa = sa_test_model();
    Vec lambda(2);
    lambda << 0.1, 0.1;
    const double want = sa->psi(lambda);

    const std::uint64_t n = 1000000;
    Rng rng(2024);
    double sum = 0.0, sum2 = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double w = std::exp(lambda.dot(sa->sample(rng)));
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - want) <= 3.0 * se);
}

TEST_CASE("independent exponential claims with gamma interarrivals") {
    Vec c(2), rates(2);
    c << 1.4, 1.6;
    rates << 1.0, 2.0;
    const auto sa = build_sparre_andersen(
        c, std::make_shared<IndependentExpClaims>(rates),
        std::make_shared<GammaInterarrival>(2.0, 2.0));

    // mean: E J = (1, 0.5), E tau = 1
    Vec want_mean(2);
    want_mean << 1.0 - 1.4, 0.5 - 1.6;
    CHECK((sa->mean() - want_mean).norm() < 1e-14);
    CHECK((sa->cumulant_grad(Vec::Zero(2)) - want_mean).norm() < 1e-12);

    // analytic derivatives against finite differences
    Vec lam(2);
    lam << 0.2, 0.5;
    const auto k = [&](const Vec& l) { return sa->cumulant(l); };
    CHECK((sa->cumulant_grad(lam) - fd_gradient(k, lam)).norm() <=
          1e-6 * (1.0 + sa->cumulant_grad(lam).norm()));
    const Mat hess = sa->cumulant_hess(lam);
    CHECK((hess - fd_hessian(k, lam)).norm() <= 1e-5 * (1.0 + hess.norm()));

    // tilted sampling hits the tilted mean
    Rng rng(404);
    const std::uint64_t n = 200000;
    Vec sum = Vec::Zero(2);
    for (std::uint64_t i = 0; i < n; ++i) sum += sa->sample_tilted(lam, rng);
    const Vec mean = sum / static_cast<double>(n);
    const Vec want = sa->cumulant_grad(lam);
    const Vec se = (hess.diagonal() / static_cast<double>(n)).cwiseSqrt();
    for (int i = 0; i < 2; ++i) CHECK(std::abs(mean[i] - want[i]) <= 4.0 * se[i]);

    // domain edge: claims component 1 requires lambda_1 < 1
    Vec outside(2);
    outside << 1.1, 0.0;
    CHECK(!sa->in_mgf_domain(outside));
    CHECK_THROWS_AS(sa->cumulant(outside), DomainError);
}

TEST_CASE("lundberg exponent") {
    const GaussianJumpModel gauss = example_model();
    // for a N(m, v) projection the root of K is -2m/v
    const double nu1 = lundberg_exponent(gauss, Vec::Unit(2, 0));
    const double nu2 = lundberg_exponent(gauss, Vec::Unit(2, 1));
    CHECK(nu1 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(nu2 == doctest::Approx(0.75).epsilon(1e-10));

    // positive-drift directions carry no exponent
    CHECK(lundberg_exponent(gauss, -Vec::Unit(2, 0)) == 0.0);
}
