#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ldhit/rates.hpp"
#include "test_support.hpp"

using namespace ldhit;
using namespace ldhit::testing;

namespace {

// closed forms for the Gaussian model, used as independent oracles
Vec gauss_lambda_of_alpha(const Vec& alpha) {
    return example_sigma().ldlt().solve(alpha - example_mu());
}

double gauss_rate(const Vec& alpha) {
    const Vec d = alpha - example_mu();
    return 0.5 * d.dot(example_sigma().ldlt().solve(d));
}

double gauss_t_of_g(const Vec& g) {
    const Mat inv = example_sigma().inverse();
    return std::sqrt(example_mu().dot(inv * example_mu()) / g.dot(inv * g));
}

}  // namespace

TEST_CASE("conjugate point solve") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);

    CHECK(ev.lambda_of_alpha(example_mu()).norm() < 1e-10);

    const Vec alpha = example_tilted_mean();
    const Vec lam = ev.lambda_of_alpha(alpha);
    CHECK(std::abs(lam[0] - 0.5331315) < 1e-6);
    CHECK(std::abs(lam[1] - 0.7108420) < 1e-6);
    CHECK((lam - gauss_lambda_of_alpha(alpha)).norm() < 1e-10);

    Vec a2(2);
    a2 << 0.3354102, 0.4472136;
    const Vec lam2 = ev.lambda_of_alpha(a2);
    CHECK((lam2 - gauss_lambda_of_alpha(a2)).norm() < 1e-10);
    CHECK(std::abs(lam2[0] - 0.596727) < 5e-5);
    CHECK(std::abs(lam2[1] - 0.667138) < 5e-5);

    // residual contract
    CHECK((model.cumulant_grad(lam2) - a2).norm() <= 1e-10 * (1.0 + a2.norm()));
}

TEST_CASE("first rate function values") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);

    CHECK(ev.rate(example_mu()) == doctest::Approx(0.0).epsilon(1e-12));

    const Vec g = example_g();
    CHECK(ev.rate(g) == doctest::Approx(gauss_rate(g)).epsilon(1e-12));

    const double t = gauss_t_of_g(g);
    const Vec vertex = t * g;
    CHECK(ev.rate(vertex) == doctest::Approx(gauss_rate(vertex)).epsilon(1e-12));
    CHECK(std::abs(ev.rate(vertex) - 0.498515) < 1e-4);
}

TEST_CASE("rate hessian and sigma2") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);
    const Mat inv = example_sigma().inverse();

    Vec alpha(2);
    alpha << 0.4, -0.1;
    CHECK((ev.rate_hess(alpha) - inv).norm() < 1e-10);
    CHECK(ev.sigma2(alpha) == doctest::Approx(0.672).epsilon(1e-12));

    // definition: rate_hess * cumulant_hess = identity
    const Vec lam = ev.lambda_of_alpha(alpha);
    const Mat prod = ev.rate_hess(alpha) * model.cumulant_hess(lam);
    CHECK((prod - Mat::Identity(2, 2)).norm() < 1e-8);

    // finite differences of Lambda for the composite model
    const auto sa = sa_test_model();
    RateEvaluator ev_sa(*sa);
    Vec near_mean = sa->mean();
    near_mean[0] += 0.05;
    near_mean[1] -= 0.05;
    const auto rate_fn = [&](const Vec& a) { return ev_sa.rate(a); };
    const Mat fd = fd_hessian(rate_fn, near_mean);
    const Mat hess = ev_sa.rate_hess(near_mean);
    CHECK((hess - fd).norm() <= 1e-4 * hess.norm());
}

TEST_CASE("rate gradient identity") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);
    const auto rate_fn = [&](const Vec& a) { return ev.rate(a); };
    Vec pts[3];
    pts[0] = example_g();
    pts[1] = (Vec(2) << 0.3, 0.5).finished();
    pts[2] = (Vec(2) << -0.2, 0.4).finished();
    for (const Vec& alpha : pts) {
        const Vec lam = ev.lambda_of_alpha(alpha);
        const Vec fd = fd_gradient(rate_fn, alpha);
        CHECK((lam - fd).norm() <= 1e-5 * (1.0 + lam.norm()));
    }
}

TEST_CASE("legendre transform against a dense grid search") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);

    // brute-force sup of <alpha, lambda> - K(lambda) over a lambda grid
    const int n_lam = 201;
    const double lo = -2.0, hi = 2.0;
    std::vector<Vec> lam_grid;
    lam_grid.reserve(n_lam * n_lam);
    std::vector<double> k_grid;
    k_grid.reserve(n_lam * n_lam);
    for (int i = 0; i < n_lam; ++i)
        for (int j = 0; j < n_lam; ++j) {
            Vec l(2);
            l << lo + (hi - lo) * i / (n_lam - 1.0), lo + (hi - lo) * j / (n_lam - 1.0);
            lam_grid.push_back(l);
            k_grid.push_back(model.cumulant(l));
        }

    double worst = 0.0;
    for (int a = 0; a < 21; ++a)
        for (int b = 0; b < 21; ++b) {
            Vec alpha(2);
            alpha << example_mu()[0] + a / 20.0, example_mu()[1] + b / 20.0;
            double best = -1e300;
            for (std::size_t k = 0; k < lam_grid.size(); ++k)
                best = std::max(best, alpha.dot(lam_grid[k]) - k_grid[k]);
            worst = std::max(worst, std::abs(ev.rate(alpha) - best));
        }
    CHECK(worst < 1e-3);
}

TEST_CASE("second rate function, primal route") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);

    const SecondRateResult at_mean = ev.second_rate(example_mu());
    CHECK(std::abs(at_mean.d) < 1e-12);
    CHECK(at_mean.t == doctest::Approx(1.0).epsilon(1e-6));

    const Vec g = example_g();
    const SecondRateResult at_g = ev.second_rate(g);
    const double t_closed = gauss_t_of_g(g);
    const double d_closed = gauss_rate(t_closed * g) / t_closed;
    CHECK(at_g.t == doctest::Approx(t_closed).epsilon(1e-10));
    CHECK(at_g.d == doctest::Approx(d_closed).epsilon(1e-10));
    CHECK(std::abs(at_g.d - 2.22939) < 1e-4);
    CHECK(std::abs(at_g.t - 0.2236069) < 1e-6);
    CHECK(at_g.u == doctest::Approx(4.472136).epsilon(1e-6));

    const SecondRateResult at_2g = ev.second_rate(2.0 * g);
    CHECK(at_2g.d == doctest::Approx(2.0 * at_g.d).epsilon(1e-9));
    CHECK(at_2g.t == doctest::Approx(0.5 * at_g.t).epsilon(1e-9));
    CHECK(std::abs(at_2g.d - 4.45874) < 3e-4);
}

TEST_CASE("second rate function, dual route") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);
    const Vec g = example_g();

    const SecondRateResult dual = ev.second_rate_dual(g);
    REQUIRE(dual.lambda_opt.has_value());
    CHECK(std::abs(model.psi(*dual.lambda_opt) - 1.0) < 1e-8);
    CHECK(std::abs((*dual.lambda_opt)[0] - 0.596727) < 5e-5);
    CHECK(std::abs((*dual.lambda_opt)[1] - 0.667138) < 5e-5);
    CHECK(dual.d == doctest::Approx(dual.lambda_opt->dot(g)).epsilon(1e-12));
    CHECK(std::abs(dual.d - 2.22939) < 1e-4);

    const SecondRateResult primal = ev.second_rate(g);
    CHECK(std::abs(dual.d - primal.d) <= 1e-6 * (1.0 + primal.d));

    // the constraint set does not depend on v: scaling v scales D only
    const SecondRateResult scaled = ev.second_rate_dual(3.0 * g);
    CHECK((*scaled.lambda_opt - *dual.lambda_opt).norm() < 1e-8);
    CHECK(scaled.d == doctest::Approx(3.0 * dual.d).epsilon(1e-10));
}

TEST_CASE("primal and dual agree on random directions") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);
    Rng rng(42);
    int tested = 0;
    while (tested < 20) {
        Vec v(2);
        v << rng.normal(), rng.normal();
        if (v.norm() < 0.3) continue;
        const SecondRateResult p = ev.second_rate(v);
        const SecondRateResult d = ev.second_rate_dual(v);
        CHECK(std::abs(p.d - d.d) <= 1e-6 * (1.0 + p.d));
        ++tested;
    }
}

TEST_CASE("second rate homogeneity and convexity") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);
    Rng rng(4242);

    for (const double c : {0.5, 2.0, 7.0}) {
        const Vec v = example_g();
        const double dv = ev.second_rate(v).d;
        const double dcv = ev.second_rate(c * v).d;
        CHECK(std::abs(dcv - c * dv) <= 1e-9 * (1.0 + c * dv));
    }

    for (int rep = 0; rep < 20; ++rep) {
        Vec v1(2), v2(2);
        v1 << 1.0 + rng.uniform(), 1.0 + rng.uniform();
        v2 << 1.0 + rng.uniform(), 1.0 + rng.uniform();
        const double a = rng.uniform();
        const double lhs = ev.second_rate(a * v1 + (1.0 - a) * v2).d;
        const double rhs = a * ev.second_rate(v1).d + (1.0 - a) * ev.second_rate(v2).d;
        CHECK(lhs <= rhs + 1e-9);
    }
}

TEST_CASE("time-scaled rate") {
    const GaussianJumpModel model = example_model();
    RateEvaluator ev(model);
    const Vec g = example_g();
    const SecondRateResult sr = ev.second_rate(g);

    CHECK(ev.d_u(g, sr.u) == doctest::Approx(sr.d).epsilon(1e-9));
    CHECK(std::abs(ev.d_u(g, 4.472136) - 2.22939) < 1e-4);
    CHECK(ev.d_u(example_mu(), 1.0) == doctest::Approx(0.0).epsilon(1e-12));

    // strict interior minimum in u
    CHECK(ev.d_u(g, sr.u + 0.5) > sr.d + 1e-4);
    CHECK(ev.d_u(g, sr.u - 0.5) > sr.d + 1e-4);

    // convexity of u Lambda(v/u) in (u, v) along random chords
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        Vec v1(2), v2(2);
        v1 << 0.5 + rng.uniform(), 0.5 + rng.uniform();
        v2 << 0.5 + rng.uniform(), 0.5 + rng.uniform();
        const double u1 = 0.5 + 2.0 * rng.uniform(), u2 = 0.5 + 2.0 * rng.uniform();
        const double a = rng.uniform();
        const double lhs = ev.d_u(a * v1 + (1.0 - a) * v2, a * u1 + (1.0 - a) * u2);
        const double rhs = a * ev.d_u(v1, u1) + (1.0 - a) * ev.d_u(v2, u2);
        CHECK(lhs <= rhs + 1e-9);
    }
}

TEST_CASE("points outside the Cramer range are rejected") {
    const auto sa = sa_test_model();
    RateEvaluator ev(*sa);
    // unreachable mean: the claims ray cannot produce this combination
    Vec alpha(2);
    alpha << -100.0, 0.5;
    CHECK_THROWS_AS(ev.lambda_of_alpha(alpha), NotInCramerRange);
}

TEST_CASE("warm start does not change results") {
    const GaussianJumpModel model = example_model();
    RateEvaluator warm(model);
    RateEvaluator cold(model, RateOptions{.warm_start = false});
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        Vec alpha(2);
        alpha << rng.normal(), rng.normal();
        CHECK((warm.lambda_of_alpha(alpha) - cold.lambda_of_alpha(alpha)).norm() < 1e-9);
    }
}
