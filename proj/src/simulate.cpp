#include "ldhit/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "ldhit/parallel.hpp"

namespace ldhit {

namespace {

constexpr double kZ99 = 2.5758293035489004;  // 99% two-sided normal quantile
constexpr std::size_t kBlock = 1024;         // trajectories per reduction block

void finish(McRun& run) {
    run.ci_low = run.estimate - kZ99 * run.std_error;
    run.ci_high = run.estimate + kZ99 * run.std_error;
}

}  // namespace

TiltSpec default_tilt(const RateEvaluator& ev, const MppReport& report) {
    require_c3(report);
    TiltSpec tilt;
    tilt.lambda = report.normal;
    tilt.source = TiltSource::dual_optimal;
    if (std::abs(ev.model().psi(tilt.lambda) - 1.0) > 1e-6)
        throw InvalidTilt("dual-optimal tilt does not satisfy psi(lambda) = 1");
    const Vec tilted_mean = ev.model().cumulant_grad(tilt.lambda);
    if ((tilted_mean.array() <= 0.0).any())
        throw InvalidTilt("dual-optimal tilted mean does not drift into the orthant");
    return tilt;
}

TiltSpec user_tilt(const JumpModel& model, Vec lambda, double psi_tol) {
    if (lambda.size() != model.dim()) throw InvalidTilt("tilt vector has wrong dimension");
    if (!model.in_mgf_domain(lambda)) throw InvalidTilt("tilt outside the MGF domain");
    if (std::abs(model.psi(lambda) - 1.0) > psi_tol)
        throw InvalidTilt("psi(lambda) deviates from 1 beyond tolerance; estimator would be biased");
    const Vec tilted_mean = model.cumulant_grad(lambda);
    if ((tilted_mean.array() <= 0.0).any())
        throw InvalidTilt("tilted mean must drift into the open orthant for a.s. hitting");
    TiltSpec tilt;
    tilt.lambda = std::move(lambda);
    tilt.source = TiltSource::user_supplied;
    return tilt;
}

SimulationResult is_hitting_prob(const JumpModel& model, const Vec& g, const TiltSpec& tilt,
                                 const std::vector<double>& s_grid, std::uint64_t n_traj,
                                 int max_steps, std::uint64_t seed, int threads) {
    const int d = model.dim();
    if (g.size() != d) throw ConfigError("g has wrong dimension");
    if ((g.array() <= 0.0).any()) throw ConfigError("g must be strictly positive");
    if (s_grid.empty()) throw ConfigError("s_grid must be nonempty");
    if (!std::is_sorted(s_grid.begin(), s_grid.end()))
        throw ConfigError("s_grid must be sorted ascending");
    if (n_traj == 0) throw ConfigError("n_traj must be positive");
    if (tilt.lambda.size() != d) throw InvalidTilt("tilt vector has wrong dimension");
    if (std::abs(model.psi(tilt.lambda) - 1.0) > 1e-4)
        throw InvalidTilt("psi(lambda) deviates from 1 beyond 1e-4");

    const std::size_t m = s_grid.size();
    const bool orthant_tilt = (tilt.lambda.array() >= 0.0).all();
    const double lambda_dot_g = tilt.lambda.dot(g);

    const std::size_t n_blocks = (n_traj + kBlock - 1) / kBlock;
    struct Block {
        std::vector<double> sum_w, sum_w2;
        std::vector<std::uint64_t> hits;
        std::uint64_t violations = 0;
    };
    std::vector<Block> blocks(n_blocks);

    parallel_blocks(n_traj, kBlock, resolve_threads(threads),
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
        Block& blk = blocks[b];
        blk.sum_w.assign(m, 0.0);
        blk.sum_w2.assign(m, 0.0);
        blk.hits.assign(m, 0);
        Vec s_vec(d);
        for (std::size_t traj = begin; traj < end; ++traj) {
            Rng rng = Rng::stream(seed, traj);
            s_vec.setZero();
            std::size_t ptr = 0;
            // S(0) = 0 already covers every nonpositive grid entry with unit weight
            while (ptr < m && s_grid[ptr] <= 0.0) {
                blk.sum_w[ptr] += 1.0;
                blk.sum_w2[ptr] += 1.0;
                ++blk.hits[ptr];
                ++ptr;
            }
            for (int step = 0; step < max_steps && ptr < m; ++step) {
                s_vec += model.sample_tilted(tilt.lambda, rng);
                double reach = s_vec[0] / g[0];
                for (int i = 1; i < d; ++i) reach = std::min(reach, s_vec[i] / g[i]);
                if (reach < s_grid[ptr]) continue;
                const double w = std::exp(-tilt.lambda.dot(s_vec));
                while (ptr < m && s_grid[ptr] <= reach) {
                    if (orthant_tilt &&
                        w > std::exp(-s_grid[ptr] * lambda_dot_g) * (1.0 + 1e-9))
                        ++blk.violations;
                    blk.sum_w[ptr] += w;
                    blk.sum_w2[ptr] += w * w;
                    ++blk.hits[ptr];
                    ++ptr;
                }
            }
        }
    });

    // reduce in block order: totals are independent of the thread count
    std::vector<double> sum_w(m, 0.0), sum_w2(m, 0.0);
    std::vector<std::uint64_t> hits(m, 0);
    SimulationResult out;
    for (const Block& blk : blocks) {
        for (std::size_t k = 0; k < m; ++k) {
            sum_w[k] += blk.sum_w[k];
            sum_w2[k] += blk.sum_w2[k];
            hits[k] += blk.hits[k];
        }
        out.weight_bound_violations += blk.violations;
    }

    const double n = static_cast<double>(n_traj);
    out.runs.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        McRun& run = out.runs[k];
        run.s = s_grid[k];
        run.n_traj = n_traj;
        run.n_hit = hits[k];
        run.seed = seed;
        run.estimate = sum_w[k] / n;
        const double var = std::max(0.0, sum_w2[k] - n * run.estimate * run.estimate);
        run.std_error = n > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
        finish(run);
        if (static_cast<double>(hits[k]) < 0.999 * n) out.budget_warning = true;
    }
    return out;
}

McRun naive_hitting_prob(const JumpModel& model, const Vec& g, const MppReport& report, double s,
                         std::uint64_t n_traj, int horizon, std::uint64_t seed, int threads,
                         double stop_tol) {
    const int d = model.dim();
    if (g.size() != d) throw ConfigError("g has wrong dimension");
    if (n_traj == 0) throw ConfigError("n_traj must be positive");

    const Vec target = s * g;
    const Vec zeta = report.zeta;
    const double nu_zeta = report.normal.norm();  // K(||N|| zeta) = 0 exactly
    Vec nu_coord = Vec::Zero(d);
    for (int i = 0; i < d; ++i) nu_coord[i] = lundberg_exponent(model, Vec::Unit(d, i));
    const double log_margin = stop_tol > 0.0 ? -std::log(stop_tol)
                                             : std::numeric_limits<double>::infinity();

    const std::size_t n_blocks = (n_traj + kBlock - 1) / kBlock;
    std::vector<std::uint64_t> block_hits(n_blocks, 0);

    parallel_blocks(n_traj, kBlock, resolve_threads(threads),
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
        std::uint64_t local = 0;
        Vec s_vec(d);
        for (std::size_t traj = begin; traj < end; ++traj) {
            Rng rng = Rng::stream(seed, traj);
            s_vec.setZero();
            if ((s_vec.array() >= target.array()).all()) {
                ++local;
                continue;
            }
            for (int step = 0; step < horizon; ++step) {
                s_vec += model.sample(rng);
                if ((s_vec.array() >= target.array()).all()) {
                    ++local;
                    break;
                }
                // certified abandonment: remaining hitting probability is
                // bounded by exp(-max(nu gaps)) over the normal direction and
                // the negative-drift coordinates
                const double gap_zeta = (target - s_vec).dot(zeta);
                double best = nu_zeta * gap_zeta;
                for (int i = 0; i < d; ++i)
                    if (nu_coord[i] > 0.0 && s_vec[i] < target[i])
                        best = std::max(best, nu_coord[i] * (target[i] - s_vec[i]));
                if (best >= log_margin) break;
            }
        }
        block_hits[b] = local;
    });

    std::uint64_t hits = 0;
    for (std::uint64_t h : block_hits) hits += h;

    McRun run;
    run.s = s;
    run.n_traj = n_traj;
    run.n_hit = hits;
    run.seed = seed;
    const double n = static_cast<double>(n_traj);
    run.estimate = static_cast<double>(hits) / n;
    run.std_error = std::sqrt(std::max(0.0, run.estimate * (1.0 - run.estimate)) / n);
    finish(run);
    return run;
}

McRun simulate_ruin(const SparreAndersenModel& model, const Vec& u, const RuinSettings& settings) {
    if (u.size() != model.dim()) throw ConfigError("reserve vector has wrong dimension");
    if ((u.array() < 0.0).any()) throw ConfigError("reserves must be nonnegative");

    if ((u.array() == 0.0).all()) {
        // the walk starts inside the target; ruin is immediate
        McRun run;
        run.s = 0.0;
        run.estimate = 1.0;
        run.std_error = 0.0;
        run.n_traj = settings.n_traj;
        run.n_hit = settings.n_traj;
        run.seed = settings.seed;
        finish(run);
        return run;
    }
    if ((u.array() <= 0.0).any())
        throw ConfigError("mixed zero/positive reserves are not supported");

    RateEvaluator ev(model);
    const MppReport report = mpp_orthant(ev, u);
    const TiltSpec tilt = default_tilt(ev, report);
    SimulationResult res = is_hitting_prob(model, u, tilt, {1.0}, settings.n_traj,
                                           settings.max_steps, settings.seed, settings.threads);
    McRun run = res.runs.front();
    run.s = 1.0;
    return run;
}

}  // namespace ldhit
