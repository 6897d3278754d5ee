#pragma once

#include <cstdint>
#include <vector>

#include "ldhit/geometry.hpp"
#include "ldhit/models.hpp"

namespace ldhit {

// One Monte Carlo estimate of P(eta(sG) < infinity) at a single s.
struct McRun {
    double s = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;   // 99% normal-approximation interval
    double ci_high = 0.0;
    std::uint64_t n_traj = 0;
    std::uint64_t n_hit = 0;  // trajectories that reached sG within the step budget
    std::uint64_t seed = 0;
};

enum class TiltSource { dual_optimal, user_supplied };

// An exponential change of measure valid for the hitting estimator:
// psi(lambda) = 1 and the tilted mean drifts into the open orthant, so the
// tilted walk hits every scaled target with probability one.
struct TiltSpec {
    Vec lambda;
    TiltSource source = TiltSource::user_supplied;
};

// lambda = N(r_G), the maximizer of <lambda, g> on the unit-psi surface
TiltSpec default_tilt(const RateEvaluator& ev, const MppReport& report);

// validates a user-supplied tilt against the model (throws InvalidTilt)
TiltSpec user_tilt(const JumpModel& model, Vec lambda, double psi_tol = 1e-4);

struct SimulationResult {
    std::vector<McRun> runs;
    std::uint64_t weight_bound_violations = 0;  // must stay 0 for orthant tilts
    bool budget_warning = false;  // some s had hit fraction below 99.9%
};

// Importance-sampling estimator of s -> P(eta(sG) < infinity) over a sorted
// grid, one tilted trajectory sweep serving every grid point: at each step
// the trajectory's reach s*(n) = min_i S_i(n)/g_i is compared against the
// not-yet-hit grid entries, and each newly reached s records the weight
// exp(-<lambda, S(n)>) at its first hitting step.  Trajectories that fail to
// reach a grid point within max_steps contribute zero weight there.
//
// Identical (inputs, seed) produce identical results for any thread count.
SimulationResult is_hitting_prob(const JumpModel& model, const Vec& g, const TiltSpec& tilt,
                                 const std::vector<double>& s_grid, std::uint64_t n_traj,
                                 int max_steps, std::uint64_t seed, int threads = 0);

// Plain Monte Carlo oracle: fraction of untilted trajectories entering sG
// within the horizon.  A certified stopping rule abandons trajectories whose
// remaining hitting probability is below stop_tol (Lundberg bound along the
// level-surface normal and along coordinate axes with negative drift), so
// the downward truncation bias is at most stop_tol per trajectory plus the
// mass of paths alive at the horizon.
McRun naive_hitting_prob(const JumpModel& model, const Vec& g, const MppReport& report, double s,
                         std::uint64_t n_traj, int horizon, std::uint64_t seed, int threads = 0,
                         double stop_tol = 1e-12);

struct RuinSettings {
    std::uint64_t n_traj = 50000;
    int max_steps = 350;
    std::uint64_t seed = 1;
    int threads = 0;
};

// Simultaneous-ruin probability of the Sparre Andersen model with initial
// reserve vector u: the embedded walk hitting u + cl(Q+).  Delegates to the
// importance-sampling estimator with vertex u at scale 1.
McRun simulate_ruin(const SparreAndersenModel& model, const Vec& u, const RuinSettings& settings);

}  // namespace ldhit
