#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldhit/asymptotics.hpp"
#include "ldhit/models.hpp"

namespace ldhit {

// Parsed run configuration.  The JSON schema is documented in the README;
// validation failures name the offending key.
struct RunConfig {
    std::shared_ptr<const JumpModel> model;
    bool model_is_sparre_andersen = false;
    Vec g;
    std::vector<double> s_grid;
    std::uint64_t n_traj = 50000;
    int max_steps = 350;
    std::uint64_t seed = 1;
    int threads = 0;

    bool tilt_is_dual_optimal = true;
    Vec tilt_lambda;  // when user-supplied

    std::vector<Vec> points;  // for the rates command

    EIntegralSettings mc;

    std::string output_dir;        // empty: primary artifact to stdout
    std::string simulate_csv;      // optional pre-computed simulation table
};

std::shared_ptr<const JumpModel> build_model(const nlohmann::json& spec);

RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& j);

}  // namespace ldhit
