#include "ldhit/config.hpp"

#include <fstream>

namespace ldhit {

using nlohmann::json;

namespace {

const json& require_field(const json& j, const std::string& key, const std::string& context) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing field '" + context + key + "'");
    return *it;
}

double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError("field '" + where + "' must be a number");
    return j.get<double>();
}

Vec as_vector(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError("field '" + where + "' must be a nonempty array");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = as_number(j[i], where);
    return v;
}

Mat as_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError("field '" + where + "' must be a nonempty array of rows");
    const std::size_t rows = j.size();
    Mat m;
    for (std::size_t r = 0; r < rows; ++r) {
        const Vec row = as_vector(j[r], where);
        if (r == 0) m.resize(rows, row.size());
        if (row.size() != m.cols()) throw ConfigError("field '" + where + "' has ragged rows");
        m.row(static_cast<int>(r)) = row;
    }
    return m;
}

std::shared_ptr<const JumpModel> build_claims(const json& spec) {
    const std::string type = require_field(spec, "type", "model.claims.").get<std::string>();
    if (type == "proportional_exp") {
        return std::make_shared<ProportionalExpClaims>(
            as_vector(require_field(spec, "weights", "model.claims."), "model.claims.weights"),
            as_number(require_field(spec, "rate", "model.claims."), "model.claims.rate"));
    }
    if (type == "independent_exp") {
        return std::make_shared<IndependentExpClaims>(
            as_vector(require_field(spec, "rates", "model.claims."), "model.claims.rates"));
    }
    if (type == "deterministic") {
        return std::make_shared<DeterministicJump>(
            as_vector(require_field(spec, "value", "model.claims."), "model.claims.value"));
    }
    throw ConfigError("unknown claims type '" + type + "'");
}

std::shared_ptr<const InterarrivalModel> build_interarrival(const json& spec) {
    const std::string type = require_field(spec, "type", "model.interarrival.").get<std::string>();
    if (type == "exponential") {
        return std::make_shared<ExponentialInterarrival>(
            as_number(require_field(spec, "rate", "model.interarrival."), "model.interarrival.rate"));
    }
    if (type == "deterministic") {
        return std::make_shared<DeterministicInterarrival>(
            as_number(require_field(spec, "value", "model.interarrival."), "model.interarrival.value"));
    }
    if (type == "gamma") {
        return std::make_shared<GammaInterarrival>(
            as_number(require_field(spec, "shape", "model.interarrival."), "model.interarrival.shape"),
            as_number(require_field(spec, "rate", "model.interarrival."), "model.interarrival.rate"));
    }
    throw ConfigError("unknown interarrival type '" + type + "'");
}

}  // namespace

std::shared_ptr<const JumpModel> build_model(const json& spec) {
    if (!spec.is_object()) throw ConfigError("field 'model' must be an object");
    const std::string type = require_field(spec, "type", "model.").get<std::string>();
    if (type == "gaussian") {
        return std::make_shared<GaussianJumpModel>(
            as_vector(require_field(spec, "mu", "model."), "model.mu"),
            as_matrix(require_field(spec, "sigma", "model."), "model.sigma"));
    }
    if (type == "sparre_andersen") {
        return build_sparre_andersen(
            as_vector(require_field(spec, "premium", "model."), "model.premium"),
            build_claims(require_field(spec, "claims", "model.")),
            build_interarrival(require_field(spec, "interarrival", "model.")));
    }
    throw ConfigError("unknown model type '" + type + "'");
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be an object");
    RunConfig cfg;

    cfg.model = build_model(require_field(j, "model", ""));
    cfg.model_is_sparre_andersen = j["model"]["type"] == "sparre_andersen";

    cfg.g = as_vector(require_field(j, "g", ""), "g");
    if ((cfg.g.array() <= 0.0).any()) throw ConfigError("field 'g' must be strictly positive");
    if (cfg.g.size() != cfg.model->dim())
        throw ConfigError("field 'g' does not match the model dimension");

    if (auto it = j.find("s_grid"); it != j.end()) {
        const json& sg = *it;
        if (sg.is_array()) {
            for (const auto& v : sg) cfg.s_grid.push_back(as_number(v, "s_grid"));
        } else if (sg.is_object()) {
            if (auto vals = sg.find("values"); vals != sg.end()) {
                for (const auto& v : *vals) cfg.s_grid.push_back(as_number(v, "s_grid.values"));
            } else {
                const double start = as_number(require_field(sg, "start", "s_grid."), "s_grid.start");
                const double stop = as_number(require_field(sg, "stop", "s_grid."), "s_grid.stop");
                const double step = as_number(require_field(sg, "step", "s_grid."), "s_grid.step");
                if (!(step > 0.0)) throw ConfigError("field 's_grid.step' must be positive");
                if (stop < start) throw ConfigError("field 's_grid.stop' must be >= start");
                const int n = static_cast<int>(std::floor((stop - start) / step + 0.5)) + 1;
                for (int k = 0; k < n; ++k) cfg.s_grid.push_back(start + step * k);
            }
        } else {
            throw ConfigError("field 's_grid' must be an array or {start, stop, step}");
        }
        if (!std::is_sorted(cfg.s_grid.begin(), cfg.s_grid.end()))
            throw ConfigError("field 's_grid' must be sorted ascending");
    }

    if (auto it = j.find("n_traj"); it != j.end()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() <= 0)
            throw ConfigError("field 'n_traj' must be a positive integer");
        cfg.n_traj = it->get<std::uint64_t>();
    }
    if (auto it = j.find("max_steps"); it != j.end()) {
        if (!it->is_number_integer() || it->get<int>() <= 0)
            throw ConfigError("field 'max_steps' must be a positive integer");
        cfg.max_steps = it->get<int>();
    }
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
            throw ConfigError("field 'seed' must be a nonnegative integer");
        cfg.seed = it->get<std::uint64_t>();
    }
    if (auto it = j.find("threads"); it != j.end()) {
        if (!it->is_number_integer() || it->get<int>() < 0)
            throw ConfigError("field 'threads' must be a nonnegative integer");
        cfg.threads = it->get<int>();
    }

    if (auto it = j.find("tilt"); it != j.end()) {
        if (it->is_string()) {
            if (it->get<std::string>() != "dual_optimal")
                throw ConfigError("field 'tilt' must be \"dual_optimal\" or {\"lambda\": [...]}");
            cfg.tilt_is_dual_optimal = true;
        } else if (it->is_object()) {
            cfg.tilt_lambda = as_vector(require_field(*it, "lambda", "tilt."), "tilt.lambda");
            cfg.tilt_is_dual_optimal = false;
        } else {
            throw ConfigError("field 'tilt' must be \"dual_optimal\" or {\"lambda\": [...]}");
        }
    }

    if (auto it = j.find("points"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("field 'points' must be an array of vectors");
        for (const auto& p : *it) cfg.points.push_back(as_vector(p, "points"));
    }

    cfg.mc.seed = 0;  // sentinel: derive the estimation seed from the run seed
    if (auto it = j.find("mc"); it != j.end()) {
        const json& mc = *it;
        auto u64 = [&](const char* key, std::uint64_t dflt) -> std::uint64_t {
            auto f = mc.find(key);
            if (f == mc.end()) return dflt;
            if (!f->is_number_integer() || f->get<std::int64_t>() <= 0)
                throw ConfigError(std::string("field 'mc.") + key + "' must be a positive integer");
            return f->get<std::uint64_t>();
        };
        auto num = [&](const char* key, double dflt) -> double {
            auto f = mc.find(key);
            return f == mc.end() ? dflt : as_number(*f, std::string("mc.") + key);
        };
        auto integer = [&](const char* key, int dflt) -> int {
            auto f = mc.find(key);
            if (f == mc.end()) return dflt;
            if (!f->is_number_integer()) throw ConfigError(std::string("field 'mc.") + key + "' must be an integer");
            return f->get<int>();
        };
        cfg.mc.p_samples = u64("p_samples", cfg.mc.p_samples);
        cfg.mc.p_horizon = integer("p_horizon", cfg.mc.p_horizon);
        cfg.mc.q_samples = u64("q_samples", cfg.mc.q_samples);
        cfg.mc.q_horizon = integer("q_horizon", cfg.mc.q_horizon);
        cfg.mc.stop_tol = num("stop_tol", cfg.mc.stop_tol);
        cfg.mc.tangential_radius = num("tangential_radius", cfg.mc.tangential_radius);
        cfg.mc.y_radius = num("y_radius", cfg.mc.y_radius);
        cfg.mc.panels_tangential = integer("panels_tangential", cfg.mc.panels_tangential);
        cfg.mc.panels_normal = integer("panels_normal", cfg.mc.panels_normal);
        cfg.mc.gl_order = integer("gl_order", cfg.mc.gl_order);
        cfg.mc.tail_tol = num("tail_tol", cfg.mc.tail_tol);
        if (auto f = mc.find("e_seed"); f != mc.end()) cfg.mc.seed = f->get<std::uint64_t>();
    }
    cfg.mc.threads = cfg.threads;

    if (auto it = j.find("output_dir"); it != j.end()) cfg.output_dir = it->get<std::string>();
    if (auto it = j.find("simulate_csv"); it != j.end()) cfg.simulate_csv = it->get<std::string>();
    return cfg;
}

}  // namespace ldhit
