#include "ldhit/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ldhit {

using nlohmann::json;

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_simulate_csv(const std::vector<McRun>& runs, std::ostream& out) {
    out << "s,estimate,std_error,ci_low,ci_high,n_traj,n_hit,seed\n";
    for (const McRun& r : runs) {
        out << format_g17(r.s) << ',' << format_g17(r.estimate) << ','
            << format_g17(r.std_error) << ',' << format_g17(r.ci_low) << ','
            << format_g17(r.ci_high) << ',' << r.n_traj << ',' << r.n_hit << ',' << r.seed
            << '\n';
    }
}

std::vector<McRun> read_simulate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open simulation CSV '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("s,estimate", 0) != 0)
        throw ConfigError("'" + path + "' does not look like a simulate CSV");
    std::vector<McRun> runs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw ConfigError("malformed row in '" + path + "'");
        McRun r;
        r.s = std::stod(cells[0]);
        r.estimate = std::stod(cells[1]);
        r.std_error = std::stod(cells[2]);
        r.ci_low = std::stod(cells[3]);
        r.ci_high = std::stod(cells[4]);
        r.n_traj = std::stoull(cells[5]);
        r.n_hit = std::stoull(cells[6]);
        r.seed = std::stoull(cells[7]);
        runs.push_back(r);
    }
    return runs;
}

namespace {

json vec_to_json(const Vec& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

struct Outputs {
    std::string dir;  // empty: primary artifact to stdout

    void emit_primary(const std::string& filename, const std::string& content) const {
        if (dir.empty()) {
            std::cout << content;
            return;
        }
        write_file(filename, content);
    }

    void write_file(const std::string& filename, const std::string& content) const {
        namespace fs = std::filesystem;
        const fs::path base = dir.empty() ? fs::path(".") : fs::path(dir);
        fs::create_directories(base);
        const fs::path path = base / filename;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write '" + path.string() + "'");
        out << content;
        std::cerr << "wrote " << path.string() << "\n";
    }
};

TiltSpec resolve_tilt(const RunConfig& cfg, const RateEvaluator& ev, const MppReport& report) {
    if (cfg.tilt_is_dual_optimal) return default_tilt(ev, report);
    return user_tilt(ev.model(), cfg.tilt_lambda);
}

int cmd_rates(const RunConfig& cfg, const Outputs& outputs) {
    if (cfg.points.empty())
        throw ConfigError("field 'points' is required for the rates command");
    RateEvaluator ev(*cfg.model);
    const int d = cfg.model->dim();

    std::ostringstream csv;
    for (int i = 0; i < d; ++i) csv << "point_" << i + 1 << ',';
    csv << "Lambda,";
    for (int i = 0; i < d; ++i) csv << "lambda_" << i + 1 << ',';
    csv << "D,t,";
    for (int i = 0; i < d; ++i) csv << "lambda_opt_" << i + 1 << (i + 1 < d ? "," : "\n");

    for (const Vec& point : cfg.points) {
        if (point.size() != d) throw ConfigError("a rates point has the wrong dimension");
        const Vec lam = ev.lambda_of_alpha(point);
        const double rate = point.dot(lam) - cfg.model->cumulant(lam);
        const SecondRateResult dual = ev.second_rate_dual(point);
        for (int i = 0; i < d; ++i) csv << format_g17(point[i]) << ',';
        csv << format_g17(rate) << ',';
        for (int i = 0; i < d; ++i) csv << format_g17(lam[i]) << ',';
        csv << format_g17(dual.d) << ',' << format_g17(dual.t) << ',';
        for (int i = 0; i < d; ++i)
            csv << format_g17((*dual.lambda_opt)[i]) << (i + 1 < d ? "," : "\n");
    }
    outputs.emit_primary("rates.csv", csv.str());
    return 0;
}

int cmd_mpp(const RunConfig& cfg, const Outputs& outputs) {
    RateEvaluator ev(*cfg.model);
    const MppReport report = mpp_orthant(ev, cfg.g);

    json out;
    out["u_G"] = report.u_g;
    out["r_G"] = report.r_g;
    out["D_G"] = report.d_g;
    out["alpha_star"] = vec_to_json(report.alpha_star);
    out["N"] = vec_to_json(report.normal);
    out["zeta"] = vec_to_json(report.zeta);
    out["c3"] = {{"normal_in_orthant", report.c3.normal_in_orthant},
                 {"in_cramer_range", report.c3.in_cramer_range},
                 {"drift_negative", report.c3.drift_negative},
                 {"marginal", report.c3.marginal}};
    outputs.emit_primary("mpp.json", out.dump(2) + "\n");

    if (report.c3.marginal)
        std::cerr << "warning: a vertex-condition inequality sits inside the numerical margin "
                     "(C3Marginal); the vertex asymptotics are unreliable here\n";
    if (!report.c3.all()) {
        std::cerr << "error: the vertex condition fails; the vertex asymptotic formula is refused\n";
        return 4;
    }
    return 0;
}

std::vector<McRun> run_simulation(const RunConfig& cfg) {
    if (cfg.s_grid.empty()) throw ConfigError("field 's_grid' is required");
    RateEvaluator ev(*cfg.model);
    const MppReport report = mpp_orthant(ev, cfg.g);
    const TiltSpec tilt = resolve_tilt(cfg, ev, report);
    SimulationResult result = is_hitting_prob(*cfg.model, cfg.g, tilt, cfg.s_grid, cfg.n_traj,
                                              cfg.max_steps, cfg.seed, cfg.threads);
    if (result.weight_bound_violations > 0)
        std::cerr << "warning: " << result.weight_bound_violations
                  << " recorded weights exceeded the orthant bound\n";
    if (result.budget_warning)
        std::cerr << "warning: some grid points were hit by fewer than 99.9% of trajectories; "
                     "estimates there carry truncation bias (raise max_steps)\n";
    return result.runs;
}

int cmd_simulate(const RunConfig& cfg, const Outputs& outputs) {
    const std::vector<McRun> runs = run_simulation(cfg);
    std::ostringstream csv;
    write_simulate_csv(runs, csv);
    outputs.emit_primary("simulate.csv", csv.str());
    return 0;
}

int cmd_ruin(const RunConfig& cfg, const Outputs& outputs) {
    if (!cfg.model_is_sparre_andersen)
        throw ConfigError("the ruin command requires a sparre_andersen model");
    const std::vector<McRun> runs = run_simulation(cfg);
    std::ostringstream csv;
    write_simulate_csv(runs, csv);
    outputs.emit_primary("ruin.csv", csv.str());
    return 0;
}

int cmd_asym(const RunConfig& cfg, const Outputs& outputs) {
    RateEvaluator ev(*cfg.model);
    const MppReport report = mpp_orthant(ev, cfg.g);
    require_c3(report);
    HalfSpaceGeometry geom(ev, cfg.g, report);

    const LaplaceQuantities laplace = laplace_quantities(geom);
    EIntegralSettings mc = cfg.mc;
    if (mc.seed == 0) mc.seed = Rng::mix(cfg.seed, 0xE1);
    const EIntegralEstimate e_est = estimate_e_integral(geom, mc);
    const PointEstimate a_direct = constant_a(laplace, e_est, report.u_g, cfg.model->dim());

    std::vector<McRun> runs;
    if (!cfg.simulate_csv.empty())
        runs = read_simulate_csv(cfg.simulate_csv);
    else
        runs = run_simulation(cfg);
    const FitResult fit = fit_asymptote(runs, cfg.model->dim());

    json out;
    out["D_G"] = report.d_g;
    out["A_fitted"] = fit.a_fit;
    out["A_estimated"] = a_direct.value;
    out["A_estimated_se"] = a_direct.std_error;
    out["D_fitted"] = fit.d_fit;
    out["sigma2_D"] = laplace.sigma2_d;
    out["a_uG"] = laplace.a_ug;
    out["sigma_star_D"] = laplace.sigma_star_d;
    out["E_value"] = e_est.value;
    out["E_se"] = e_est.std_error;
    outputs.emit_primary("asym.json", out.dump(2) + "\n");

    AsymptoticModel model{report.d_g, fit.a_fit, cfg.model->dim(), AProvenance::fitted};
    std::ostringstream ratio_csv;
    ratio_csv << "s,estimate,std_error,ci_low,ci_high,predicted,ratio\n";
    std::ostringstream pred_csv;
    pred_csv << "s,predicted\n";
    for (const McRun& r : runs) {
        if (!(r.s > 0.0)) continue;
        const double pred = predict(model, r.s);
        pred_csv << format_g17(r.s) << ',' << format_g17(pred) << '\n';
        const double ratio = r.estimate > 0.0 ? pred / r.estimate
                                              : std::numeric_limits<double>::quiet_NaN();
        ratio_csv << format_g17(r.s) << ',' << format_g17(r.estimate) << ','
                  << format_g17(r.std_error) << ',' << format_g17(r.ci_low) << ','
                  << format_g17(r.ci_high) << ',' << format_g17(pred) << ','
                  << format_g17(ratio) << '\n';
    }
    outputs.write_file("asym_ratio.csv", ratio_csv.str());
    outputs.write_file("asym_prediction.csv", pred_csv.str());
    return 0;
}

int dispatch(const std::string& command, const RunConfig& cfg, const Outputs& outputs) {
    if (command == "rates") return cmd_rates(cfg, outputs);
    if (command == "mpp") return cmd_mpp(cfg, outputs);
    if (command == "simulate") return cmd_simulate(cfg, outputs);
    if (command == "asym") return cmd_asym(cfg, outputs);
    if (command == "ruin") return cmd_ruin(cfg, outputs);
    throw ConfigError("unknown command '" + command + "'");
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const NoLargeDeviationRegime*>(&e) || dynamic_cast<const C3Violated*>(&e) ||
        dynamic_cast<const C3Marginal*>(&e))
        return 4;
    if (dynamic_cast<const DegenerateFit*>(&e)) return 5;
    return 3;  // solver family
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"exact large-deviation asymptotics and importance-sampling estimation of "
                 "multivariate orthant-hitting (simultaneous ruin) probabilities"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::int64_t seed_override = -1;
    int threads_override = -1;

    app.add_option("--config", config_path, "path to the JSON run configuration")->required();
    app.add_option("--seed", seed_override, "override the config seed");
    app.add_option("--threads", threads_override,
                   "worker cap (0 = auto; env LDHIT_THREADS is the fallback)");
    app.add_option("--out", out_dir, "output directory (default: primary artifact to stdout)");

    for (const char* name : {"rates", "mpp", "simulate", "asym", "ruin"}) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (threads_override >= 0) {
            cfg.threads = threads_override;
            cfg.mc.threads = threads_override;
        }
        Outputs outputs;
        outputs.dir = out_dir.empty() ? cfg.output_dir : out_dir;
        return dispatch(app.get_subcommands().front()->get_name(), cfg, outputs);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> argv_storage = args;
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>("ldhit"));
    for (auto& a : argv_storage) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ldhit
