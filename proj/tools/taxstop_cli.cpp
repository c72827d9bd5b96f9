#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "taxstop/analysis.hpp"
#include "taxstop/io.hpp"
#include "taxstop/montecarlo.hpp"
#include "taxstop/sigma0.hpp"

namespace {

using nlohmann::json;
using namespace taxstop;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitDegenerate = 4;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
        out << text << "\n";
    }
}

int cmd_solve(const std::string& config_path, const std::string& out_path) {
    const io::RunConfig config = io::load_config(config_path);
    emit(io::result_document(config).dump(2), out_path);
    return kExitOk;
}

int cmd_boundary(const std::string& config_path, const std::string& csv_path) {
    const io::RunConfig config = io::load_config(config_path);
    if (classify_regime(config.spec) != Regime::FreeBoundary) {
        std::cerr << "boundary: regime '" << to_string(classify_regime(config.spec))
                  << "' has no free boundary (sentinel "
                  << (classify_regime(config.spec) == Regime::SellImmediately ? "+inf" : "0")
                  << ")\n";
        return kExitDegenerate;
    }
    const auto sol = analysis::solve(config.spec, config.grid);
    const std::string csv = io::boundary_to_csv(sol.boundary);
    if (csv_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + csv_path + "'");
        out << csv;
    }
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& policy_name,
                 int paths_override, long long seed_override, const std::string& out_path) {
    io::RunConfig config = io::load_config(config_path);
    if (paths_override > 0) config.mc.n_paths = paths_override;
    if (seed_override >= 0) config.mc.seed = static_cast<std::uint64_t>(seed_override);
    if (config.mc.n_paths % 2 != 0)
        throw std::invalid_argument("config error at 'mc.n_paths': must be even");

    mc::StoppingPolicy policy;
    if (policy_name == "now") {
        policy = mc::StopAt{0.0};
    } else if (policy_name == "maturity") {
        policy = mc::StopAt{config.spec.horizon_t};
    } else {
        const auto sol = analysis::solve(config.spec, config.grid);
        policy = mc::BoundaryPolicy{sol.boundary};
    }
    const auto est = mc::evaluate_policy_streaming(config.spec, policy, config.mc.n_paths,
                                                   config.mc.n_steps, config.mc.seed,
                                                   config.mc.threads);
    emit(io::estimate_to_json(est, policy_name).dump(2), out_path);
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& sigmas,
              const std::string& out_path, const std::string& boundary_dir) {
    const io::RunConfig config = io::load_config(config_path);
    for (double s : sigmas)
        if (s < 0.0) throw std::invalid_argument("config error at '--sigma': values must be >= 0");
    const auto report = analysis::sigma_sweep(config.spec, sigmas, config.grid);
    emit(io::sweep_to_json(report).dump(2), out_path);
    if (!boundary_dir.empty()) {
        for (const auto& p : report.points) {
            if (!p.solved) continue;
            char name[64];
            std::snprintf(name, sizeof name, "/boundary_sigma_%.6g.csv", p.sigma);
            std::ofstream out(boundary_dir + name, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write into '" + boundary_dir + "'");
            out << io::boundary_to_csv(p.boundary);
        }
    }
    return kExitOk;
}

int cmd_oracle(const std::string& config_path, const std::string& out_path) {
    const io::RunConfig config = io::load_config(config_path);
    ProblemSpec spec = config.spec;
    if (classify_regime(spec) != Regime::FreeBoundary) {
        // alpha -> 0 sends the boundary to 0; degenerate regimes have no curve
        if (spec.tax.alpha == 0.0 && classify_regime(spec) == Regime::HoldToMaturity) {
            json doc = {{"regime", to_string(classify_regime(spec))},
                        {"boundary", {{"t", json::array()}, {"level", json::array()}}},
                        {"note", "boundary identically 0 for alpha = 0"}};
            emit(doc.dump(2), out_path);
            return kExitOk;
        }
        std::cerr << "oracle: regime '" << to_string(classify_regime(spec))
                  << "' stops everywhere; no boundary curve\n";
        return kExitDegenerate;
    }
    const int nt = config.grid.n_t;
    json t = json::array(), level = json::array();
    for (int i = 0; i < nt; ++i) {
        const double ti = spec.horizon_t * i / nt;
        t.push_back(ti);
        level.push_back(sigma0::boundary(ti, spec));
    }
    json doc = {{"regime", to_string(classify_regime(spec))},
                {"threshold_f", threshold_f(spec)},
                {"boundary", {{"t", t}, {"level", level}}},
                {"value_at_x0", sigma0::value(0.0, spec.x0, spec)},
                {"stop_now_at_x0", sigma0::decide(0.0, spec.x0, spec) ==
                                       sigma0::Decision::StopNow}};
    emit(doc.dump(2), out_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal stock-selling under linear capital gains taxes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", taxstop::io::kVersion);

    std::string config_path, out_path, csv_path, policy = "boundary", boundary_dir;
    int paths_override = 0;
    long long seed_override = -1;
    std::vector<double> sigmas;

    auto* solve = app.add_subcommand("solve", "full solve, result document as JSON");
    solve->add_option("config", config_path, "JSON config file")->required();
    solve->add_option("--out", out_path, "write to file instead of stdout");

    auto* boundary = app.add_subcommand("boundary", "exercise boundary as CSV");
    boundary->add_option("config", config_path)->required();
    boundary->add_option("--csv", csv_path, "output CSV path (default stdout)");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo policy evaluation");
    simulate->add_option("config", config_path)->required();
    simulate->add_option("--policy", policy, "now | maturity | boundary")
        ->check(CLI::IsMember({"now", "maturity", "boundary"}));
    simulate->add_option("--paths", paths_override, "override mc.n_paths");
    simulate->add_option("--seed", seed_override, "override mc.seed");
    simulate->add_option("--out", out_path);

    auto* sweep = app.add_subcommand("sweep", "volatility sweep with monotonicity verdicts");
    sweep->add_option("config", config_path)->required();
    sweep->add_option("--sigma", sigmas, "sigma values")->required()->delimiter(',');
    sweep->add_option("--out", out_path);
    sweep->add_option("--boundary-dir", boundary_dir, "emit per-sigma boundary CSVs here");

    auto* oracle = app.add_subcommand("oracle", "closed-form sigma = 0 boundary and value");
    oracle->add_option("config", config_path)->required();
    oracle->add_option("--out", out_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(config_path, out_path);
        if (boundary->parsed()) return cmd_boundary(config_path, csv_path);
        if (simulate->parsed())
            return cmd_simulate(config_path, policy, paths_override, seed_override, out_path);
        if (sweep->parsed()) return cmd_sweep(config_path, sigmas, out_path, boundary_dir);
        if (oracle->parsed()) return cmd_oracle(config_path, out_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitOk;
}
