#include "taxstop/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "taxstop/sigma0.hpp"

namespace taxstop::io {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config error at '" + path + "': " + what);
}

double get_num(const json& obj, const std::string& parent, const std::string& key,
               double fallback, bool required = false) {
    if (!obj.contains(key)) {
        if (required) fail(parent + key, "missing required field");
        return fallback;
    }
    if (!obj[key].is_number()) fail(parent + key, "expected a number");
    return obj[key].get<double>();
}

void check_keys(const json& obj, const std::string& parent,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) fail(parent + key, "unknown field");
    }
}

double timer_seconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json level_value(double level) {
    if (std::isinf(level)) return json("inf");
    return json(level);
}

}  // namespace

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("config error: document must be an object");
    check_keys(doc, "", {"market", "tax", "horizon_t", "x0", "grid", "lattice", "mc", "outputs"});

    RunConfig c;
    if (!doc.contains("market")) fail("market", "missing required field");
    if (!doc.contains("tax")) fail("tax", "missing required field");
    const json& market = doc["market"];
    const json& tax = doc["tax"];
    check_keys(market, "market.", {"mu", "sigma", "r"});
    check_keys(tax, "tax.", {"alpha", "p0"});
    c.spec.market.mu = get_num(market, "market.", "mu", 0.0, true);
    c.spec.market.sigma = get_num(market, "market.", "sigma", 0.0, true);
    c.spec.market.r = get_num(market, "market.", "r", 0.0, true);
    c.spec.tax.alpha = get_num(tax, "tax.", "alpha", 0.0, true);
    c.spec.tax.p0 = get_num(tax, "tax.", "p0", 0.0, true);
    c.spec.horizon_t = get_num(doc, "", "horizon_t", 0.0, true);
    c.spec.x0 = get_num(doc, "", "x0", 0.0, true);

    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        check_keys(g, "grid.",
                   {"n_x", "n_t", "s_lo", "s_hi", "theta", "psor_tol", "psor_omega",
                    "rannacher_steps", "psor_max_iter"});
        c.grid.n_x = static_cast<int>(get_num(g, "grid.", "n_x", c.grid.n_x));
        c.grid.n_t = static_cast<int>(get_num(g, "grid.", "n_t", c.grid.n_t));
        c.grid.s_lo = get_num(g, "grid.", "s_lo", c.grid.s_lo);
        c.grid.s_hi = get_num(g, "grid.", "s_hi", c.grid.s_hi);
        c.grid.theta = get_num(g, "grid.", "theta", c.grid.theta);
        c.grid.psor_tol = get_num(g, "grid.", "psor_tol", c.grid.psor_tol);
        c.grid.psor_omega = get_num(g, "grid.", "psor_omega", c.grid.psor_omega);
        c.grid.rannacher_steps =
            static_cast<int>(get_num(g, "grid.", "rannacher_steps", c.grid.rannacher_steps));
        c.grid.psor_max_iter =
            static_cast<int>(get_num(g, "grid.", "psor_max_iter", c.grid.psor_max_iter));
    }
    if (doc.contains("lattice")) {
        const json& l = doc["lattice"];
        check_keys(l, "lattice.", {"n_steps"});
        c.lattice.n_steps = static_cast<int>(get_num(l, "lattice.", "n_steps", c.lattice.n_steps));
    }
    if (doc.contains("mc")) {
        const json& m = doc["mc"];
        check_keys(m, "mc.", {"n_paths", "n_steps", "seed", "threads"});
        c.mc.n_paths = static_cast<int>(get_num(m, "mc.", "n_paths", c.mc.n_paths));
        c.mc.n_steps = static_cast<int>(get_num(m, "mc.", "n_steps", c.mc.n_steps));
        c.mc.seed = static_cast<std::uint64_t>(get_num(m, "mc.", "seed", c.mc.seed));
        c.mc.threads = static_cast<int>(get_num(m, "mc.", "threads", c.mc.threads));
    }
    if (doc.contains("outputs")) {
        const json& o = doc["outputs"];
        check_keys(o, "outputs.", {"format"});
        if (o.contains("format")) {
            c.format = o["format"].get<std::string>();
            if (c.format != "csv" && c.format != "json")
                fail("outputs.format", "must be 'csv' or 'json'");
        }
    }

    try {
        c.spec.validate();
        c.grid.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("config error at '") + e.what() + "'");
    }
    if (c.lattice.n_steps < 1) fail("lattice.n_steps", "must be >= 1");
    if (c.mc.n_paths < 2 || c.mc.n_paths % 2 != 0) fail("mc.n_paths", "must be even and >= 2");
    if (c.mc.n_steps < 1) fail("mc.n_steps", "must be >= 1");
    if (c.mc.threads < 1) fail("mc.threads", "must be >= 1");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config error: cannot read '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config error: invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

json config_to_json(const RunConfig& c) {
    return json{
        {"market", {{"mu", c.spec.market.mu}, {"sigma", c.spec.market.sigma}, {"r", c.spec.market.r}}},
        {"tax", {{"alpha", c.spec.tax.alpha}, {"p0", c.spec.tax.p0}}},
        {"horizon_t", c.spec.horizon_t},
        {"x0", c.spec.x0},
        {"grid",
         {{"n_x", c.grid.n_x},
          {"n_t", c.grid.n_t},
          {"s_lo", c.grid.s_lo},
          {"s_hi", c.grid.s_hi},
          {"theta", c.grid.theta},
          {"psor_tol", c.grid.psor_tol},
          {"psor_omega", c.grid.psor_omega},
          {"rannacher_steps", c.grid.rannacher_steps},
          {"psor_max_iter", c.grid.psor_max_iter}}},
        {"lattice", {{"n_steps", c.lattice.n_steps}}},
        {"mc",
         {{"n_paths", c.mc.n_paths},
          {"n_steps", c.mc.n_steps},
          {"seed", c.mc.seed},
          {"threads", c.mc.threads}}},
        {"outputs", {{"format", c.format}}},
    };
}

json boundary_to_json(const Boundary& boundary) {
    json t = json::array(), levels = json::array();
    for (Eigen::Index i = 0; i < boundary.times.size(); ++i) {
        t.push_back(boundary.times[i]);
        levels.push_back(level_value(boundary.levels[i]));
    }
    return json{{"t", t},
                {"level", levels},
                {"regime", to_string(boundary.regime)},
                {"monotone", boundary.monotone},
                {"worst_violation", boundary.worst_violation}};
}

std::string boundary_to_csv(const Boundary& boundary) {
    std::string out = "t,boundary\n";
    char buf[64];
    for (Eigen::Index i = 0; i < boundary.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", boundary.times[i], boundary.levels[i]);
        out += buf;
    }
    return out;
}

json result_document(const RunConfig& config) {
    const auto t_start = std::chrono::steady_clock::now();
    analysis::SolveResult sol = analysis::solve(config.spec, config.grid);
    const double solve_s = timer_seconds(t_start);

    json v0 = {{sol.method, sol.v0}};
    json diagnostics = {{"runtimes", json::object()}};
    diagnostics["runtimes"]["solve_s"] = solve_s;

    if (config.spec.market.sigma > 0.0) {
        const auto t_lat = std::chrono::steady_clock::now();
        try {
            auto lat = lattice::solve_lattice(config.spec, config.lattice);
            v0["lattice"] = lat.value_root;
        } catch (const std::exception& e) {
            diagnostics["lattice_error"] = e.what();
        }
        diagnostics["runtimes"]["lattice_s"] = timer_seconds(t_lat);
    }

    json smooth_fit;
    if (sol.regime == Regime::FreeBoundary && sol.surface) {
        try {
            const Eigen::VectorXd res = pde::smooth_fit_residual(*sol.surface, sol.boundary);
            // summary over the middle 80% of the horizon; the extremes sit on
            // the grid edge of the diagnostic stencil
            const Eigen::Index lo = res.size() / 10, hi = res.size() - res.size() / 10;
            smooth_fit = {{"max_mid", res.segment(lo, hi - lo).maxCoeff()},
                          {"mean_mid", res.segment(lo, hi - lo).mean()}};
        } catch (const std::exception& e) {
            smooth_fit = {{"error", e.what()}};
        }
    }

    const auto timing = analysis::timing_option_value(config.spec, sol.v0, sol.method);
    if (sol.surface) {
        diagnostics["grid"] = {{"n_x", sol.surface->log_prices.size()},
                               {"n_t", sol.surface->times.size() - 1},
                               {"s_lo", std::exp(sol.surface->log_prices[0])},
                               {"s_hi", std::exp(sol.surface->log_prices[
                                            sol.surface->log_prices.size() - 1])}};
        diagnostics["psor_iterations"] = sol.surface->psor_total_iterations;
    }

    return json{{"version", kVersion},
                {"config", config_to_json(config)},
                {"regime", to_string(sol.regime)},
                {"method", sol.method},
                {"v0", v0},
                {"boundary", boundary_to_json(sol.boundary)},
                {"smooth_fit", smooth_fit},
                {"timing_option",
                 {{"v0", timing.v0},
                  {"benchmark", timing.benchmark},
                  {"option_value", timing.option_value}}},
                {"diagnostics", diagnostics}};
}

json estimate_to_json(const mc::McEstimate& estimate, const std::string& policy) {
    return json{{"mean", estimate.mean},
                {"std_error", estimate.std_error},
                {"n_paths", estimate.n_paths},
                {"seed", estimate.seed},
                {"policy", policy}};
}

json sweep_to_json(const analysis::SweepReport& report) {
    json points = json::array();
    for (const auto& p : report.points) {
        json pt = {{"sigma", p.sigma}, {"solved", p.solved}};
        if (p.solved) {
            pt["v0"] = p.v0;
            pt["timing_option"] = p.timing_option;
            pt["boundary"] = boundary_to_json(p.boundary);
        } else {
            pt["error"] = p.error;
        }
        points.push_back(std::move(pt));
    }
    return json{{"axis", report.axis},
                {"points", points},
                {"verdicts",
                 {{"value_nondecreasing", report.value_nondecreasing},
                  {"boundary_nonincreasing", report.boundary_nonincreasing},
                  {"worst_value_violation", report.worst_value_violation},
                  {"worst_boundary_violation", report.worst_boundary_violation}}}};
}

}  // namespace taxstop::io
