#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace {

using nlohmann::json;

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
    CliResult res;
    const std::string cmd = std::string(TAXSTOP_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf;
    while (size_t n = fread(buf.data(), 1, buf.size(), pipe)) res.output.append(buf.data(), n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string write_config(const json& doc, const std::string& name) {
    const std::string path = std::string("/tmp/taxstop_test_") + name + ".json";
    std::ofstream out(path);
    out << doc.dump(2);
    return path;
}

json base_config() {
    return json{
        {"market", {{"mu", 0.026}, {"sigma", 0.25}, {"r", 0.03}}},
        {"tax", {{"alpha", 0.3}, {"p0", 100.0}}},
        {"horizon_t", 3.0},
        {"x0", 180.0},
        {"grid", {{"n_x", 301}, {"n_t", 200}}},
        {"lattice", {{"n_steps", 400}}},
        {"mc", {{"n_paths", 20000}, {"n_steps", 120}, {"seed", 42}}},
    };
}

}  // namespace

TEST_CASE("cli solve: free-boundary result document") {
    const auto path = write_config(base_config(), "solve_fb");
    const auto res = run_cli("solve " + path);
    REQUIRE(res.exit_code == 0);
    const json doc = json::parse(res.output);
    CHECK(doc["regime"] == "free_boundary");
    CHECK(doc["v0"].contains("pde"));
    CHECK(doc["v0"].contains("lattice"));
    const auto levels = doc["boundary"]["level"];
    const double last = levels[levels.size() - 1].get<double>();
    CHECK(last > 0.98 * 180.0);
    CHECK(last < 1.02 * 180.0);
    CHECK(doc["timing_option"]["option_value"].get<double>() > 0.0);
}

TEST_CASE("cli solve: invalid alpha exits 2 naming the field") {
    json cfg = base_config();
    cfg["tax"]["alpha"] = 1.0;
    const auto path = write_config(cfg, "bad_alpha");
    const auto res = run_cli("solve " + path);
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("tax.alpha") != std::string::npos);
}

TEST_CASE("cli solve: unknown key exits 2") {
    json cfg = base_config();
    cfg["market"]["nu"] = 1.0;
    const auto path = write_config(cfg, "unknown_key");
    const auto res = run_cli("solve " + path);
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("market.nu") != std::string::npos);
}

TEST_CASE("cli solve: sell-immediately regime reports v0 = G(0,x0)") {
    json cfg = base_config();
    cfg["market"]["mu"] = 0.02;
    const auto path = write_config(cfg, "sell_now");
    const auto res = run_cli("solve " + path);
    REQUIRE(res.exit_code == 0);
    const json doc = json::parse(res.output);
    CHECK(doc["regime"] == "sell_immediately");
    const double expected = 156.0 * std::exp(0.03 * 0.7 * 3.0);
    CHECK(doc["v0"]["closed_form"].get<double>() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cli determinism: identical documents modulo runtimes") {
    const auto path = write_config(base_config(), "determinism");
    auto a = json::parse(run_cli("solve " + path).output);
    auto b = json::parse(run_cli("solve " + path).output);
    a["diagnostics"].erase("runtimes");
    b["diagnostics"].erase("runtimes");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("cli boundary: CSV shape and 9-digit round trip") {
    const auto path = write_config(base_config(), "boundary_csv");
    const auto res = run_cli("boundary " + path);
    REQUIRE(res.exit_code == 0);
    std::istringstream lines(res.output);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "t,boundary");
    int rows = 0;
    double prev = 0.0;
    while (std::getline(lines, line)) {
        double t = 0.0, level = 0.0;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &t, &level) == 2);
        CHECK(level > 100.0);
        CHECK(level < 184.0);
        CHECK(level >= prev - 1e-9 * std::max(prev, 1.0));
        prev = level;
        // formatting round-trips at 9 significant digits
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g,%.9g", t, level);
        CHECK(line == buf);
        ++rows;
    }
    CHECK(rows == 200);
}

TEST_CASE("cli boundary: degenerate regime exits 4") {
    json cfg = base_config();
    cfg["market"]["mu"] = 0.02;
    const auto path = write_config(cfg, "boundary_degenerate");
    const auto res = run_cli("boundary " + path);
    CHECK(res.exit_code == 4);
}

TEST_CASE("cli simulate: policy now is exact") {
    const auto path = write_config(base_config(), "simulate_now");
    const auto res = run_cli("simulate " + path + " --policy now");
    REQUIRE(res.exit_code == 0);
    const json doc = json::parse(res.output);
    const double expected = 156.0 * std::exp(0.03 * 0.7 * 3.0);
    CHECK(doc["mean"].get<double>() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(doc["std_error"].get<double>() == 0.0);
    CHECK(doc["seed"].get<std::uint64_t>() == 42);
}

TEST_CASE("cli simulate: maturity policy with alpha 0 near the GBM mean") {
    json cfg = base_config();
    cfg["tax"]["alpha"] = 0.0;
    cfg["x0"] = 100.0;
    const auto path = write_config(cfg, "simulate_mat");
    const auto res = run_cli("simulate " + path + " --policy maturity --paths 100000");
    REQUIRE(res.exit_code == 0);
    const json doc = json::parse(res.output);
    const double mean = doc["mean"].get<double>();
    const double se = doc["std_error"].get<double>();
    CHECK(std::abs(mean - 100.0 * std::exp(0.078)) < 4.0 * se);
}

TEST_CASE("cli sweep: monotone verdicts and per-sigma CSVs") {
    const auto path = write_config(base_config(), "sweep");
    const auto res = run_cli("sweep " + path + " --sigma 0.1,0.25,0.4 --boundary-dir /tmp");
    REQUIRE(res.exit_code == 0);
    const json doc = json::parse(res.output);
    CHECK(doc["verdicts"]["value_nondecreasing"].get<bool>());
    CHECK(doc["verdicts"]["boundary_nonincreasing"].get<bool>());
    std::ifstream csv("/tmp/boundary_sigma_0.25.csv");
    REQUIRE(csv.good());
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,boundary");
}

TEST_CASE("cli sweep: negative sigma exits 2") {
    const auto path = write_config(base_config(), "sweep_bad");
    const auto res = run_cli("sweep " + path + " --sigma -0.1");
    CHECK(res.exit_code == 2);
}

TEST_CASE("cli oracle: sigma0 boundary endpoints") {
    json cfg = base_config();
    cfg["market"]["sigma"] = 0.0;
    const auto path = write_config(cfg, "oracle");
    const auto res = run_cli("oracle " + path);
    REQUIRE(res.exit_code == 0);
    const json doc = json::parse(res.output);
    const auto& level = doc["boundary"]["level"];
    CHECK(level[0].get<double>() == doctest::Approx(173.15).epsilon(1e-3));
    CHECK(level[level.size() - 1].get<double>() < 180.0);
    CHECK(doc["threshold_f"].get<double>() == doctest::Approx(180.0).epsilon(1e-12));
}
