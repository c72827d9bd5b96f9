#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "taxstop/analysis.hpp"
#include "taxstop/lattice.hpp"
#include "taxstop/model.hpp"
#include "taxstop/montecarlo.hpp"
#include "taxstop/pde.hpp"

namespace taxstop::io {

inline constexpr const char* kVersion = "0.1.0";

struct McConfig {
    int n_paths = 100000;
    int n_steps = 600;
    std::uint64_t seed = 20240501;
    int threads = 1;
};

struct RunConfig {
    ProblemSpec spec;
    pde::GridConfig grid;
    lattice::LatticeConfig lattice;
    McConfig mc;
    std::string format = "json";  // csv | json
};

// Parses and validates a config document; error messages carry the JSON
// field path. Unknown keys are rejected to catch typos.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

// Config echo that reproduces the run bit-exactly.
nlohmann::json config_to_json(const RunConfig& config);

nlohmann::json boundary_to_json(const Boundary& boundary);
std::string boundary_to_csv(const Boundary& boundary);  // "t,boundary", 9 sig digits, LF

// Full solve: regime dispatch, per-method values (PDE/analytic + lattice),
// boundary, smooth-fit summary, timing option, diagnostics. Re-running the
// echoed config reproduces the document except diagnostics.runtimes.
nlohmann::json result_document(const RunConfig& config);

nlohmann::json estimate_to_json(const mc::McEstimate& estimate, const std::string& policy);
nlohmann::json sweep_to_json(const analysis::SweepReport& report);

}  // namespace taxstop::io
