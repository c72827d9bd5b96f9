#pragma once

#include <optional>
#include <string>
#include <vector>

#include "taxstop/boundary.hpp"
#include "taxstop/model.hpp"
#include "taxstop/pde.hpp"

namespace taxstop::analysis {

// Regime-aware solve result. Degenerate regimes carry analytic surfaces;
// the free-boundary regime is served by the PDE (sigma >= 1e-4) or the
// sigma0 oracle (smaller sigma).
struct SolveResult {
    Regime regime = Regime::FreeBoundary;
    double v0 = 0.0;  // V(0, x0)
    std::optional<pde::ValueSurface> surface;
    Boundary boundary;
    std::string method;  // "pde", "sigma0", "closed_form"
};

SolveResult solve(const ProblemSpec& spec, const pde::GridConfig& grid = {});

// Value of the right to time the tax payment, against the benchmark of
// immediate taxation with continuous mark-to-market thereafter:
//   benchmark = [(1-a) x0 + a P0] e^{(1-a) max(mu, r) T}
//   option    = e^{-r(1-a)T} (V(0,x0) - benchmark)
struct TimingOptionReport {
    double v0 = 0.0;
    double benchmark = 0.0;
    double option_value = 0.0;
    std::string method;
};

TimingOptionReport timing_option_value(const ProblemSpec& spec, double v0,
                                       const std::string& method = "");

struct SweepPoint {
    double sigma = 0.0;
    bool solved = false;
    std::string error;
    double v0 = 0.0;
    double timing_option = 0.0;
    Boundary boundary;  // sampled on the shared time grid
};

struct SweepReport {
    std::string axis = "sigma";
    std::vector<SweepPoint> points;  // sorted by sigma
    bool value_nondecreasing = true;
    bool boundary_nonincreasing = true;
    double worst_value_violation = 0.0;
    double worst_boundary_violation = 0.0;
};

// Per-sigma value and boundary on one shared time grid, with monotonicity
// verdicts (V nondecreasing in sigma, b pointwise nonincreasing). Solver
// failures are recorded per point; the report stays partial, not aborted.
SweepReport sigma_sweep(const ProblemSpec& spec, std::vector<double> sigmas,
                        const pde::GridConfig& grid = {});

}  // namespace taxstop::analysis
