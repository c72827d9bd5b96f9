#pragma once

#include <cstdint>
#include <variant>

#include <Eigen/Core>

#include "taxstop/boundary.hpp"
#include "taxstop/model.hpp"

namespace taxstop::mc {

struct PathBatch {
    int n_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd prices;  // n_paths x (n_steps+1), row = one path
    ProblemSpec spec;

    double time_of(int step) const { return spec.horizon_t * step / n_steps; }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;
};

// Deterministic stopping rules: sell at a fixed time, or at the first grid
// time with X_t <= b(t).
struct StopAt {
    double t_star = 0.0;
};
struct BoundaryPolicy {
    Boundary boundary;
};
using StoppingPolicy = std::variant<StopAt, BoundaryPolicy>;

struct DynkinResult {
    double residual_mean = 0.0;
    double std_error = 0.0;
    double studentized = 0.0;  // 0 when std_error vanishes
    double relative = 0.0;     // |mean| / |G(0,x0)|
};

// Exact log-normal transitions, antithetic pairs (path 2k+1 negates the
// normals of path 2k), one RNG substream per pair so results do not depend
// on chunking. n_paths must be even.
PathBatch simulate_paths(const ProblemSpec& spec, int n_paths, int n_steps,
                         std::uint64_t seed);

// Mean of G(tau, X_tau) with the antithetic-pair variance estimator.
McEstimate evaluate_policy(const PathBatch& batch, const StoppingPolicy& policy,
                           const ProblemSpec& spec);

// Streaming variant: identical result to evaluate_policy on a batch with the
// same seed, without materializing the paths. Chunks of fixed size are
// reduced in index order, so the result is independent of n_threads.
McEstimate evaluate_policy_streaming(const ProblemSpec& spec, const StoppingPolicy& policy,
                                     int n_paths, int n_steps, std::uint64_t seed,
                                     int n_threads = 1);

// Checks E[G(t*, X_{t*})] = G(0,x0) + E[int_0^{t*} F(u, X_u) du] by
// trapezoidal quadrature along paths; the martingale part has zero mean, so
// the studentized residual should be statistically zero.
DynkinResult dynkin_check(const ProblemSpec& spec, double t_star, const PathBatch& batch);

}  // namespace taxstop::mc
