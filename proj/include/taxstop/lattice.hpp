#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "taxstop/boundary.hpp"
#include "taxstop/model.hpp"

namespace taxstop::lattice {

struct LatticeConfig {
    int n_steps = 1000;
};

struct LatticeSolution {
    double value_root = 0.0;  // V(0, x0) estimate
    Boundary boundary;
    // exercise_flags[k][j]: stop chosen at step k, node j (j up-moves).
    std::vector<std::vector<std::uint8_t>> exercise_flags;
    ProblemSpec spec;
    LatticeConfig config;
};

// Backward dynamic program on a recombining multiplicative tree:
//   u = e^{sigma sqrt(dt)}, d = 1/u, p = (e^{mu dt} - d)/(u - d),
//   V_N = G(T, .), V_k = max(G(t_k, .), p V_{k+1}(x u) + (1-p) V_{k+1}(x d)).
// No discount factor in the recursion: G already compounds wealth to T.
// Requires sigma > 0 (use the sigma0 oracle otherwise) and p in (0,1).
LatticeSolution solve_lattice(const ProblemSpec& spec, const LatticeConfig& config);

// Per time step, the largest node price at which stopping was chosen,
// reported as the geometric midpoint towards the next node up. Steps with
// no stopping node record 0; in the SellImmediately regime every level is
// the +inf sentinel.
Boundary extract_boundary_lattice(const LatticeSolution& solution);

}  // namespace taxstop::lattice
