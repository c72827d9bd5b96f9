#pragma once

#include <Eigen/Core>

#include "taxstop/boundary.hpp"
#include "taxstop/model.hpp"

namespace taxstop::pde {

struct GridConfig {
    int n_x = 801;   // log-price nodes
    int n_t = 600;   // time steps
    double s_lo = 0.0;  // price-domain truncation; 0 = automatic
    double s_hi = 0.0;
    double theta = 0.5;            // time weighting (0.5 = Crank-Nicolson)
    double psor_tol = 1e-10;
    double psor_omega = 1.2;
    int rannacher_steps = 4;       // fully implicit startup steps
    int psor_max_iter = 20000;

    void validate() const {
        if (n_x < 3) throw std::invalid_argument("grid.n_x must be >= 3");
        if (n_t < 1) throw std::invalid_argument("grid.n_t must be >= 1");
        if (!(theta >= 0.0 && theta <= 1.0))
            throw std::invalid_argument("grid.theta must lie in [0,1]");
        if (!(psor_tol > 0.0)) throw std::invalid_argument("grid.psor_tol must be > 0");
        if (!(psor_omega > 0.0 && psor_omega < 2.0))
            throw std::invalid_argument("grid.psor_omega must lie in (0,2)");
        if (rannacher_steps < 0)
            throw std::invalid_argument("grid.rannacher_steps must be >= 0");
        if (s_lo < 0.0 || s_hi < 0.0 || (s_hi > 0.0 && s_lo >= s_hi))
            throw std::invalid_argument("grid truncation requires 0 < s_lo < s_hi");
    }
};

// Discretized V(t, x) on a time x log-price grid.
struct ValueSurface {
    Eigen::VectorXd times;       // t_0 = 0 .. t_{n_t} = T
    Eigen::VectorXd log_prices;  // uniform in ln x
    Eigen::MatrixXd values;      // (n_t+1) x n_x, row i = time slice t_i
    ProblemSpec spec;
    long psor_total_iterations = 0;

    double price(Eigen::Index j) const { return std::exp(log_prices[j]); }
};

// Solves max(dV/dt + mu x dV/dx + (sigma^2/2) x^2 d2V/dx2, G - V) = 0 with
// V(T,.) = G(T,.) by a theta-scheme in log price with Rannacher startup and
// PSOR projection onto the obstacle each step. Boundary conditions: V = G
// at s_lo (deep in the stopping region), zero second x-derivative (affine
// extrapolation) at s_hi. Degenerate regimes short-circuit analytically;
// the free-boundary regime rejects sigma < 1e-4 (use the sigma0 oracle).
ValueSurface solve_pde(const ProblemSpec& spec, const GridConfig& grid);

// Per time slice, the largest grid x with V - G <= eps_stop (1 + |G|),
// refined by linear interpolation between the straddling nodes.
Boundary extract_boundary(const ValueSurface& surface, double eps_stop = 1e-7);

// Smooth-fit diagnostic: one-sided second-order dV/dx at b(t) from the
// continuation side against dG/dx = (1-alpha) e^{r(1-alpha)(T-t)}. Returns
// |ratio - 1| per interior time node. Free-boundary regime only.
Eigen::VectorXd smooth_fit_residual(const ValueSurface& surface, const Boundary& boundary);

// Bilinear interpolation in (t, ln x); exact at nodes.
double value_at(const ValueSurface& surface, double t, double x);

// Automatic truncation bounds: six sigma-sqrt(T) plus drift around the
// anchors f, P0, x0.
void default_truncation(const ProblemSpec& spec, double& s_lo, double& s_hi);

}  // namespace taxstop::pde
