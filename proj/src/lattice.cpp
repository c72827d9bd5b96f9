#include "taxstop/lattice.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace taxstop::lattice {

LatticeSolution solve_lattice(const ProblemSpec& spec, const LatticeConfig& config) {
    spec.validate();
    if (config.n_steps < 1) throw std::invalid_argument("lattice.n_steps must be >= 1");
    const double sigma = spec.market.sigma;
    if (sigma <= 0.0)
        throw std::invalid_argument("lattice requires sigma > 0; use the sigma0 oracle");

    const int n = config.n_steps;
    const double T = spec.horizon_t;
    const double dt = T / n;
    const double u = std::exp(sigma * std::sqrt(dt));
    const double d = 1.0 / u;
    const double p = (std::exp(spec.market.mu * dt) - d) / (u - d);
    if (!(p > 0.0 && p < 1.0)) {
        // p in (0,1) needs sigma sqrt(dt) > |mu| dt, i.e. n > T mu^2 / sigma^2.
        const int n_min =
            static_cast<int>(std::ceil(T * spec.market.mu * spec.market.mu / (sigma * sigma))) + 1;
        throw std::invalid_argument("lattice probability p = " + std::to_string(p) +
                                    " outside (0,1); use n_steps >= " + std::to_string(n_min));
    }

    LatticeSolution sol;
    sol.spec = spec;
    sol.config = config;
    sol.exercise_flags.assign(n + 1, {});

    const double log_u = sigma * std::sqrt(dt);
    auto node_price = [&](int k, int j) {
        // j up-moves out of k steps
        return spec.x0 * std::exp(log_u * (2.0 * j - k));
    };

    // terminal layer
    Eigen::VectorXd values(n + 1);
    sol.exercise_flags[n].assign(n + 1, 1);
    for (int j = 0; j <= n; ++j) values[j] = payoff_g(T, node_price(n, j), spec);

    Eigen::VectorXd next = values;
    for (int k = n - 1; k >= 0; --k) {
        const double t_k = k * dt;
        sol.exercise_flags[k].assign(k + 1, 0);
        for (int j = 0; j <= k; ++j) {
            const double cont = p * next[j + 1] + (1.0 - p) * next[j];
            const double stop = payoff_g(t_k, node_price(k, j), spec);
            if (stop >= cont) {
                values[j] = stop;
                sol.exercise_flags[k][j] = 1;
            } else {
                values[j] = cont;
            }
        }
        next.head(k + 1) = values.head(k + 1);
    }
    sol.value_root = values[0];
    sol.boundary = extract_boundary_lattice(sol);
    return sol;
}

Boundary extract_boundary_lattice(const LatticeSolution& solution) {
    const int n = solution.config.n_steps;
    const double dt = solution.spec.horizon_t / n;
    const double log_u = solution.spec.market.sigma * std::sqrt(dt);
    const Regime regime = classify_regime(solution.spec);

    Boundary b;
    b.regime = regime;
    b.times.resize(n);
    b.levels.resize(n);
    for (int k = 0; k < n; ++k) b.times[k] = k * dt;

    if (regime == Regime::SellImmediately) {
        b.levels.setConstant(std::numeric_limits<double>::infinity());
        return b;
    }

    for (int k = 0; k < n; ++k) {
        const auto& flags = solution.exercise_flags[k];
        int j_stop = -1;
        for (int j = k; j >= 0; --j) {
            if (flags[j]) {
                j_stop = j;
                break;
            }
        }
        if (j_stop < 0) {
            b.levels[k] = 0.0;
        } else {
            // geometric midpoint between the top stopping node and the node
            // above it (one parity step up is a factor e^{2 log_u})
            b.levels[k] = solution.spec.x0 * std::exp(log_u * (2.0 * j_stop - k + 1.0));
        }
    }

    b.monotone = true;
    b.worst_violation = 0.0;
    for (int k = 0; k + 1 < n; ++k) {
        const double drop = b.levels[k] - b.levels[k + 1];
        if (drop > 0.0) {
            b.monotone = false;
            b.worst_violation = std::max(b.worst_violation, drop);
        }
    }
    return b;
}

}  // namespace taxstop::lattice
