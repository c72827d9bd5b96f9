#pragma once

#include <Eigen/Core>

#include "taxstop/model.hpp"

namespace taxstop {

// Time-indexed exercise curve b(t). Degenerate regimes use sentinels:
// +inf levels when stopping is optimal everywhere, 0 when never optimal.
struct Boundary {
    Eigen::VectorXd times;
    Eigen::VectorXd levels;
    Regime regime = Regime::FreeBoundary;

    // Monotonicity metadata filled by the extractor: the curve should be
    // nondecreasing in t; violations are reported, not silently repaired.
    bool monotone = true;
    double worst_violation = 0.0;  // max drop between consecutive nodes

    // Piecewise-linear evaluation clamped to the endpoints.
    double at(double t) const {
        const auto n = times.size();
        if (n == 0) return 0.0;
        if (t <= times[0]) return levels[0];
        if (t >= times[n - 1]) return levels[n - 1];
        Eigen::Index j = 1;
        while (j < n && times[j] < t) ++j;
        const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
        return (1.0 - w) * levels[j - 1] + w * levels[j];
    }
};

}  // namespace taxstop
