#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "taxstop/model.hpp"

// Closed-form solution of the stopping problem for sigma = 0 (deterministic
// stock path). The optimum is attained either by stopping now or at T, and
// the exercise boundary is explicit. Used as analytic oracle for the
// numerical solvers at small sigma.

namespace taxstop::sigma0 {

enum class Decision { StopNow, HoldToT };

// b(t) = alpha P0 (e^{r(1-a)(T-t)} - 1) / [(1-a)(e^{mu(T-t)} - e^{r(1-a)(T-t)})]
// Increasing in t with limit f as t -> T.
inline double boundary(double t, const ProblemSpec& spec) {
    if (classify_regime(spec) != Regime::FreeBoundary)
        throw std::invalid_argument("sigma0 boundary requires the free-boundary regime");
    if (!(t >= 0.0 && t < spec.horizon_t))
        throw std::domain_error("time t outside [0,T)");
    const double a = spec.tax.alpha;
    const double r = spec.market.r;
    const double mu = spec.market.mu;
    const double ttm = spec.horizon_t - t;
    // 0/0 as t -> T; the limit is the threshold f.
    if (ttm < 1e-8) return threshold_f(spec);
    const double er = std::exp(r * (1.0 - a) * ttm);
    const double em = std::exp(mu * ttm);
    return a * spec.tax.p0 * (er - 1.0) / ((1.0 - a) * (em - er));
}

// V(t,x) = max(G(t,x), G(T, x e^{mu(T-t)})): the deterministic optimum is
// attained at u = 0 or u = T - t (G(t+u, x e^{mu u}) is convex in u).
inline double value(double t, double x, const ProblemSpec& spec) {
    check_domain(t, x, spec);
    const double stop_now = payoff_g(t, x, spec);
    const double hold = payoff_g(spec.horizon_t,
                                 x * std::exp(spec.market.mu * (spec.horizon_t - t)), spec);
    return std::max(stop_now, hold);
}

// Ties at x = b(t) stop immediately (the stopping region is closed).
inline Decision decide(double t, double x, const ProblemSpec& spec) {
    if (t >= spec.horizon_t) return Decision::StopNow;
    if (classify_regime(spec) == Regime::SellImmediately) return Decision::StopNow;
    if (classify_regime(spec) == Regime::HoldToMaturity) return Decision::HoldToT;
    return x <= boundary(t, spec) ? Decision::StopNow : Decision::HoldToT;
}

// Optimal stopping offset: 0 below/at the boundary, T - t above.
inline double stop_time(double t, double x, const ProblemSpec& spec) {
    return decide(t, x, spec) == Decision::StopNow ? 0.0 : spec.horizon_t - t;
}

}  // namespace taxstop::sigma0
