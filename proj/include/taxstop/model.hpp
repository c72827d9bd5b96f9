#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace taxstop {

// Stock dynamics dX = mu X dt + sigma X dB, riskless rate r.
// All rates are annualized with continuous compounding.
struct MarketParams {
    double mu = 0.0;
    double sigma = 0.0;
    double r = 0.0;

    void validate() const {
        if (!std::isfinite(mu)) throw std::invalid_argument("market.mu must be finite");
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("market.sigma must be >= 0");
        if (!(r >= 0.0) || !std::isfinite(r))
            throw std::invalid_argument("market.r must be >= 0");
    }
};

// Linear tax at rate alpha on the gain over the purchase price p0;
// losses earn a symmetric credit.
struct TaxParams {
    double alpha = 0.0;
    double p0 = 1.0;

    void validate() const {
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw std::invalid_argument("tax.alpha must lie in [0,1)");
        if (!(p0 > 0.0) || !std::isfinite(p0))
            throw std::invalid_argument("tax.p0 must be > 0");
    }
};

struct ProblemSpec {
    MarketParams market;
    TaxParams tax;
    double horizon_t = 1.0;  // T, years
    double x0 = 1.0;         // initial stock price

    void validate() const {
        market.validate();
        tax.validate();
        if (!(horizon_t > 0.0) || !std::isfinite(horizon_t))
            throw std::invalid_argument("horizon_t must be > 0");
        if (!(x0 > 0.0) || !std::isfinite(x0))
            throw std::invalid_argument("x0 must be > 0");
    }
};

// Structure of the stopping region:
//   SellImmediately: mu <= (1-alpha) r        (sell everywhere)
//   HoldToMaturity:  mu  > (1-alpha) r, a = 0 (never sell early)
//   FreeBoundary:    mu  > (1-alpha) r, a > 0 (sell below b(t))
enum class Regime { SellImmediately, HoldToMaturity, FreeBoundary };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::SellImmediately: return "sell_immediately";
        case Regime::HoldToMaturity: return "hold_to_maturity";
        case Regime::FreeBoundary: return "free_boundary";
    }
    return "unknown";
}

inline void check_domain(double t, double x, const ProblemSpec& spec) {
    if (!(t >= 0.0 && t <= spec.horizon_t))
        throw std::domain_error("time t outside [0,T]");
    if (!(x >= 0.0))
        throw std::domain_error("price x must be >= 0");
}

// Wealth at maturity when selling at time t at price x:
//   G(t,x) = [(1-alpha) x + alpha P0] e^{r(1-alpha)(T-t)}
inline double payoff_g(double t, double x, const ProblemSpec& spec) {
    check_domain(t, x, spec);
    const double a = spec.tax.alpha;
    const double r = spec.market.r;
    return ((1.0 - a) * x + a * spec.tax.p0) * std::exp(r * (1.0 - a) * (spec.horizon_t - t));
}

// dG/dx = (1-alpha) e^{r(1-alpha)(T-t)}, independent of x.
inline double payoff_g_x(double t, const ProblemSpec& spec) {
    const double a = spec.tax.alpha;
    return (1.0 - a) * std::exp(spec.market.r * (1.0 - a) * (spec.horizon_t - t));
}

// Drift rate of the payoff process (Ito decomposition of G(t, X_t)):
//   F(t,x) = e^{r(1-alpha)(T-t)} (1-alpha) (-r alpha P0 + x [mu - r(1-alpha)])
inline double running_payoff_f(double t, double x, const ProblemSpec& spec) {
    check_domain(t, x, spec);
    const double a = spec.tax.alpha;
    const double r = spec.market.r;
    const double mu = spec.market.mu;
    return std::exp(r * (1.0 - a) * (spec.horizon_t - t)) * (1.0 - a) *
           (-r * a * spec.tax.p0 + x * (mu - r * (1.0 - a)));
}

// Root of F in x: f = r alpha P0 / (mu - r(1-alpha)) when mu > (1-alpha)r,
// +inf otherwise (F <= 0 everywhere, no sign change).
inline double threshold_f(const ProblemSpec& spec) {
    const double a = spec.tax.alpha;
    const double r = spec.market.r;
    const double mu = spec.market.mu;
    const double denom = mu - r * (1.0 - a);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return r * a * spec.tax.p0 / denom;
}

inline Regime classify_regime(const ProblemSpec& spec) {
    const double a = spec.tax.alpha;
    if (spec.market.mu <= (1.0 - a) * spec.market.r) return Regime::SellImmediately;
    return a == 0.0 ? Regime::HoldToMaturity : Regime::FreeBoundary;
}

}  // namespace taxstop
