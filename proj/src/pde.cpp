#include "taxstop/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace taxstop::pde {

void default_truncation(const ProblemSpec& spec, double& s_lo, double& s_hi) {
    const double f = threshold_f(spec);
    const double margin =
        6.0 * spec.market.sigma * std::sqrt(spec.horizon_t) +
        std::abs(spec.market.mu) * spec.horizon_t;
    double lo_anchor = std::min(spec.tax.p0, spec.x0);
    double hi_anchor = spec.x0;
    if (std::isfinite(f) && f > 0.0) {
        lo_anchor = std::min(lo_anchor, f);
        hi_anchor = std::max(hi_anchor, f);
    }
    s_lo = lo_anchor * std::exp(-margin);
    s_hi = hi_anchor * std::exp(margin);
}

namespace {

ValueSurface make_grid(const ProblemSpec& spec, const GridConfig& grid) {
    ValueSurface s;
    s.spec = spec;
    double s_lo = grid.s_lo, s_hi = grid.s_hi;
    if (s_lo <= 0.0 || s_hi <= 0.0) default_truncation(spec, s_lo, s_hi);
    s.times = Eigen::VectorXd::LinSpaced(grid.n_t + 1, 0.0, spec.horizon_t);
    s.log_prices = Eigen::VectorXd::LinSpaced(grid.n_x, std::log(s_lo), std::log(s_hi));
    s.values.resize(grid.n_t + 1, grid.n_x);
    return s;
}

// One PSOR-projected theta-step backwards from slice `next` at obstacle `g`.
// Interior rows come from the tridiagonal theta-system; the top row imposes
// zero second x-derivative via affine extrapolation in price.
long psor_step(Eigen::VectorXd& v, const Eigen::VectorXd& next, const Eigen::VectorXd& g,
               const Eigen::VectorXd& rhs, double ml, double md, double mu_,
               double price_ratio, const GridConfig& grid) {
    const Eigen::Index n = v.size();
    const double omega = grid.psor_omega;
    v = next.cwiseMax(g);  // warm start
    v[0] = g[0];

    double err0 = -1.0;
    for (int iter = 1; iter <= grid.psor_max_iter; ++iter) {
        double err = 0.0;
        for (Eigen::Index j = 1; j < n - 1; ++j) {
            const double gs = (rhs[j] - ml * v[j - 1] - mu_ * v[j + 1]) / md;
            double vn = v[j] + omega * (gs - v[j]);
            if (vn < g[j]) vn = g[j];
            err = std::max(err, std::abs(vn - v[j]));
            v[j] = vn;
        }
        double vt = (1.0 + price_ratio) * v[n - 2] - price_ratio * v[n - 3];
        if (vt < g[n - 1]) vt = g[n - 1];
        err = std::max(err, std::abs(vt - v[n - 1]));
        v[n - 1] = vt;

        const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
        if (err < grid.psor_tol * scale) return iter;
        if (err0 < 0.0) err0 = err;
        if (err > 1e6 * err0)
            throw std::runtime_error("PSOR diverging (residual " + std::to_string(err) + ")");
    }
    throw std::runtime_error("PSOR failed to converge within " +
                             std::to_string(grid.psor_max_iter) + " iterations");
}

}  // namespace

ValueSurface solve_pde(const ProblemSpec& spec, const GridConfig& grid) {
    spec.validate();
    grid.validate();

    const Regime regime = classify_regime(spec);
    ValueSurface s = make_grid(spec, grid);
    const Eigen::Index nx = s.log_prices.size();
    const Eigen::Index nt = s.times.size() - 1;
    const double T = spec.horizon_t;

    if (regime == Regime::SellImmediately) {
        // F <= 0: stopping optimal everywhere, V = G.
        for (Eigen::Index i = 0; i <= nt; ++i)
            for (Eigen::Index j = 0; j < nx; ++j)
                s.values(i, j) = payoff_g(s.times[i], s.price(j), spec);
        return s;
    }
    if (regime == Regime::HoldToMaturity) {
        // alpha = 0, mu > r: V(t,x) = x e^{mu (T-t)} (expected terminal price).
        for (Eigen::Index i = 0; i <= nt; ++i) {
            const double growth = std::exp(spec.market.mu * (T - s.times[i]));
            for (Eigen::Index j = 0; j < nx; ++j) s.values(i, j) = s.price(j) * growth;
        }
        return s;
    }

    const double sigma = spec.market.sigma;
    if (sigma < 1e-4)
        throw std::invalid_argument(
            "solve_pde requires sigma >= 1e-4 in the free-boundary regime; "
            "use the sigma0 oracle");

    const double h = s.log_prices[1] - s.log_prices[0];
    const double dt = T / nt;
    const double diff = 0.5 * sigma * sigma;
    const double conv = spec.market.mu - diff;

    // Spatial stencil in log price; first-order upwinding of the drift when
    // the cell Peclet number exceeds 2, else central differences.
    double al, ac, au;
    if (std::abs(conv) * h / diff > 2.0) {
        if (conv > 0.0) {
            al = diff / (h * h);
            ac = -2.0 * diff / (h * h) - conv / h;
            au = diff / (h * h) + conv / h;
        } else {
            al = diff / (h * h) - conv / h;
            ac = -2.0 * diff / (h * h) + conv / h;
            au = diff / (h * h);
        }
    } else {
        al = diff / (h * h) - conv / (2.0 * h);
        ac = -2.0 * diff / (h * h);
        au = diff / (h * h) + conv / (2.0 * h);
    }
    if (al < 0.0 || au < 0.0)
        throw std::runtime_error("grid too coarse: system matrix is not an M-matrix");

    const double price_ratio = std::exp(h);  // x_{j+1}/x_j on the uniform log grid

    // terminal condition, exact
    for (Eigen::Index j = 0; j < nx; ++j) s.values(nt, j) = payoff_g(T, s.price(j), spec);

    Eigen::VectorXd v(nx), g(nx), rhs(nx);
    for (Eigen::Index m = nt - 1; m >= 0; --m) {
        const double theta = (nt - 1 - m) < grid.rannacher_steps ? 1.0 : grid.theta;
        const double ml = -dt * theta * al;
        const double md = 1.0 - dt * theta * ac;
        const double mu_ = -dt * theta * au;

        const double t_m = s.times[m];
        for (Eigen::Index j = 0; j < nx; ++j) g[j] = payoff_g(t_m, s.price(j), spec);

        const auto next = s.values.row(m + 1).transpose().eval();
        const double ex = dt * (1.0 - theta);
        for (Eigen::Index j = 1; j < nx - 1; ++j)
            rhs[j] = next[j] + ex * (al * next[j - 1] + ac * next[j] + au * next[j + 1]);

        s.psor_total_iterations +=
            psor_step(v, next, g, rhs, ml, md, mu_, price_ratio, grid);
        s.values.row(m) = v.transpose();
    }
    return s;
}

Boundary extract_boundary(const ValueSurface& surface, double eps_stop) {
    const Eigen::Index nx = surface.log_prices.size();
    const Eigen::Index nt = surface.times.size() - 1;
    const Regime regime = classify_regime(surface.spec);

    Boundary b;
    b.regime = regime;
    b.times = surface.times.head(nt);
    b.levels.resize(nt);

    if (regime == Regime::SellImmediately) {
        b.levels.setConstant(std::numeric_limits<double>::infinity());
        return b;
    }
    if (regime == Regime::HoldToMaturity) {
        b.levels.setZero();
        return b;
    }

    for (Eigen::Index i = 0; i < nt; ++i) {
        // d_j <= 0 marks the stopping region
        auto slack = [&](Eigen::Index j) {
            const double gj = payoff_g(surface.times[i], surface.price(j), surface.spec);
            return surface.values(i, j) - gj - eps_stop * (1.0 + std::abs(gj));
        };
        Eigen::Index j_stop = -1;
        for (Eigen::Index j = nx - 1; j >= 0; --j) {
            if (slack(j) <= 0.0) {
                j_stop = j;
                break;
            }
        }
        if (j_stop < 0) {
            b.levels[i] = 0.0;
        } else if (j_stop == nx - 1) {
            b.levels[i] = surface.price(nx - 1);
        } else {
            const double d0 = slack(j_stop), d1 = slack(j_stop + 1);
            const double w = d1 > d0 ? -d0 / (d1 - d0) : 0.0;
            const double yb = surface.log_prices[j_stop] +
                              w * (surface.log_prices[j_stop + 1] - surface.log_prices[j_stop]);
            b.levels[i] = std::exp(yb);
        }
    }

    // report, do not repair: flag drops beyond one node spacing
    const double h = surface.log_prices[1] - surface.log_prices[0];
    b.monotone = true;
    b.worst_violation = 0.0;
    for (Eigen::Index i = 0; i + 1 < nt; ++i) {
        const double drop = b.levels[i] - b.levels[i + 1];
        if (drop > 0.0) {
            b.worst_violation = std::max(b.worst_violation, drop);
            if (drop > b.levels[i] * (std::exp(h) - 1.0)) b.monotone = false;
        }
    }
    return b;
}

Eigen::VectorXd smooth_fit_residual(const ValueSurface& surface, const Boundary& boundary) {
    if (classify_regime(surface.spec) != Regime::FreeBoundary)
        throw std::invalid_argument("smooth-fit diagnostic requires the free-boundary regime");

    const Eigen::Index nx = surface.log_prices.size();
    const Eigen::Index n = boundary.times.size();
    Eigen::VectorXd residuals(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const double bt = boundary.levels[i];
        const double yb = std::log(bt);
        // first grid node at or above the boundary
        Eigen::Index jb = 0;
        while (jb < nx && surface.log_prices[jb] < yb) ++jb;
        if (jb < 1 || jb + 2 >= nx)
            throw std::runtime_error("boundary outside grid interior at t = " +
                                     std::to_string(boundary.times[i]));

        // quadratic through the three continuation-side nodes, differentiated
        // at the boundary location
        const double y0 = surface.log_prices[jb], y1 = surface.log_prices[jb + 1],
                     y2 = surface.log_prices[jb + 2];
        const double v0 = surface.values(i, jb), v1 = surface.values(i, jb + 1),
                     v2 = surface.values(i, jb + 2);
        const double dVdy = v0 * (2.0 * yb - y1 - y2) / ((y0 - y1) * (y0 - y2)) +
                            v1 * (2.0 * yb - y0 - y2) / ((y1 - y0) * (y1 - y2)) +
                            v2 * (2.0 * yb - y0 - y1) / ((y2 - y0) * (y2 - y1));
        const double dVdx = dVdy / bt;
        residuals[i] = std::abs(dVdx / payoff_g_x(boundary.times[i], surface.spec) - 1.0);
    }
    return residuals;
}

double value_at(const ValueSurface& surface, double t, double x) {
    const Eigen::Index nx = surface.log_prices.size();
    const Eigen::Index nt = surface.times.size();
    const double y = std::log(x);
    if (t < surface.times[0] || t > surface.times[nt - 1] || y < surface.log_prices[0] ||
        y > surface.log_prices[nx - 1])
        throw std::out_of_range("value_at query outside the grid hull");

    auto cell = [](const Eigen::VectorXd& grid, double q) {
        Eigen::Index k = 0;
        while (k + 2 < grid.size() && grid[k + 1] <= q) ++k;
        return k;
    };
    const Eigen::Index i = cell(surface.times, t);
    const Eigen::Index j = cell(surface.log_prices, y);
    const double wt = (t - surface.times[i]) / (surface.times[i + 1] - surface.times[i]);
    const double wy =
        (y - surface.log_prices[j]) / (surface.log_prices[j + 1] - surface.log_prices[j]);
    return (1.0 - wt) * ((1.0 - wy) * surface.values(i, j) + wy * surface.values(i, j + 1)) +
           wt * ((1.0 - wy) * surface.values(i + 1, j) + wy * surface.values(i + 1, j + 1));
}

}  // namespace taxstop::pde
