#include "taxstop/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "taxstop/sigma0.hpp"

namespace taxstop::analysis {

SolveResult solve(const ProblemSpec& spec, const pde::GridConfig& grid) {
    spec.validate();
    grid.validate();

    SolveResult res;
    res.regime = classify_regime(spec);

    switch (res.regime) {
        case Regime::SellImmediately:
            res.v0 = payoff_g(0.0, spec.x0, spec);
            res.surface = pde::solve_pde(spec, grid);  // analytic short-circuit, V = G
            res.boundary = pde::extract_boundary(*res.surface);
            res.method = "closed_form";
            return res;
        case Regime::HoldToMaturity:
            res.v0 = spec.x0 * std::exp(spec.market.mu * spec.horizon_t);
            res.surface = pde::solve_pde(spec, grid);
            res.boundary = pde::extract_boundary(*res.surface);
            res.method = "closed_form";
            return res;
        case Regime::FreeBoundary:
            break;
    }

    if (spec.market.sigma >= 1e-4) {
        res.surface = pde::solve_pde(spec, grid);
        res.v0 = pde::value_at(*res.surface, 0.0, spec.x0);
        res.boundary = pde::extract_boundary(*res.surface);
        res.method = "pde";
    } else {
        res.v0 = sigma0::value(0.0, spec.x0, spec);
        const int nt = grid.n_t;
        res.boundary.regime = Regime::FreeBoundary;
        res.boundary.times =
            Eigen::VectorXd::LinSpaced(nt, 0.0, spec.horizon_t * (nt - 1) / nt);
        res.boundary.levels.resize(nt);
        for (int i = 0; i < nt; ++i)
            res.boundary.levels[i] = sigma0::boundary(res.boundary.times[i], spec);
        res.method = "sigma0";
    }
    return res;
}

TimingOptionReport timing_option_value(const ProblemSpec& spec, double v0,
                                       const std::string& method) {
    spec.validate();
    const double a = spec.tax.alpha;
    const double T = spec.horizon_t;
    // Immediate taxation then continuous mark-to-market: wealth grows at
    // (1-a) mu; the degenerate optimum sells at 0 for mu <= r and at T
    // otherwise, collapsing to the max(mu, r) exponent.
    TimingOptionReport rep;
    rep.v0 = v0;
    rep.method = method;
    rep.benchmark = ((1.0 - a) * spec.x0 + a * spec.tax.p0) *
                    std::exp(std::max(spec.market.mu, spec.market.r) * (1.0 - a) * T);
    rep.option_value = std::exp(-spec.market.r * (1.0 - a) * T) * (v0 - rep.benchmark);
    return rep;
}

SweepReport sigma_sweep(const ProblemSpec& spec, std::vector<double> sigmas,
                        const pde::GridConfig& grid) {
    spec.validate();
    for (double s : sigmas)
        if (!(s >= 0.0)) throw std::invalid_argument("sweep sigma values must be >= 0");
    std::sort(sigmas.begin(), sigmas.end());

    const int nt = grid.n_t;
    const Eigen::VectorXd shared_times =
        Eigen::VectorXd::LinSpaced(nt, 0.0, spec.horizon_t * (nt - 1) / nt);

    SweepReport report;
    double max_dx = 0.0;  // largest log-price node spacing among solved points
    for (double s : sigmas) {
        SweepPoint point;
        point.sigma = s;
        ProblemSpec ps = spec;
        ps.market.sigma = s;
        try {
            SolveResult sol = solve(ps, grid);
            point.solved = true;
            point.v0 = sol.v0;
            point.timing_option = timing_option_value(ps, sol.v0, sol.method).option_value;
            point.boundary.regime = sol.regime;
            point.boundary.times = shared_times;
            point.boundary.levels.resize(nt);
            for (int i = 0; i < nt; ++i)
                point.boundary.levels[i] = sol.boundary.at(shared_times[i]);
            if (sol.surface) {
                const auto& lp = sol.surface->log_prices;
                max_dx = std::max(max_dx, lp[1] - lp[0]);
            }
        } catch (const std::exception& e) {
            point.error = e.what();
        }
        report.points.push_back(std::move(point));
    }

    // verdicts: V nondecreasing in sigma, boundary pointwise nonincreasing
    double v_scale = 1.0;
    for (const auto& p : report.points)
        if (p.solved) v_scale = std::max(v_scale, std::abs(p.v0));
    for (std::size_t k = 0; k + 1 < report.points.size(); ++k) {
        const auto& lo = report.points[k];
        const auto& hi = report.points[k + 1];
        if (!lo.solved || !hi.solved) continue;
        report.worst_value_violation =
            std::max(report.worst_value_violation, lo.v0 - hi.v0);
        for (int i = 0; i < nt; ++i)
            report.worst_boundary_violation = std::max(
                report.worst_boundary_violation, hi.boundary.levels[i] - lo.boundary.levels[i]);
    }
    report.value_nondecreasing = report.worst_value_violation <= 1e-6 * v_scale;
    const double b_tol = (std::exp(max_dx) - 1.0) *
                         (report.points.empty() ? 0.0 : spec.x0) * 2.0;
    report.boundary_nonincreasing = report.worst_boundary_violation <= std::max(b_tol, 1e-9);
    return report;
}

}  // namespace taxstop::analysis
