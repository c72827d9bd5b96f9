#include <cmath>

#include <doctest.h>

#include "taxstop/pde.hpp"
#include "taxstop/sigma0.hpp"
#include "test_util.hpp"

using namespace taxstop;
using namespace taxstop::pde;
using test::fig_spec;

namespace {

GridConfig small_grid() {
    GridConfig g;
    g.n_x = 401;
    g.n_t = 300;
    return g;
}

}  // namespace

TEST_CASE("SellImmediately: V = G on the whole grid") {
    ProblemSpec s = fig_spec();
    s.market.mu = 0.02;
    const auto surf = solve_pde(s, small_grid());
    for (Eigen::Index i = 0; i < surf.times.size(); i += 37) {
        for (Eigen::Index j = 0; j < surf.log_prices.size(); j += 23) {
            const double g = payoff_g(surf.times[i], surf.price(j), s);
            CHECK(surf.values(i, j) == doctest::Approx(g).epsilon(1e-14));
        }
    }
    CHECK(surf.psor_total_iterations == 0);
}

TEST_CASE("HoldToMaturity: V(0,x0) equals the GBM mean") {
    ProblemSpec s = fig_spec();
    s.tax.alpha = 0.0;
    s.market.r = 0.02;  // mu > r so holding to maturity is optimal
    s.x0 = 100.0;
    const auto surf = solve_pde(s, small_grid());
    CHECK(value_at(surf, 0.0, 100.0) == doctest::Approx(108.112).epsilon(1e-3));
}

TEST_CASE("tiny sigma rejected in the free-boundary regime") {
    ProblemSpec s = fig_spec();
    s.market.sigma = 1e-5;
    CHECK_THROWS_WITH_AS(solve_pde(s, small_grid()), doctest::Contains("sigma0"),
                         std::invalid_argument);
}

TEST_CASE("free-boundary surface invariants") {
    const ProblemSpec s = fig_spec();
    const auto surf = solve_pde(s, small_grid());
    const Eigen::Index nt = surf.times.size() - 1;
    const Eigen::Index nx = surf.log_prices.size();

    // terminal condition exact
    for (Eigen::Index j = 0; j < nx; ++j)
        CHECK(surf.values(nt, j) == payoff_g(s.horizon_t, surf.price(j), s));

    const double lipschitz = 3.0 * (1.0 - s.tax.alpha) *
                             std::exp((std::abs(s.market.mu) + s.market.r) * s.horizon_t);
    for (Eigen::Index i = 0; i <= nt; ++i) {
        for (Eigen::Index j = 0; j < nx; ++j) {
            const double g = payoff_g(surf.times[i], surf.price(j), s);
            // obstacle
            CHECK(surf.values(i, j) >= g - 1e-8 * std::max(1.0, std::abs(g)));
            if (j > 0) {
                // monotone and Lipschitz in x
                const double dv = surf.values(i, j) - surf.values(i, j - 1);
                const double dx = surf.price(j) - surf.price(j - 1);
                CHECK(dv >= -1e-9 * std::abs(surf.values(i, j)));
                CHECK(dv / dx <= lipschitz);
            }
        }
    }

    // stopping region monotone in time
    for (Eigen::Index i = 0; i + 1 <= nt; ++i) {
        for (Eigen::Index j = 0; j < nx; ++j) {
            const double g0 = payoff_g(surf.times[i], surf.price(j), s);
            const double g1 = payoff_g(surf.times[i + 1], surf.price(j), s);
            const double scale0 = std::max(1.0, std::abs(g0));
            const double scale1 = std::max(1.0, std::abs(g1));
            if (surf.values(i, j) - g0 <= 1e-8 * scale0)
                CHECK(surf.values(i + 1, j) - g1 <= 1e-6 * scale1);
        }
    }

    // (0, f) lies in the continuation region
    CHECK(value_at(surf, 0.0, 180.0) > payoff_g(0.0, 180.0, s));
}

TEST_CASE("boundary extraction on the reference parameters") {
    const ProblemSpec s = fig_spec();
    const auto surf = solve_pde(s, small_grid());
    const auto b = extract_boundary(surf);
    const double f = threshold_f(s);
    const double h = surf.log_prices[1] - surf.log_prices[0];

    CHECK(b.monotone);
    for (Eigen::Index i = 0; i < b.levels.size(); ++i) {
        CHECK(b.levels[i] > 100.0);
        CHECK(b.levels[i] <= f * std::exp(h));
        if (i > 0) CHECK(b.levels[i] >= b.levels[i - 1] - 1e-9 * b.levels[i - 1]);
    }
    CHECK(b.levels[b.levels.size() - 1] == doctest::Approx(180.0).epsilon(0.02));
}

TEST_CASE("near-degenerate sigma tracks the sigma0 oracle") {
    ProblemSpec s = fig_spec();
    s.market.sigma = 0.01;
    GridConfig g;
    g.n_x = 801;
    g.n_t = 600;
    const auto surf = solve_pde(s, g);
    const auto b = extract_boundary(surf);
    for (Eigen::Index i = 0; i < b.levels.size(); i += 7) {
        const double oracle = sigma0::boundary(b.times[i], s);
        CHECK(b.levels[i] == doctest::Approx(oracle).epsilon(0.01));
    }
}

TEST_CASE("smooth fit residual small at mid horizon and shrinking with n_x") {
    const ProblemSpec s = fig_spec();
    double prev = 1e300;
    for (int nx : {401, 801}) {
        GridConfig g;
        g.n_x = nx;
        g.n_t = 300;
        const auto surf = solve_pde(s, g);
        const auto b = extract_boundary(surf);
        const auto res = smooth_fit_residual(surf, b);
        const Eigen::Index mid = b.times.size() / 2;  // t = 1.5
        CHECK(res[mid] < 0.02);
        CHECK(res[mid] < prev + 1e-12);
        prev = res[mid];
    }
}

TEST_CASE("smooth fit rejected outside the free-boundary regime") {
    ProblemSpec s = fig_spec();
    s.market.mu = 0.02;
    const auto surf = solve_pde(s, small_grid());
    const auto b = extract_boundary(surf);
    CHECK_THROWS_AS(smooth_fit_residual(surf, b), std::invalid_argument);

    s = fig_spec();
    s.tax.alpha = 0.0;
    const auto surf2 = solve_pde(s, small_grid());
    CHECK_THROWS_AS(smooth_fit_residual(surf2, extract_boundary(surf2)),
                    std::invalid_argument);
}

TEST_CASE("value_at: node identity and hull checks") {
    const ProblemSpec s = fig_spec();
    const auto surf = solve_pde(s, small_grid());
    const Eigen::Index i = 100, j = 200;
    CHECK(value_at(surf, surf.times[i], surf.price(j)) ==
          doctest::Approx(surf.values(i, j)).epsilon(1e-13));
    CHECK(value_at(surf, s.horizon_t, surf.price(j)) ==
          doctest::Approx(payoff_g(s.horizon_t, surf.price(j), s)).epsilon(1e-12));
    CHECK_THROWS_AS(value_at(surf, -0.1, 100.0), std::out_of_range);
    CHECK_THROWS_AS(value_at(surf, 1.0, 1e9), std::out_of_range);
}

TEST_CASE("sigma dominance on a shared grid") {
    ProblemSpec lo = fig_spec(), hi = fig_spec();
    lo.market.sigma = 0.2;
    hi.market.sigma = 0.3;
    GridConfig g;  // default resolution; dominance tolerance assumes it
    default_truncation(hi, g.s_lo, g.s_hi);  // widest domain shared by both
    const auto s_lo = solve_pde(lo, g);
    const auto s_hi = solve_pde(hi, g);
    const double scale = s_hi.values.cwiseAbs().maxCoeff();
    CHECK(((s_hi.values - s_lo.values).minCoeff()) >= -1e-6 * scale);
}

TEST_CASE("grid convergence at (0, x0)") {
    const ProblemSpec s = fig_spec();
    GridConfig coarse = small_grid();
    GridConfig fine;
    fine.n_x = 801;
    fine.n_t = 600;
    const double vc = value_at(solve_pde(s, coarse), 0.0, s.x0);
    const double vf = value_at(solve_pde(s, fine), 0.0, s.x0);
    CHECK(std::abs(vf - vc) / vf < 5e-4);
}
