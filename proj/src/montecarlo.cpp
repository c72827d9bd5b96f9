#include "taxstop/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace taxstop::mc {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// One engine per antithetic pair, derived from (seed, pair index); the pair
// stream is identical whether paths are generated in a batch, streamed, or
// split over threads.
std::mt19937_64 pair_engine(std::uint64_t seed, long pair) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(pair))));
}

// Fills the two antithetic paths of a pair (exact GBM transitions).
void fill_pair(const ProblemSpec& spec, int n_steps, std::uint64_t seed, long pair,
               double* even, double* odd) {
    const double dt = spec.horizon_t / n_steps;
    const double drift = (spec.market.mu - 0.5 * spec.market.sigma * spec.market.sigma) * dt;
    const double vol = spec.market.sigma * std::sqrt(dt);
    auto eng = pair_engine(seed, pair);
    std::normal_distribution<double> normal;
    even[0] = spec.x0;
    odd[0] = spec.x0;
    for (int i = 0; i < n_steps; ++i) {
        const double z = normal(eng);
        even[i + 1] = even[i] * std::exp(drift + vol * z);
        odd[i + 1] = odd[i] * std::exp(drift - vol * z);
    }
}

// tau index for one path under a policy (boundary sampled at grid times by
// linear interpolation in t).
int stop_index(const double* path, int n_steps, double dt, const StoppingPolicy& policy) {
    if (const auto* fixed = std::get_if<StopAt>(&policy)) {
        const int k = static_cast<int>(std::lround(fixed->t_star / dt));
        return std::clamp(k, 0, n_steps);
    }
    const auto& b = std::get<BoundaryPolicy>(policy).boundary;
    for (int i = 0; i <= n_steps; ++i)
        if (path[i] <= b.at(i * dt)) return i;
    return n_steps;
}

struct PairAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    long n = 0;
    void add(double pair_mean) {
        sum += pair_mean;
        sum_sq += pair_mean * pair_mean;
        ++n;
    }
    void merge(const PairAccumulator& other) {
        sum += other.sum;
        sum_sq += other.sum_sq;
        n += other.n;
    }
    McEstimate estimate(long n_paths, std::uint64_t seed) const {
        McEstimate e;
        e.mean = sum / n;
        const double var = std::max(0.0, (sum_sq - sum * sum / n) / std::max(1L, n - 1));
        e.std_error = std::sqrt(var / n);
        e.n_paths = n_paths;
        e.seed = seed;
        return e;
    }
};

}  // namespace

PathBatch simulate_paths(const ProblemSpec& spec, int n_paths, int n_steps,
                         std::uint64_t seed) {
    spec.validate();
    if (n_paths < 2 || n_paths % 2 != 0)
        throw std::invalid_argument("n_paths must be even (antithetic pairs)");
    if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");

    PathBatch batch;
    batch.n_paths = n_paths;
    batch.n_steps = n_steps;
    batch.seed = seed;
    batch.spec = spec;
    batch.prices.resize(n_paths, n_steps + 1);
    for (long pair = 0; pair < n_paths / 2; ++pair) {
        Eigen::VectorXd even(n_steps + 1), odd(n_steps + 1);
        fill_pair(spec, n_steps, seed, pair, even.data(), odd.data());
        batch.prices.row(2 * pair) = even.transpose();
        batch.prices.row(2 * pair + 1) = odd.transpose();
    }
    return batch;
}

McEstimate evaluate_policy(const PathBatch& batch, const StoppingPolicy& policy,
                           const ProblemSpec& spec) {
    const double dt = spec.horizon_t / batch.n_steps;
    const long n_pairs = batch.n_paths / 2;
    const long chunk = 4096;  // same reduction order as the streaming evaluator
    PairAccumulator acc;
    for (long lo = 0; lo < n_pairs; lo += chunk) {
        PairAccumulator part;
        const long hi = std::min(n_pairs, lo + chunk);
        for (long pair = lo; pair < hi; ++pair) {
            double pay[2];
            for (int s = 0; s < 2; ++s) {
                const Eigen::VectorXd row = batch.prices.row(2 * pair + s);
                const int k = stop_index(row.data(), batch.n_steps, dt, policy);
                pay[s] = payoff_g(k * dt, row[k], spec);
            }
            part.add(0.5 * (pay[0] + pay[1]));
        }
        acc.merge(part);
    }
    return acc.estimate(batch.n_paths, batch.seed);
}

McEstimate evaluate_policy_streaming(const ProblemSpec& spec, const StoppingPolicy& policy,
                                     int n_paths, int n_steps, std::uint64_t seed,
                                     int n_threads) {
    spec.validate();
    if (n_paths < 2 || n_paths % 2 != 0)
        throw std::invalid_argument("n_paths must be even (antithetic pairs)");
    if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    if (n_threads < 1) n_threads = 1;

    const long n_pairs = n_paths / 2;
    const long chunk = 4096;  // fixed so the reduction order is thread-count independent
    const long n_chunks = (n_pairs + chunk - 1) / chunk;
    const double dt = spec.horizon_t / n_steps;

    std::vector<PairAccumulator> partial(n_chunks);
    auto run_chunk = [&](long c) {
        const long lo = c * chunk, hi = std::min(n_pairs, lo + chunk);
        Eigen::VectorXd even(n_steps + 1), odd(n_steps + 1);
        for (long pair = lo; pair < hi; ++pair) {
            fill_pair(spec, n_steps, seed, pair, even.data(), odd.data());
            const int ke = stop_index(even.data(), n_steps, dt, policy);
            const int ko = stop_index(odd.data(), n_steps, dt, policy);
            partial[c].add(0.5 * (payoff_g(ke * dt, even[ke], spec) +
                                  payoff_g(ko * dt, odd[ko], spec)));
        }
    };

    if (n_threads == 1) {
        for (long c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> workers;
        std::atomic<long> cursor{0};
        for (int w = 0; w < n_threads; ++w)
            workers.emplace_back([&] {
                for (long c = cursor.fetch_add(1); c < n_chunks; c = cursor.fetch_add(1))
                    run_chunk(c);
            });
        for (auto& w : workers) w.join();
    }

    PairAccumulator acc;
    for (const auto& part : partial) acc.merge(part);  // fixed chunk order
    return acc.estimate(n_paths, seed);
}

DynkinResult dynkin_check(const ProblemSpec& spec, double t_star, const PathBatch& batch) {
    const double dt = spec.horizon_t / batch.n_steps;
    const int k_star = static_cast<int>(std::lround(t_star / dt));
    if (std::abs(k_star * dt - t_star) > 1e-9 * spec.horizon_t || k_star < 0 ||
        k_star > batch.n_steps)
        throw std::invalid_argument("t_star must lie on the batch time grid");

    const double g0 = payoff_g(0.0, spec.x0, spec);
    double sum = 0.0, sum_sq = 0.0;
    for (int p = 0; p < batch.n_paths; ++p) {
        double integral = 0.0;
        double prev = running_payoff_f(0.0, batch.prices(p, 0), spec);
        for (int i = 1; i <= k_star; ++i) {
            const double cur = running_payoff_f(i * dt, batch.prices(p, i), spec);
            integral += 0.5 * dt * (prev + cur);
            prev = cur;
        }
        const double res = payoff_g(k_star * dt, batch.prices(p, k_star), spec) - g0 - integral;
        sum += res;
        sum_sq += res * res;
    }

    const long n = batch.n_paths;
    DynkinResult out;
    out.residual_mean = sum / n;
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / std::max(1L, n - 1));
    out.std_error = std::sqrt(var / n);
    out.studentized = out.std_error > 0.0 ? out.residual_mean / out.std_error : 0.0;
    out.relative = std::abs(out.residual_mean) / std::abs(g0);
    return out;
}

}  // namespace taxstop::mc
