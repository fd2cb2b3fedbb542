#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rankprior/errors.hpp"
#include "rankprior/npmle.hpp"
#include "rankprior/posterior.hpp"

using namespace rankprior;
using doctest::Approx;

namespace {

std::vector<Observation> clustered_dataset(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> mean(-2.3, 1.0);
    std::gamma_distribution<double> var(2.0, 0.1);
    std::normal_distribution<double> z;
    std::vector<Observation> obs(n);
    for (auto& o : obs) {
        const double s = std::sqrt(var(gen));
        o = {mean(gen) + s * z(gen), s};
    }
    return obs;
}

void check_fit_properties(const std::vector<Observation>& obs, const NpmleFit& fit) {
    const std::size_t n = obs.size();
    for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k)
        REQUIRE(fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-9 * std::abs(fit.loglik_trace[k - 1]));
    CHECK(fit.max_gradient_ratio <= 1.0 + 1e-6);
    for (const auto& o : obs) {
        const double r = local_mass_radius(n, o.sigma);
        CHECK(mass_in_interval(fit.prior, o.x - r, o.x + r) >= local_mass_floor(n) * (1.0 - 1e-9));
        if (n >= 2) CHECK(std::abs(posterior_mean(fit.prior, o) - o.x) <= combined_robustness_bound(n, o.sigma));
    }
    // Independent gradient check over the candidate grid.
    auto grid = npmle_grid(obs, 400);
    auto w = fit.prior.weights();
    auto b = fit.prior.support();
    std::vector<double> marg(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < b.size(); ++i)
            marg[j] += w[i] * oracle::phi((obs[j].x - b[i]) / obs[j].sigma) / obs[j].sigma;
    double worst = 0.0;
    for (double g : grid) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += oracle::phi((obs[j].x - g) / obs[j].sigma) / obs[j].sigma / marg[j];
        worst = std::max(worst, d / static_cast<double>(n));
    }
    CHECK(worst <= 1.0 + 1e-6);
}

}  // namespace

TEST_CASE("single observation gives a point mass at the observation") {
    std::vector<Observation> obs = {{2.0, 0.5}};
    auto fit = fit_npmle(obs);
    REQUIRE(fit.prior.family() == Family::Discrete);
    CHECK(fit.prior.support().size() == 1);
    CHECK(fit.prior.support()[0] == Approx(2.0).epsilon(1e-12));
    CHECK(posterior_mean(fit.prior, obs[0]) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("two separated observations split the mass") {
    std::vector<Observation> obs = {{-5.0, 0.1}, {5.0, 0.1}};
    auto fit = fit_npmle(obs);
    double left = 0.0, right = 0.0;
    auto b = fit.prior.support();
    auto w = fit.prior.weights();
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (std::abs(b[i] + 5.0) <= 0.1) left += w[i];
        if (std::abs(b[i] - 5.0) <= 0.1) right += w[i];
    }
    CHECK(left == Approx(0.5).epsilon(0.02));
    CHECK(right == Approx(0.5).epsilon(0.02));
    CHECK(left + right == Approx(1.0).epsilon(1e-9));
    // Brute-force two-point oracle: symmetric weights are optimal for a symmetric pair.
    auto ll = [&](double p) {
        return std::log(p * oracle::phi(0.0) / 0.1 + (1 - p) * oracle::phi(100.0) / 0.1) +
               std::log(p * oracle::phi(100.0) / 0.1 + (1 - p) * oracle::phi(0.0) / 0.1);
    };
    CHECK(oracle::golden_max(ll, 0.01, 0.99, 1e-10) == Approx(0.5).epsilon(1e-6));
}

TEST_CASE("fitted likelihood dominates the true prior") {
    auto obs = clustered_dataset(500, 41);
    auto fit = fit_npmle(obs);
    CHECK(fit.converged);
    double truth = 0.0;
    for (const auto& o : obs) {
        const double s = std::sqrt(1.0 + o.sigma * o.sigma);
        truth += std::log(oracle::phi((o.x + 2.3) / s) / s);
    }
    CHECK(fit.log_likelihood >= truth);
    CHECK(marginal_log_likelihood(fit.prior, obs) == Approx(fit.log_likelihood).epsilon(1e-10));
    check_fit_properties(obs, fit);
}

TEST_CASE("property suite on random datasets") {
    std::mt19937_64 gen(43);
    for (std::size_t n : {5u, 50u}) {
        for (int rep = 0; rep < 10; ++rep) {
            auto obs = clustered_dataset(n, gen());
            auto fit = fit_npmle(obs);
            CAPTURE(n);
            CAPTURE(rep);
            CHECK(fit.converged);
            check_fit_properties(obs, fit);
        }
    }
}

TEST_CASE("grid contains the observations") {
    std::vector<Observation> obs = {{0.3, 0.1}, {1.7, 0.2}, {-0.4, 0.05}};
    auto g = npmle_grid(obs, 50);
    for (const auto& o : obs) CHECK(std::binary_search(g.begin(), g.end(), o.x));
    CHECK(std::is_sorted(g.begin(), g.end()));
    CHECK(g.front() == Approx(-0.4 - 0.6));
    CHECK(g.back() == Approx(1.7 + 0.6));
    CHECK_THROWS_AS(fit_npmle(std::vector<Observation>{}), ArgumentError);
}

TEST_CASE("marginal likelihood of a normal prior") {
    std::vector<Observation> obs = {{0.5, 0.3}, {-1.0, 1.0}};
    double want = 0.0;
    for (const auto& o : obs) {
        const double s = std::sqrt(4.0 + o.sigma * o.sigma);
        want += std::log(oracle::phi(o.x / s) / s);
    }
    CHECK(marginal_log_likelihood(PriorSpec::normal(2.0), obs) == Approx(want).epsilon(1e-12));
}

TEST_CASE("robustness bounds") {
    CHECK(lemma1_bound(std::exp(1.0), 0.0, 1.0) == Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(lemma1_bound(100.0, 0.5, 0.1) == Approx(0.5 + 0.1 * std::sqrt(2.0 * std::log(100.0))).epsilon(1e-14));
    CHECK(lemma1_bound(100.0, 0.5, 0.1) == Approx(0.803485).epsilon(1e-6));
    CHECK_THROWS_AS(lemma1_bound(1.0, 0.0, 1.0), ArgumentError);

    const double c = 1.0 - std::exp(-0.5);
    CHECK(combined_robustness_bound(2, 1.0) ==
          Approx(std::sqrt(2.0 * std::log(2.0) + 1.0) + std::sqrt(2.0 * std::log(2.0 / c - 1.0))).epsilon(1e-14));
    CHECK(combined_robustness_bound(17, 2.0) == Approx(2.0 * combined_robustness_bound(17, 1.0)).epsilon(1e-14));
    double prev = combined_robustness_bound(2, 1.0);
    for (std::size_t n = 3; n <= 1000000; n = n < 100 ? n + 1 : n * 3 / 2) {
        const double v = combined_robustness_bound(n, 1.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("deviation bound on randomized discrete priors") {
    std::mt19937_64 gen(47);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t k = 2 + gen() % 20;
        std::vector<double> b(k), w(k);
        for (auto& v : b) v = -5.0 + 10.0 * u(gen);
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        w.resize(b.size());
        double tot = 0.0;
        for (auto& v : w) tot += (v = u(gen) + 1e-3);
        for (auto& v : w) v /= tot;
        double sum = std::accumulate(w.begin(), w.end(), 0.0);
        w.back() += 1.0 - sum;
        auto prior = PriorSpec::discrete(b, w);
        const double x = -6.0 + 12.0 * u(gen);
        const double sigma = 0.05 + 2.0 * u(gen);
        const double a = 0.1 + 2.0 * u(gen);
        const double mass = mass_in_interval(prior, x - a, x + a);
        if (!(mass > 0.0)) continue;
        const double r = 1.0 / mass - 1.0;
        if (!(r > std::exp(1.0))) continue;
        CHECK(std::abs(posterior_mean(prior, {x, sigma}) - x) <= lemma1_bound(r, a, sigma) + 1e-12);
    }
}

TEST_CASE("serial and parallel EM steps agree exactly") {
    auto obs = clustered_dataset(300, 53);
    auto grid = npmle_grid(obs, 200);
    const std::size_t g = grid.size();
    std::vector<double> lik(obs.size() * g);
    for (std::size_t j = 0; j < obs.size(); ++j)
        for (std::size_t b = 0; b < g; ++b) lik[j * g + b] = oracle::phi((obs[j].x - grid[b]) / obs[j].sigma);
    std::vector<double> w(g, 1.0 / static_cast<double>(g));
    std::vector<double> w1(g), w2(g), g1(g), g2(g);
    const double l1 = kernels::mixture_em_step_serial(lik, g, w, w1, g1);
    const double l2 = kernels::mixture_em_step_parallel(lik, g, w, w2, g2);
    CHECK(l1 == l2);
    CHECK(w1 == w2);
    CHECK(g1 == g2);
    CHECK(std::accumulate(w1.begin(), w1.end(), 0.0) == Approx(1.0).epsilon(1e-12));
}
