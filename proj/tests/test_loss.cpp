#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rankprior/errors.hpp"
#include "rankprior/loss.hpp"
#include "rankprior/numeric.hpp"

using namespace rankprior;
using doctest::Approx;

namespace {

RankedList from_order(std::vector<std::size_t> order) {
    RankedList r;
    r.scores.assign(order.size(), 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) r.scores[k] = static_cast<double>(order.size() - k);
    r.order = std::move(order);
    return r;
}

// l_k from the set-difference form: sum of true-top-k values missed minus
// sum of selected values outside the true top k.
double set_difference_loss(const std::vector<double>& theta, const std::vector<std::size_t>& order, std::size_t k) {
    auto truth = oracle::argsort_desc(theta);
    std::vector<bool> in_true(theta.size()), in_est(theta.size());
    for (std::size_t i = 0; i < k; ++i) {
        in_true[truth[i]] = true;
        in_est[order[i]] = true;
    }
    double out = 0.0;
    for (std::size_t u = 0; u < theta.size(); ++u) {
        if (in_true[u] && !in_est[u]) out += theta[u];
        if (in_est[u] && !in_true[u]) out -= theta[u];
    }
    return out;
}

double pair_inversions(const std::vector<double>& theta, const std::vector<std::size_t>& order) {
    double total = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j)
            if (theta[order[j]] > theta[order[i]]) total += theta[order[j]] - theta[order[i]];
    return total;
}

// lambda(x) written out per family, independent of the library.
double lam(const PriorSpec& p, double x) {
    switch (p.family()) {
        case Family::Normal: return x / (p.tau() * p.tau());
        case Family::Exponential: return p.rate();
        case Family::Pareto: return (p.alpha() + 1.0) / x;
        default: return 0.0;
    }
}

double dens(const PriorSpec& p, double x) {
    switch (p.family()) {
        case Family::Normal: return oracle::phi(x / p.tau()) / p.tau();
        case Family::Exponential: return x < 0 ? 0.0 : p.rate() * std::exp(-p.rate() * x);
        case Family::Pareto:
            return x < p.eta() ? 0.0 : p.alpha() * std::pow(p.eta(), p.alpha()) * std::pow(x, -p.alpha() - 1.0);
        default: return 0.0;
    }
}

double simpson_integral(const PriorSpec& t, const PriorSpec& e, double a) {
    return oracle::simpson_tail(
        [&](double x) {
            const double d = dens(t, x) * (lam(t, x) - lam(e, x));
            return d * d;
        },
        a);
}

const PriorSpec N1 = PriorSpec::normal(1.0);
const PriorSpec E1 = PriorSpec::exponential(1.0);
const PriorSpec P2 = PriorSpec::pareto(2.0, 0.5);

double cut(const PriorSpec& p) { return quantile(p, 0.9); }

}  // namespace

TEST_CASE("cutoff loss examples") {
    const std::vector<double> theta = {3.0, 2.0, 1.0};
    auto r = from_order({1, 0, 2});
    CHECK(cutoff_loss(theta, r, 1) == 1.0);
    CHECK(cutoff_loss(theta, r, 2) == 0.0);
    CHECK(cutoff_loss(theta, r, 3) == 0.0);
    auto id = from_order({0, 1, 2});
    for (std::size_t k = 1; k <= 3; ++k) CHECK(cutoff_loss(theta, id, k) == 0.0);
    CHECK_THROWS_AS(cutoff_loss(theta, r, 0), ArgumentError);
    CHECK_THROWS_AS(cutoff_loss(theta, r, 4), ArgumentError);
}

TEST_CASE("cutoff loss matches the set-difference form") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> theta(8);
        for (auto& t : theta) t = z(gen);
        std::vector<std::size_t> order(8);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), gen);
        auto r = from_order(order);
        auto all = cutoff_losses(theta, r);
        for (std::size_t k = 1; k <= 8; ++k) {
            CHECK(cutoff_loss(theta, r, k) == Approx(set_difference_loss(theta, order, k)).epsilon(1e-12));
            CHECK(all[k - 1] == Approx(cutoff_loss(theta, r, k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("inversion decomposition examples") {
    const std::vector<double> theta = {6, 5, 4, 3, 2, 1};
    // Five inverted pairs; (1,3) and (4,6) have gap 2, the rest gap 1.
    auto r = from_order({1, 2, 0, 5, 4, 3});
    CHECK(inversion_decomposition(theta, r) == 7.0);
    auto pos = r.positions();
    int inverted = 0;
    for (std::size_t u = 0; u < 6; ++u)
        for (std::size_t v = 0; v < 6; ++v) inverted += theta[u] > theta[v] && pos[u] > pos[v];
    CHECK(inverted == 5);
    auto l = cutoff_losses(theta, r);
    CHECK(std::accumulate(l.begin(), l.end(), 0.0) == 7.0);
    CHECK(inversion_decomposition(theta, from_order({0, 1, 2, 3, 4, 5})) == 0.0);
}

TEST_CASE("cutoff losses sum to the inversion decomposition, exhaustive n <= 6") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::size_t cases = 0;
    for (std::size_t n = 1; n <= 6; ++n) {
        std::vector<double> theta(n);
        for (auto& t : theta) t = u(gen);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        do {
            auto r = from_order(order);
            auto l = cutoff_losses(theta, r);
            const double total = std::accumulate(l.begin(), l.end(), 0.0);
            const double inv = inversion_decomposition(theta, r);
            CHECK(std::abs(total - inv) <= 1e-12 * std::max(1.0, inv));
            CHECK(inv == Approx(pair_inversions(theta, order)).epsilon(1e-12));
            ++cases;
        } while (std::next_permutation(order.begin(), order.end()));
    }
    CHECK(cases == 873);
}

TEST_CASE("cutoff losses sum to the inversion decomposition, random n = 50") {
    std::mt19937_64 gen(23);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> theta(50);
        for (auto& t : theta) t = z(gen);
        std::vector<std::size_t> order(50);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), gen);
        auto r = from_order(order);
        auto l = cutoff_losses(theta, r);
        const double total = std::accumulate(l.begin(), l.end(), 0.0);
        const double inv = inversion_decomposition(theta, r);
        REQUIRE(std::abs(total - inv) <= 1e-12 * std::max(1.0, inv));
        for (double v : l) REQUIRE(v >= -1e-12);
    }
}

TEST_CASE("weighted top-decile loss") {
    std::vector<double> theta(20);
    for (std::size_t i = 0; i < 20; ++i) theta[i] = 20.0 - static_cast<double>(i);
    std::vector<std::size_t> ref(20);
    std::iota(ref.begin(), ref.end(), std::size_t{0});
    auto reference = from_order(ref);
    CHECK(weighted_top_decile_loss(theta, reference, reference) == 0.0);
    auto swap12 = ref;
    std::swap(swap12[0], swap12[1]);
    CHECK(weighted_top_decile_loss(theta, from_order(swap12), reference) == 1.0);
    auto swap23 = ref;
    std::swap(swap23[1], swap23[2]);
    CHECK(weighted_top_decile_loss(theta, from_order(swap23), reference) == 0.0);
    // Agreement on the top m positions gives zero whatever happens below.
    auto tail = ref;
    std::reverse(tail.begin() + 2, tail.end());
    CHECK(weighted_top_decile_loss(theta, from_order(tail), reference) == 0.0);

    std::vector<double> small(9, 1.0);
    std::vector<std::size_t> o9(9);
    std::iota(o9.begin(), o9.end(), std::size_t{0});
    CHECK_THROWS_AS(weighted_top_decile_loss(small, from_order(o9), from_order(o9)), ArgumentError);
}

TEST_CASE("loss breakdown fields") {
    std::mt19937_64 gen(29);
    std::normal_distribution<double> z;
    std::vector<double> theta(40);
    for (auto& t : theta) t = z(gen);
    std::vector<std::size_t> order(40);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), gen);
    auto ref = from_order(oracle::argsort_desc(theta));
    auto b = loss_breakdown(theta, from_order(order), ref);
    CHECK(b.cutoff_count == 4);
    CHECK(b.per_cutoff.size() == 40);
    for (double v : b.per_cutoff) CHECK(v >= -1e-12);
    CHECK(std::abs(b.total_over_cutoffs - std::accumulate(b.per_cutoff.begin(), b.per_cutoff.end(), 0.0)) < 1e-12);
    CHECK(b.weighted_top_decile >= 0.0);
}

TEST_CASE("optimal expected loss") {
    CHECK(optimal_expected_loss(N1, 0.0, 0.0) == 0.0);
    const double pi2 = oracle::simpson([](double t) { return std::pow(oracle::phi(t), 2); }, -12.0, 12.0);
    CHECK(optimal_expected_loss(N1, 0.1, 0.1) == Approx(0.01 * pi2).epsilon(1e-8));
    CHECK(optimal_expected_loss(N1, 0.1, 0.1) == Approx(0.002820948).epsilon(1e-6));
    CHECK(optimal_expected_loss(E1, 0.1, 0.1) == Approx(0.005).epsilon(1e-12));
}

TEST_CASE("misspecification integral, quoted values") {
    CHECK(misspecification_integral({E1, PriorSpec::normal(1.700526), std::log(10.0)}) ==
          Approx(0.0001542356).epsilon(1e-5));
    CHECK(misspecification_integral({P2, PriorSpec::exponential(1.581139), std::sqrt(10.0) / 2.0}) ==
          Approx(0.0003614032).epsilon(1e-5));
    const double an = 1.281552;
    CHECK(misspecification_integral({N1, optimal_estimating_prior(N1, Family::Pareto, an), an}) ==
          Approx(0.002082605).epsilon(1e-5));
    CHECK(misspecification_integral({N1, N1, an}) == 0.0);
}

TEST_CASE("closed forms agree with quadrature and a Simpson oracle") {
    for (const auto& t : {N1, E1, P2})
        for (Family f : {Family::Normal, Family::Exponential, Family::Pareto}) {
            const double a = cut(t);
            const auto e = optimal_estimating_prior(t, f, a);
            // Off-optimum too, so the check is not only at zero-derivative points.
            const auto e2 = with_sensitivity_parameter(e, 1.3 * sensitivity_parameter(e));
            for (const auto& est : {e, e2}) {
                LossScenario s{t, est, a};
                const double closed = misspecification_integral(s);
                const double quad = misspecification_integral_quadrature(s);
                const double simp = simpson_integral(t, est, a);
                CAPTURE(family_name(t.family()));
                CAPTURE(family_name(f));
                if (closed == 0.0) {
                    CHECK(std::abs(quad) < 1e-14);
                } else {
                    CHECK(closed == Approx(quad).epsilon(1e-6));
                    CHECK(closed == Approx(simp).epsilon(1e-5));
                }
            }
        }
}

TEST_CASE("point-estimate integrals") {
    CHECK(point_estimate_integral(N1, 1.281552) == Approx(0.02466714).epsilon(1e-6));
    CHECK(point_estimate_integral(E1, std::log(10.0)) == Approx(0.005).epsilon(1e-10));
    CHECK(point_estimate_integral(P2, std::sqrt(10.0) / 2.0) == Approx(0.01301051).epsilon(1e-6));
    for (const auto& t : {N1, E1, P2})
        CHECK(point_estimate_integral(t, cut(t)) == Approx(point_estimate_integral_quadrature(t, cut(t))).epsilon(1e-8));
}

TEST_CASE("optimal hyperparameters") {
    CHECK(optimal_hyperparameter(N1, Family::Normal, cut(N1)) == Approx(1.0));
    CHECK(optimal_hyperparameter(E1, Family::Exponential, cut(E1)) == Approx(1.0));
    CHECK(optimal_hyperparameter(P2, Family::Pareto, cut(P2)) == Approx(2.0));
    CHECK(optimal_hyperparameter(E1, Family::Normal, std::log(10.0)) == Approx(1.700526).epsilon(1e-6));
    CHECK(optimal_hyperparameter(N1, Family::Exponential, 1.281552) == Approx(1.561386).epsilon(1e-6));
    const double tau = optimal_hyperparameter(P2, Family::Normal, cut(P2));
    CHECK(1.0 / (tau * tau) == Approx(0.72).epsilon(1e-9));
    CHECK(optimal_hyperparameter(E1, Family::Pareto, std::log(10.0)) == Approx(1.677186).epsilon(1e-6));
}

TEST_CASE("optimal hyperparameters are true minimizers") {
    for (const auto& t : {N1, E1, P2})
        for (Family f : {Family::Normal, Family::Exponential, Family::Pareto}) {
            const double a = cut(t);
            const auto e = optimal_estimating_prior(t, f, a);
            const double best = misspecification_integral({t, e, a});
            const double p = e.primary_parameter();
            for (double k : {0.99, 1.01})
                CHECK(misspecification_integral({t, e.with_primary_parameter(k * p), a}) > best);
            const double found = numeric::minimize(
                [&](double v) { return misspecification_integral({t, e.with_primary_parameter(v), a}); }, 0.2 * p,
                5.0 * p);
            CHECK(found == Approx(p).epsilon(1e-4));
        }
}

TEST_CASE("sensitivities") {
    CHECK(misestimation_sensitivity(N1, Family::Exponential, cut(N1)) == Approx(0.009862926).epsilon(1e-6));
    CHECK(misestimation_sensitivity(E1, Family::Exponential, cut(E1)) == Approx(0.005).epsilon(1e-9));
    CHECK(misestimation_sensitivity(P2, Family::Pareto, cut(P2)) == Approx(0.001445613).epsilon(1e-6));
    for (const auto& t : {N1, E1, P2})
        for (Family f : {Family::Normal, Family::Exponential, Family::Pareto}) {
            const double a = cut(t);
            const auto e = optimal_estimating_prior(t, f, a);
            const double p = sensitivity_parameter(e);
            const double h = 1e-3 * p;
            auto I = [&](double v) { return misspecification_integral({t, with_sensitivity_parameter(e, v), a}); };
            const double second = (I(p + h) - 2.0 * I(p) + I(p - h)) / (h * h);
            CHECK(misestimation_sensitivity(t, f, a) == Approx(second / 2.0).epsilon(1e-3));
        }
}

TEST_CASE("divergent combinations raise") {
    const auto heavy = PriorSpec::pareto(0.4, 0.5);
    const double a = cut(heavy);
    CHECK_THROWS_AS(misspecification_integral({heavy, N1, a}), DivergenceError);
    CHECK_NOTHROW(misspecification_integral({heavy, E1, a}));
    auto rows = loss_table(std::vector<PriorSpec>{heavy}, 0.9);
    REQUIRE(rows.size() == 4);
    CHECK(std::isinf(rows[0].integral_loss));
}

TEST_CASE("loss table csv") {
    auto rows = loss_table(default_true_priors(), 0.9);
    CHECK(rows.size() == 12);
    std::ostringstream os;
    write_loss_table_csv(os, rows);
    const std::string s = os.str();
    CHECK(s.rfind("true_family,est_family,parameter,integral_loss,optimal_param,sensitivity\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 13);
}
