#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rankprior/prior.hpp"

namespace rankprior {

// Units ordered best first. scores[k] belongs to unit order[k].
struct RankedList {
    std::vector<std::size_t> order;
    std::vector<double> scores;

    std::size_t size() const noexcept { return order.size(); }
    // Position (0-based) of every unit, i.e. the inverse permutation.
    std::vector<std::size_t> positions() const;
};

// E[theta | x] for theta ~ prior, x ~ N(theta, sigma^2). sigma == 0 returns x.
double posterior_mean(const PriorSpec& prior, const Observation& obs);

// Same quantity by direct adaptive quadrature for any continuous prior;
// used as the reference for the closed forms.
double posterior_mean_quadrature(const PriorSpec& prior, const Observation& obs, double rel_tol = 1e-9);

// First-order shrinkage x - lambda(x) sigma^2.
double posterior_mean_approx(const PriorSpec& prior, const Observation& obs);

// Sorts by descending score; ties go to the lower index. Throws
// NumericalError on NaN scores.
RankedList rank_scores(std::vector<double> scores);

RankedList rank_units(const PriorSpec& prior, std::span<const Observation> obs);
RankedList rank_by_point_estimate(std::span<const Observation> obs);

namespace kernels {

// Posterior means for every unit. Both throw UnitError naming the lowest
// failing index, so the two are interchangeable.
std::vector<double> posterior_means_serial(const PriorSpec& prior, std::span<const Observation> obs);
std::vector<double> posterior_means_parallel(const PriorSpec& prior, std::span<const Observation> obs);

}  // namespace kernels

}  // namespace rankprior
