#pragma once

// Curves of constant posterior mean in the (x, sigma^2) plane.

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rankprior/prior.hpp"

namespace rankprior {

struct IsotaxPoint {
    double x = 0.0;
    double variance = 0.0;
};

struct IsotaxisCurve {
    double level = 0.0;
    std::optional<double> rank_fraction;
    std::vector<IsotaxPoint> points;
    std::size_t failures = 0;  // grid variances with no root, omitted from points
};

enum class IsotaxMode {
    // Closed forms: exact for normal and improper exponential, first-order
    // shrinkage x - lambda(x) v for exponential and Pareto.
    Approximate,
    // Root-find posterior_mean(x, sqrt(v)) = C for every prior.
    Exact,
};

// Discrete priors always use the exact mode. Negative variances throw.
IsotaxisCurve isotaxis_curve(const PriorSpec& prior, double level, std::span<const double> variance_grid,
                             IsotaxMode mode = IsotaxMode::Approximate);

// Score of the unit ranked ceil(alpha n) under the prior. 0 < alpha < 1.
double rank_threshold(const PriorSpec& prior, std::span<const Observation> obs, double alpha);
std::size_t top_count(std::size_t n, double alpha);

// x = z sigma with z the two-sided standard normal quantile for level.
std::vector<IsotaxPoint> significance_curve(std::span<const double> variance_grid, double level);

// `variance_grid` points evenly spaced over [0, max_variance].
std::vector<double> even_variance_grid(double max_variance, std::size_t count);

// Columns level_C, rank_fraction, x, variance (or sigma when sigma_space).
void write_isotax_csv(std::ostream& os, std::span<const IsotaxisCurve> curves, bool sigma_space = false);

struct SvgOptions {
    std::string title;
    bool sigma_space = false;
};

// Standalone SVG: the data as points, each isotaxis as a polyline, the
// significance curve dashed.
std::string isotax_svg(std::span<const Observation> obs, std::span<const IsotaxisCurve> curves,
                       std::span<const IsotaxPoint> significance, const SvgOptions& options = {});

}  // namespace rankprior
