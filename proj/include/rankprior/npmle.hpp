#pragma once

// Nonparametric maximum-likelihood prior on a fixed candidate grid, and the
// posterior-mean robustness bounds that hold for such priors.

#include <cstddef>
#include <span>
#include <vector>

#include "rankprior/prior.hpp"

namespace rankprior {

struct NpmleConfig {
    std::size_t grid_size = 400;        // even points added to the observed x
    std::size_t max_iterations = 5000;  // EM cycles plus Newton polish steps
    // Accelerated EM cycles before switching to constrained Newton steps
    // (NNLS on the scaled likelihood matrix, then a backtracking line search).
    std::size_t em_iterations = 200;
    double loglik_tolerance = 1e-10;
    double weight_prune_threshold = 1e-12;
    // Stop only once max_b D(b)/n <= 1 + gradient_tolerance as well.
    double gradient_tolerance = 1e-7;
    bool accelerate = true;
};

struct NpmleFit {
    PriorSpec prior = PriorSpec::normal(1.0);  // discrete after fitting
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    bool converged = false;  // false: iteration cap reached, best iterate returned
    std::vector<double> loglik_trace;  // one entry per accepted iterate
    double max_gradient_ratio = 0.0;   // max_b D(b) / n at the returned prior
};

// Candidate support: all observed x plus grid_size even points over
// [min x - 3 max sigma, max x + 3 max sigma], sorted, duplicates removed.
std::vector<double> npmle_grid(std::span<const Observation> obs, std::size_t grid_size);

NpmleFit fit_npmle(std::span<const Observation> obs, const NpmleConfig& config = {});

// sum_j log sum_i w_i phi((x_j - b_i)/sigma_j)/sigma_j for a discrete prior;
// for a normal prior the closed form with variance tau^2 + sigma_j^2.
double marginal_log_likelihood(const PriorSpec& prior, std::span<const Observation> obs);

// D(b) = sum_j phi((x_j - b)/sigma_j)/sigma_j / marginal_j for each b.
std::vector<double> npmle_gradient(const PriorSpec& prior, std::span<const Observation> obs,
                                   std::span<const double> points);

// Prior mass on the open interval (lo, hi).
double mass_in_interval(const PriorSpec& prior, double lo, double hi);

// a + sigma sqrt(2 log r); r <= 1 throws ArgumentError.
double lemma1_bound(double r, double a, double sigma);
// sigma (sqrt(2 log n + 1) + sqrt(2 log(n / (1 - e^-1/2) - 1))); n >= 2.
double combined_robustness_bound(std::size_t n, double sigma);
// Half-width sigma sqrt(2 log n + 1) and the mass floor (1 - e^-1/2)/n.
double local_mass_radius(std::size_t n, double sigma);
double local_mass_floor(std::size_t n);

}  // namespace rankprior

namespace rankprior::kernels {

// One EM sweep for mixture weights w over a dense n x g likelihood matrix
// (row j holds observation j). Writes the EM image of w to w_next and
// D(b)/n to grad; returns sum_j log(sum_b w_b lik_jb).
double mixture_em_step_serial(std::span<const double> lik, std::size_t g, std::span<const double> w,
                              std::span<double> w_next, std::span<double> grad);
double mixture_em_step_parallel(std::span<const double> lik, std::size_t g, std::span<const double> w,
                                std::span<double> w_next, std::span<double> grad);

}  // namespace rankprior::kernels
