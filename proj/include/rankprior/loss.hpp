#pragma once

// Ranking losses on realized data, and the small-sigma expected-loss theory
// for a true prior paired with a (possibly misspecified) estimating prior.

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rankprior/posterior.hpp"
#include "rankprior/prior.hpp"

namespace rankprior {

struct LossBreakdown {
    std::vector<double> per_cutoff;  // l_1 .. l_n
    double total_over_cutoffs = 0.0;
    double weighted_top_decile = 0.0;
    std::size_t cutoff_count = 0;  // m = floor(n / 10)
};

// l_k: sum over the top k positions of (k-th largest theta - theta of the
// unit ranked k-th). 1 <= k <= n.
double cutoff_loss(std::span<const double> thetas, const RankedList& ranking, std::size_t k);
// All l_k at once.
std::vector<double> cutoff_losses(std::span<const double> thetas, const RankedList& ranking);

// Sum over pairs the ranking inverts of the theta gap. O(n^2).
double inversion_decomposition(std::span<const double> thetas, const RankedList& ranking);

// sum_{i=1}^{m} (m - i) (theta_ref[i] - theta_est[i]), m = floor(n/10).
// n < 10 throws ArgumentError.
double weighted_top_decile_loss(std::span<const double> thetas, const RankedList& estimated,
                                const RankedList& reference);

LossBreakdown loss_breakdown(std::span<const double> thetas, const RankedList& estimated,
                             const RankedList& reference);

struct LossScenario {
    PriorSpec true_prior;
    PriorSpec estimating_prior;
    double a = 0.0;
    std::optional<double> sigma1;
    std::optional<double> sigma2;
};

// (sigma1^2 + sigma2^2)/2 * integral of pi^2.
double optimal_expected_loss(const PriorSpec& prior, double sigma1, double sigma2);

// integral_a^inf pi(x)^2 (lambda(x) - lambda_hat(x))^2 dx in closed form.
// Throws DivergenceError when the integral is infinite.
double misspecification_integral(const LossScenario& s);
// The same integral by adaptive quadrature.
double misspecification_integral_quadrature(const LossScenario& s);
// Integral times (sigma1^2 - sigma2^2)^2 / 2; needs both sigmas.
double misspecification_loss(const LossScenario& s);

// integral_a^inf pi'(x)^2 dx: the loss of ranking by x alone.
double point_estimate_integral(const PriorSpec& true_prior, double a);
double point_estimate_integral_quadrature(const PriorSpec& true_prior, double a);

// Minimizer of the misspecification integral over the estimating family:
// tau for normal, rate for exponential, alpha for Pareto (eta kept from the
// true prior when it is Pareto, else the default).
double optimal_hyperparameter(const PriorSpec& true_prior, Family estimating, double a);
PriorSpec optimal_estimating_prior(const PriorSpec& true_prior, Family estimating, double a);

// Coefficient c with integral = min + c (p - p_opt)^2, where p is 1/tau^2,
// rate, or alpha.
double misestimation_sensitivity(const PriorSpec& true_prior, Family estimating, double a);

// Sensitivity parameter of a prior: 1/tau^2, rate, or alpha.
double sensitivity_parameter(const PriorSpec& prior);
PriorSpec with_sensitivity_parameter(const PriorSpec& prior, double p);

struct LossTableRow {
    std::string true_family;
    std::string est_family;
    std::string parameter;
    double integral_loss = 0.0;
    std::optional<double> optimal_param;
    std::optional<double> sensitivity;
};

// Nine true x estimating rows plus one point-estimate row per true prior.
// Cutoff is each true prior's quantile at cutoff_quantile.
std::vector<LossTableRow> loss_table(std::span<const PriorSpec> true_priors, double cutoff_quantile);
std::vector<PriorSpec> default_true_priors();

void write_loss_table_csv(std::ostream& os, std::span<const LossTableRow> rows);

}  // namespace rankprior
