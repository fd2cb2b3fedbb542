#pragma once

// Hyperparameter fits that use only the observations above a cutoff a.

#include <cstddef>
#include <span>
#include <vector>

#include "rankprior/prior.hpp"

namespace rankprior {

struct TailSample {
    std::vector<Observation> observations;  // every x > a
    double a = 0.0;
    std::size_t n_a = 0;
};

// Keeps the units with x > a. Fewer than two survivors is an ArgumentError.
TailSample make_tail_sample(std::span<const Observation> obs, double a);

// Sample quantile with linear interpolation between order statistics
// (Hyndman-Fan type 7).
double empirical_quantile(std::span<const double> values, double p);

// d/dtau of the truncated marginal log-likelihood, x ~ N(0, tau^2 + sigma^2) | x > a.
double tail_normal_score(const TailSample& s, double tau);
// Closed-form starting value for tau.
double tail_normal_approx(const TailSample& s);
// Root of the score on [1e-3, 10 max|x|]. Throws EstimationError carrying
// tail_normal_approx when the bracket holds no sign change.
double fit_tail_normal(const TailSample& s);

// n_a/rate - sum(x - a) + rate * sum(sigma^2).
double tail_exponential_score(const TailSample& s, double rate);
double fit_tail_exponential(const TailSample& s);

// The quartic score polynomial in alpha.
double tail_pareto_score(const TailSample& s, double alpha);
double tail_pareto_approx(const TailSample& s);
// Positive root of the quartic nearest tail_pareto_approx.
double fit_tail_pareto(const TailSample& s);

// Fitted prior of the given family. eta is used for Pareto only.
PriorSpec fit_tail(Family family, const TailSample& s, double eta = kDefaultParetoEta);

// E log(1 + X) and E (1 + X)^-2 for X ~ Exponential(rate).
double exp_log1p_moment(double rate);
double exp_invsq_moment(double rate);

}  // namespace rankprior
