#pragma once

// Prior families used for ranking: normal (mean 0), exponential, improper
// exponential, Pareto with known minimum, and finite discrete priors.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rankprior {

enum class Family { Normal, Exponential, ImproperExponential, Pareto, Discrete };

std::string_view family_name(Family f) noexcept;
// Accepts the JSON names ("normal", "exponential", "improper_exponential",
// "pareto", "discrete"); throws ArgumentError otherwise.
Family parse_family(std::string_view name);

// A unit's point estimate and its standard error.
struct Observation {
    double x = 0.0;
    double sigma = 0.0;
};

inline constexpr double kDefaultParetoEta = 0.5;

class PriorSpec {
public:
    static PriorSpec normal(double tau);
    static PriorSpec exponential(double rate);
    static PriorSpec improper_exponential(double rate);
    static PriorSpec pareto(double alpha, double eta = kDefaultParetoEta);
    // Support must be strictly ascending; weights nonnegative summing to 1.
    static PriorSpec discrete(std::vector<double> support, std::vector<double> weights);

    Family family() const noexcept { return family_; }
    bool is_continuous() const noexcept { return family_ != Family::Discrete; }

    double tau() const;
    double rate() const;
    double alpha() const;
    double eta() const;
    std::span<const double> support() const noexcept { return support_; }
    std::span<const double> weights() const noexcept { return weights_; }

    // The single hyperparameter estimated for a family: tau, rate, or alpha.
    double primary_parameter() const;
    // Same family with a different primary parameter (eta kept for Pareto).
    PriorSpec with_primary_parameter(double value) const;

    // Smallest point of the support (-inf for normal / improper exponential).
    double support_min() const noexcept;

    friend bool operator==(const PriorSpec&, const PriorSpec&) = default;

private:
    PriorSpec(Family f, double p1, double p2) : family_(f), p1_(p1), p2_(p2) {}

    Family family_ = Family::Normal;
    double p1_ = 1.0;  // tau | rate | alpha
    double p2_ = 0.0;  // eta (Pareto)
    std::vector<double> support_;
    std::vector<double> weights_;
};

// Density (probability mass for discrete priors). The improper exponential
// returns the unnormalized exp(-rate * theta).
double density(const PriorSpec& prior, double theta);
// log density; -inf outside the support.
double log_density(const PriorSpec& prior, double theta);

// -pi'(theta)/pi(theta). Throws DomainError for discrete priors or where the
// density vanishes.
double lambda_rate(const PriorSpec& prior, double theta);
// The same family formula without the support check; used where a loss
// integral evaluates an estimating prior over the true prior's support.
double lambda_formula(const PriorSpec& prior, double theta);

double cdf(const PriorSpec& prior, double theta);
// Throws DomainError for the improper exponential, ArgumentError unless 0 < p < 1.
double quantile(const PriorSpec& prior, double p);

// n i.i.d. draws, deterministic in seed.
std::vector<double> sample(const PriorSpec& prior, std::size_t n, std::uint64_t seed);

class Rng;
double draw(const PriorSpec& prior, Rng& rng);

nlohmann::json to_json(const PriorSpec& prior);
PriorSpec prior_from_json(const nlohmann::json& j);

}  // namespace rankprior
