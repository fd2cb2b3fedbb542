#include "rankprior/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rankprior/errors.hpp"
#include "rankprior/numeric.hpp"
#include "rankprior/rng.hpp"

namespace rankprior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw ArgumentError(std::string(name) + " must be positive and finite");
}

}  // namespace

std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::Normal: return "normal";
        case Family::Exponential: return "exponential";
        case Family::ImproperExponential: return "improper_exponential";
        case Family::Pareto: return "pareto";
        case Family::Discrete: return "discrete";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::Normal, Family::Exponential, Family::ImproperExponential, Family::Pareto,
                     Family::Discrete})
        if (family_name(f) == name) return f;
    throw ArgumentError("unknown prior family '" + std::string(name) + "'");
}

PriorSpec PriorSpec::normal(double tau) {
    require_positive(tau, "tau");
    return PriorSpec(Family::Normal, tau, 0.0);
}

PriorSpec PriorSpec::exponential(double rate) {
    require_positive(rate, "rate");
    return PriorSpec(Family::Exponential, rate, 0.0);
}

PriorSpec PriorSpec::improper_exponential(double rate) {
    require_positive(rate, "rate");
    return PriorSpec(Family::ImproperExponential, rate, 0.0);
}

PriorSpec PriorSpec::pareto(double alpha, double eta) {
    require_positive(alpha, "alpha");
    require_positive(eta, "eta");
    return PriorSpec(Family::Pareto, alpha, eta);
}

PriorSpec PriorSpec::discrete(std::vector<double> support, std::vector<double> weights) {
    if (support.empty()) throw ArgumentError("discrete prior needs at least one support point");
    if (support.size() != weights.size()) throw ArgumentError("support and weights differ in length");
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (!std::isfinite(support[i])) throw ArgumentError("support points must be finite");
        if (i > 0 && !(support[i] > support[i - 1]))
            throw ArgumentError("support must be strictly ascending");
        if (!(weights[i] >= 0.0)) throw ArgumentError("weights must be nonnegative");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("weights must sum to 1");
    PriorSpec p(Family::Discrete, 0.0, 0.0);
    p.support_ = std::move(support);
    p.weights_ = std::move(weights);
    return p;
}

double PriorSpec::tau() const {
    if (family_ != Family::Normal) throw DomainError("tau is defined for normal priors only");
    return p1_;
}

double PriorSpec::rate() const {
    if (family_ != Family::Exponential && family_ != Family::ImproperExponential)
        throw DomainError("rate is defined for exponential priors only");
    return p1_;
}

double PriorSpec::alpha() const {
    if (family_ != Family::Pareto) throw DomainError("alpha is defined for Pareto priors only");
    return p1_;
}

double PriorSpec::eta() const {
    if (family_ != Family::Pareto) throw DomainError("eta is defined for Pareto priors only");
    return p2_;
}

double PriorSpec::primary_parameter() const {
    if (family_ == Family::Discrete) throw DomainError("discrete priors have no scalar parameter");
    return p1_;
}

PriorSpec PriorSpec::with_primary_parameter(double value) const {
    switch (family_) {
        case Family::Normal: return normal(value);
        case Family::Exponential: return exponential(value);
        case Family::ImproperExponential: return improper_exponential(value);
        case Family::Pareto: return pareto(value, p2_);
        case Family::Discrete: break;
    }
    throw DomainError("discrete priors have no scalar parameter");
}

double PriorSpec::support_min() const noexcept {
    switch (family_) {
        case Family::Normal:
        case Family::ImproperExponential: return -kInf;
        case Family::Exponential: return 0.0;
        case Family::Pareto: return p2_;
        case Family::Discrete: return support_.front();
    }
    return -kInf;
}

double log_density(const PriorSpec& prior, double theta) {
    switch (prior.family()) {
        case Family::Normal: {
            const double t = prior.tau();
            const double z = theta / t;
            return -0.5 * z * z - std::log(t) + std::log(numeric::kInvSqrt2Pi);
        }
        case Family::Exponential:
            if (theta < 0.0) return -kInf;
            return std::log(prior.rate()) - prior.rate() * theta;
        case Family::ImproperExponential: return -prior.rate() * theta;
        case Family::Pareto: {
            const double a = prior.alpha();
            const double e = prior.eta();
            if (theta < e) return -kInf;
            return std::log(a) + a * std::log(e) - (a + 1.0) * std::log(theta);
        }
        case Family::Discrete: {
            const double p = density(prior, theta);
            return p > 0.0 ? std::log(p) : -kInf;
        }
    }
    return -kInf;
}

double density(const PriorSpec& prior, double theta) {
    if (prior.family() == Family::Discrete) {
        auto s = prior.support();
        auto it = std::lower_bound(s.begin(), s.end(), theta);
        if (it != s.end() && *it == theta) return prior.weights()[static_cast<std::size_t>(it - s.begin())];
        return 0.0;
    }
    return std::exp(log_density(prior, theta));
}

double lambda_formula(const PriorSpec& prior, double theta) {
    switch (prior.family()) {
        case Family::Normal: return theta / (prior.tau() * prior.tau());
        case Family::Exponential:
        case Family::ImproperExponential: return prior.rate();
        case Family::Pareto: return (prior.alpha() + 1.0) / theta;
        case Family::Discrete: break;
    }
    throw DomainError("lambda_rate is undefined for discrete priors");
}

double lambda_rate(const PriorSpec& prior, double theta) {
    if (!prior.is_continuous()) throw DomainError("lambda_rate is undefined for discrete priors");
    if (!(density(prior, theta) > 0.0)) throw DomainError("lambda_rate: density is zero at theta");
    return lambda_formula(prior, theta);
}

double cdf(const PriorSpec& prior, double theta) {
    switch (prior.family()) {
        case Family::Normal: return numeric::normal_cdf(theta / prior.tau());
        case Family::Exponential: return theta <= 0.0 ? 0.0 : -std::expm1(-prior.rate() * theta);
        case Family::ImproperExponential: throw DomainError("improper exponential has no CDF");
        case Family::Pareto:
            return theta <= prior.eta() ? 0.0 : 1.0 - std::pow(prior.eta() / theta, prior.alpha());
        case Family::Discrete: {
            auto s = prior.support();
            auto w = prior.weights();
            double acc = 0.0;
            for (std::size_t i = 0; i < s.size() && s[i] <= theta; ++i) acc += w[i];
            return std::min(acc, 1.0);
        }
    }
    return 0.0;
}

double quantile(const PriorSpec& prior, double p) {
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("quantile: p must lie in (0, 1)");
    switch (prior.family()) {
        case Family::Normal: return prior.tau() * numeric::normal_quantile(p);
        case Family::Exponential: return -std::log1p(-p) / prior.rate();
        case Family::ImproperExponential: throw DomainError("improper exponential has no quantile");
        case Family::Pareto: return prior.eta() * std::pow(1.0 - p, -1.0 / prior.alpha());
        case Family::Discrete: {
            auto s = prior.support();
            auto w = prior.weights();
            double acc = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                acc += w[i];
                if (acc >= p) return s[i];
            }
            return s.back();
        }
    }
    return 0.0;
}

double draw(const PriorSpec& prior, Rng& rng) {
    switch (prior.family()) {
        case Family::Normal: return prior.tau() * rng.normal();
        case Family::Exponential: return rng.exponential(prior.rate());
        case Family::ImproperExponential: throw DomainError("cannot sample an improper prior");
        case Family::Pareto: return prior.eta() * std::pow(rng.uniform(), -1.0 / prior.alpha());
        case Family::Discrete: return quantile(prior, rng.uniform());
    }
    return 0.0;
}

std::vector<double> sample(const PriorSpec& prior, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ArgumentError("sample: n must be at least 1");
    if (prior.family() == Family::ImproperExponential) throw DomainError("cannot sample an improper prior");
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = draw(prior, rng);
    return out;
}

nlohmann::json to_json(const PriorSpec& prior) {
    nlohmann::json params;
    switch (prior.family()) {
        case Family::Normal: params["tau"] = prior.tau(); break;
        case Family::Exponential:
        case Family::ImproperExponential: params["rate"] = prior.rate(); break;
        case Family::Pareto:
            params["alpha"] = prior.alpha();
            params["eta"] = prior.eta();
            break;
        case Family::Discrete:
            params["support"] = std::vector<double>(prior.support().begin(), prior.support().end());
            params["weights"] = std::vector<double>(prior.weights().begin(), prior.weights().end());
            break;
    }
    return {{"family", std::string(family_name(prior.family()))}, {"params", params}};
}

PriorSpec prior_from_json(const nlohmann::json& j) {
    try {
        const Family f = parse_family(j.at("family").get<std::string>());
        const auto& p = j.at("params");
        switch (f) {
            case Family::Normal: return PriorSpec::normal(p.at("tau").get<double>());
            case Family::Exponential: return PriorSpec::exponential(p.at("rate").get<double>());
            case Family::ImproperExponential: return PriorSpec::improper_exponential(p.at("rate").get<double>());
            case Family::Pareto:
                return PriorSpec::pareto(p.at("alpha").get<double>(), p.value("eta", kDefaultParetoEta));
            case Family::Discrete:
                return PriorSpec::discrete(p.at("support").get<std::vector<double>>(),
                                           p.at("weights").get<std::vector<double>>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("invalid prior JSON: ") + e.what());
    }
    throw ArgumentError("invalid prior JSON");
}

}  // namespace rankprior
