#include "rankprior/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rankprior/errors.hpp"
#include "rankprior/numeric.hpp"

namespace rankprior {

namespace {

void check_observation(const Observation& obs) {
    if (!std::isfinite(obs.x)) throw ArgumentError("observation x must be finite");
    if (!(obs.sigma >= 0.0) || !std::isfinite(obs.sigma))
        throw ArgumentError("observation sigma must be nonnegative and finite");
}

double discrete_posterior_mean(const PriorSpec& prior, const Observation& obs) {
    auto b = prior.support();
    auto w = prior.weights();
    const double inv2s2 = 0.5 / (obs.sigma * obs.sigma);
    double top = -std::numeric_limits<double>::infinity();
    std::vector<double> logw(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double d = obs.x - b[i];
        logw[i] = w[i] > 0.0 ? std::log(w[i]) - d * d * inv2s2 : -std::numeric_limits<double>::infinity();
        top = std::max(top, logw[i]);
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double e = std::exp(logw[i] - top);
        num += e * b[i];
        den += e;
    }
    return num / den;
}

// Rough posterior location used to place the quadrature window.
double window_center(const PriorSpec& prior, const Observation& obs) {
    const double s2 = obs.sigma * obs.sigma;
    switch (prior.family()) {
        case Family::Normal: {
            const double t2 = prior.tau() * prior.tau();
            return t2 * obs.x / (t2 + s2);
        }
        case Family::Exponential:
        case Family::ImproperExponential: return obs.x - prior.rate() * s2;
        default: return obs.x;
    }
}

}  // namespace

std::vector<std::size_t> RankedList::positions() const {
    std::vector<std::size_t> pos(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
    return pos;
}

double posterior_mean_quadrature(const PriorSpec& prior, const Observation& obs, double rel_tol) {
    check_observation(obs);
    if (obs.sigma == 0.0) return obs.x;
    if (!prior.is_continuous()) throw DomainError("posterior_mean_quadrature needs a continuous prior");

    const double x = obs.x;
    const double s = obs.sigma;
    const double smin = prior.support_min();
    const double c = window_center(prior, obs);
    double lo = std::max(smin, std::min(x, c) - 10.0 * s);
    double hi = std::max(x, c) + 10.0 * s;
    if (std::isfinite(smin)) hi = std::max(hi, smin + 10.0 * s);
    const double inv2s2 = 0.5 / (s * s);
    double width = s;
    double edge = hi;
    if (lo == smin) {
        // Mass piled against the support edge decays like exp(-g (t - smin)) at
        // first; a polynomial prior tail can still carry mass beyond that scale.
        const double g = (smin - x) / (s * s) + lambda_formula(prior, smin);
        if (g > 0.0 && 1.0 / g < s) {
            width = 1.0 / g;
            edge = std::min(hi, smin + 80.0 * width);
        }
    }

    auto log_kernel = [&](double t) {
        const double d = t - x;
        return log_density(prior, t) - d * d * inv2s2;
    };

    // Scale by the largest sampled value so the integrand peaks near 1.
    constexpr int kProbe = 64;
    double peak = -std::numeric_limits<double>::infinity();
    double at = lo;
    for (int k = 0; k <= kProbe; ++k) {
        const double t = lo + (edge - lo) * k / kProbe;
        const double v = log_kernel(t);
        if (v > peak) {
            peak = v;
            at = t;
        }
    }
    if (!std::isfinite(peak)) throw NumericalError("posterior has no mass in the integration window");

    // Exponent relative to the peak, factored so large (t - x)^2 terms cancel exactly.
    const double ld_at = log_density(prior, at);
    auto rel = [&](double d) {
        return std::exp(log_density(prior, at + d) - ld_at - d * (d + 2.0 * (at - x)) * inv2s2);
    };
    // Integrate in u = (t - at) / width so both integrals are O(1); the quadrature's
    // absolute floor otherwise stops refinement on tiny values.
    auto den_f = [&](double u) { return rel(width * u); };
    auto num_f = [&](double u) { return u * rel(width * u); };

    const numeric::QuadratureOptions opt{rel_tol, 18};
    double den = 0.0;
    double num = 0.0;
    try {
        for (auto [a, b] : {std::pair{(lo - at) / width, 0.0}, std::pair{0.0, (edge - at) / width},
                            std::pair{(edge - at) / width, (hi - at) / width}}) {
            if (!(b > a)) continue;
            den += numeric::integrate(den_f, a, b, opt).value;
            num += numeric::integrate(num_f, a, b, opt).value;
        }
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("posterior mean: ") + e.what());
    }
    if (!(den > 0.0)) throw NumericalError("posterior mean: vanishing normalizing constant");
    return at + width * (num / den);
}

double posterior_mean(const PriorSpec& prior, const Observation& obs) {
    check_observation(obs);
    if (obs.sigma == 0.0) return obs.x;
    const double s2 = obs.sigma * obs.sigma;
    switch (prior.family()) {
        case Family::Normal: {
            const double t2 = prior.tau() * prior.tau();
            return t2 * obs.x / (t2 + s2);
        }
        case Family::ImproperExponential: return obs.x - prior.rate() * s2;
        case Family::Exponential: {
            // Posterior is N(x - rate sigma^2, sigma^2) truncated to theta > 0.
            const double z = (obs.x - prior.rate() * s2) / obs.sigma;
            return obs.sigma * numeric::inverse_mills_excess(-z);
        }
        case Family::Pareto: return posterior_mean_quadrature(prior, obs, 1e-9);
        case Family::Discrete: return discrete_posterior_mean(prior, obs);
    }
    return obs.x;
}

double posterior_mean_approx(const PriorSpec& prior, const Observation& obs) {
    check_observation(obs);
    return obs.x - lambda_rate(prior, obs.x) * obs.sigma * obs.sigma;
}

RankedList rank_scores(std::vector<double> scores) {
    for (double v : scores)
        if (std::isnan(v)) throw NumericalError("cannot rank NaN scores");
    RankedList out;
    out.order.resize(scores.size());
    std::iota(out.order.begin(), out.order.end(), std::size_t{0});
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    out.scores.resize(scores.size());
    for (std::size_t k = 0; k < scores.size(); ++k) out.scores[k] = scores[out.order[k]];
    return out;
}

namespace kernels {

std::vector<double> posterior_means_serial(const PriorSpec& prior, std::span<const Observation> obs) {
    std::vector<double> out(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        try {
            out[i] = posterior_mean(prior, obs[i]);
        } catch (const std::exception& e) {
            throw UnitError(i, e.what());
        }
    }
    return out;
}

std::vector<double> posterior_means_parallel(const PriorSpec& prior, std::span<const Observation> obs) {
    const auto n = static_cast<std::ptrdiff_t>(obs.size());
    std::vector<double> out(obs.size());
    std::ptrdiff_t bad = n;
    std::string message;
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = posterior_mean(prior, obs[static_cast<std::size_t>(i)]);
        } catch (const std::exception& e) {
#pragma omp critical(rankprior_unit_error)
            if (i < bad) {
                bad = i;
                message = e.what();
            }
        }
    }
    if (bad < n) throw UnitError(static_cast<std::size_t>(bad), message);
    return out;
}

}  // namespace kernels

RankedList rank_units(const PriorSpec& prior, std::span<const Observation> obs) {
    if (obs.empty()) throw ArgumentError("rank_units: no observations");
    return rank_scores(kernels::posterior_means_parallel(prior, obs));
}

RankedList rank_by_point_estimate(std::span<const Observation> obs) {
    std::vector<double> x(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) x[i] = obs[i].x;
    return rank_scores(std::move(x));
}

}  // namespace rankprior
