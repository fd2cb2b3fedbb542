#include "rankprior/tail_mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rankprior/errors.hpp"
#include "rankprior/numeric.hpp"

namespace rankprior {

namespace {

struct ParetoSums {
    double log_gap = 0.0;  // sum(log a - log x)
    double s2 = 0.0;       // sum sigma^2 / (2 x^2)
    double s4 = 0.0;       // sum sigma^4 / (4 x^4)
};

ParetoSums pareto_sums(const TailSample& s) {
    ParetoSums p;
    const double la = std::log(s.a);
    for (const auto& o : s.observations) {
        if (!(o.x > 0.0)) throw ArgumentError("Pareto tail fit needs positive x");
        const double r = o.sigma * o.sigma / (o.x * o.x);
        p.log_gap += la - std::log(o.x);
        p.s2 += 0.5 * r;
        p.s4 += 0.25 * r * r;
    }
    return p;
}

double quartic(const ParetoSums& p, double n, double alpha) {
    const double c1 = p.log_gap + 3.0 * p.s2 - 6.0 * p.s4;
    const double c2 = 2.0 * p.s2 - 13.0 * p.s4;
    return n + alpha * (c1 + alpha * (c2 + alpha * (-9.0 * p.s4 - 2.0 * alpha * p.s4)));
}

double pareto_start(const ParetoSums& p, double n) {
    const double l = -p.log_gap;
    if (!(l > 0.0)) throw ArgumentError("Pareto tail fit: sum of log excesses is zero");
    return n / l + p.s2 * (3.0 * n / (l * l) + n * n / (l * l * l));
}

}  // namespace

TailSample make_tail_sample(std::span<const Observation> obs, double a) {
    if (!std::isfinite(a)) throw ArgumentError("tail cutoff must be finite");
    TailSample s;
    s.a = a;
    for (const auto& o : obs)
        if (o.x > a) s.observations.push_back(o);
    s.n_a = s.observations.size();
    if (s.n_a < 2) throw ArgumentError("tail sample needs at least two observations above the cutoff");
    return s;
}

double empirical_quantile(std::span<const double> values, double p) {
    if (values.empty()) throw ArgumentError("empirical_quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("empirical_quantile: p must lie in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double tail_normal_score(const TailSample& s, double tau) {
    double score = 0.0;
    for (const auto& o : s.observations) {
        const double v = tau * tau + o.sigma * o.sigma;
        const double sv = std::sqrt(v);
        const double z = s.a / sv;
        score += tau * o.x * o.x / (v * v) - tau / v - tau * s.a * numeric::inverse_mills(z) / (v * sv);
    }
    return score;
}

double tail_normal_approx(const TailSample& s) {
    const double n = static_cast<double>(s.n_a);
    double sa = 0.0;
    double sb = 0.0;
    for (const auto& o : s.observations) {
        const double d = o.x * o.x - s.a * s.a;
        sa += d + o.sigma * o.sigma;
        sb += d * o.sigma * o.sigma;
    }
    const double disc = sa * sa - 8.0 * n * sb;
    const double t2 = disc >= 0.0 ? (sa + std::sqrt(disc)) / (2.0 * n) : sa / n - 2.0 * sb / sa;
    return std::sqrt(std::max(t2, 1e-12));
}

double fit_tail_normal(const TailSample& s) {
    double top = 0.0;
    for (const auto& o : s.observations) top = std::max(top, std::abs(o.x));
    const double lo = 1e-3;
    const double hi = 10.0 * top;
    auto f = [&](double t) { return tail_normal_score(s, t); };
    const double flo = f(lo);
    const double fhi = f(hi);
    if (!(hi > lo) || !std::isfinite(flo) || !std::isfinite(fhi) || std::signbit(flo) == std::signbit(fhi))
        throw EstimationError("normal tail fit: score has no sign change on the bracket", tail_normal_approx(s));
    return numeric::find_root(f, lo, hi);
}

double tail_exponential_score(const TailSample& s, double rate) {
    double gap = 0.0;
    double var = 0.0;
    for (const auto& o : s.observations) {
        gap += o.x - s.a;
        var += o.sigma * o.sigma;
    }
    return static_cast<double>(s.n_a) / rate - gap + rate * var;
}

double fit_tail_exponential(const TailSample& s) {
    const double n = static_cast<double>(s.n_a);
    double gap = 0.0;
    double var = 0.0;
    for (const auto& o : s.observations) {
        gap += o.x - s.a;
        var += o.sigma * o.sigma;
    }
    if (!(gap > 0.0)) throw ArgumentError("exponential tail fit: sum of excesses is zero");
    const double disc = gap * gap - 4.0 * n * var;
    if (var == 0.0 || disc < 0.0) return n / gap;
    // Smaller root of var l^2 - gap l + n, written to avoid cancellation.
    return 2.0 * n / (gap + std::sqrt(disc));
}

double tail_pareto_score(const TailSample& s, double alpha) {
    return quartic(pareto_sums(s), static_cast<double>(s.n_a), alpha);
}

double tail_pareto_approx(const TailSample& s) {
    return pareto_start(pareto_sums(s), static_cast<double>(s.n_a));
}

double fit_tail_pareto(const TailSample& s) {
    const ParetoSums p = pareto_sums(s);
    const double n = static_cast<double>(s.n_a);
    const double l = -p.log_gap;
    if (!(l > 0.0)) throw ArgumentError("Pareto tail fit: sum of log excesses is zero");
    if (p.s2 == 0.0) return n / l;
    const double start = pareto_start(p, n);
    auto f = [&](double al) { return quartic(p, n, al); };

    // Bracket sign changes on a geometric grid, refine each, keep the one
    // closest to the approximation.
    constexpr int kSteps = 4000;
    const double lo = start * 1e-6;
    const double ratio = std::pow(1e12, 1.0 / kSteps);
    double best = std::numeric_limits<double>::quiet_NaN();
    double prev_x = lo;
    double prev_f = f(lo);
    for (int k = 1; k <= kSteps; ++k) {
        const double x = prev_x * ratio;
        const double fx = f(x);
        if (std::signbit(fx) != std::signbit(prev_f) || fx == 0.0) {
            const double root = numeric::find_root(f, prev_x, x);
            if (std::isnan(best) || std::abs(root - start) < std::abs(best - start)) best = root;
        }
        prev_x = x;
        prev_f = fx;
    }
    if (std::isnan(best)) throw EstimationError("Pareto tail fit: no positive root of the score", start);
    return best;
}

PriorSpec fit_tail(Family family, const TailSample& s, double eta) {
    switch (family) {
        case Family::Normal: return PriorSpec::normal(fit_tail_normal(s));
        case Family::Exponential: return PriorSpec::exponential(fit_tail_exponential(s));
        case Family::ImproperExponential: return PriorSpec::improper_exponential(fit_tail_exponential(s));
        case Family::Pareto: return PriorSpec::pareto(fit_tail_pareto(s), eta);
        case Family::Discrete: break;
    }
    throw ArgumentError("tail fits exist for normal, exponential and Pareto priors only");
}

double exp_log1p_moment(double rate) {
    if (!(rate > 0.0)) throw ArgumentError("rate must be positive");
    return numeric::integral([&](double x) { return std::log1p(x) * rate * std::exp(-rate * x); }, 0.0,
                             std::numeric_limits<double>::infinity(), 1e-12);
}

double exp_invsq_moment(double rate) {
    if (!(rate > 0.0)) throw ArgumentError("rate must be positive");
    return numeric::integral(
        [&](double x) {
            const double u = 1.0 + x;
            return rate * std::exp(-rate * x) / (u * u);
        },
        0.0, std::numeric_limits<double>::infinity(), 1e-12);
}

}  // namespace rankprior
