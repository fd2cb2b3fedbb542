#include "rankprior/loss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/special_functions/expint.hpp>

#include "rankprior/errors.hpp"
#include "rankprior/format.hpp"
#include "rankprior/numeric.hpp"

namespace rankprior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_ranking(std::span<const double> thetas, const RankedList& r) {
    if (r.order.size() != thetas.size()) throw ArgumentError("ranking and thetas differ in length");
    std::vector<char> seen(thetas.size(), 0);
    for (std::size_t u : r.order) {
        if (u >= thetas.size() || seen[u]) throw ArgumentError("ranking is not a permutation");
        seen[u] = 1;
    }
}

std::vector<double> sorted_desc(std::span<const double> thetas) {
    std::vector<double> s(thetas.begin(), thetas.end());
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
}

// lambda(x) = coef * x^power for the three parametric families.
struct RateForm {
    double coef;
    int power;
};

RateForm rate_form(const PriorSpec& p) {
    switch (p.family()) {
        case Family::Normal: return {1.0 / (p.tau() * p.tau()), 1};
        case Family::Exponential:
        case Family::ImproperExponential: return {p.rate(), 0};
        case Family::Pareto: return {p.alpha() + 1.0, -1};
        case Family::Discrete: break;
    }
    throw DomainError("loss theory needs a continuous estimating prior");
}

void check_true_prior(const PriorSpec& p) {
    if (p.family() == Family::Discrete || p.family() == Family::ImproperExponential)
        throw DomainError("true prior must be normal, exponential or Pareto");
}

double effective_cutoff(const PriorSpec& p, double a) {
    if (std::isnan(a) || a == kInf) throw ArgumentError("cutoff must be finite or -inf");
    return std::max(a, p.support_min());
}

double e1(double z) { return boost::math::expint(1, z); }

// integral_a^inf pi(x)^2 x^k dx, k in [-2, 2].
double square_moment(const PriorSpec& p, double a_in, int k) {
    const double a = effective_cutoff(p, a_in);
    if (k < 0 && !(a > 0.0))
        throw DivergenceError("loss integral diverges: negative power of x at a cutoff <= 0");
    switch (p.family()) {
        case Family::Normal: {
            const double t = p.tau();
            const double t2 = t * t;
            const double ea = std::exp(-a * a / t2);
            const double g0 = t * std::sqrt(numeric::kPi) * 0.5 * std::erfc(a / t);
            double g = 0.0;
            switch (k) {
                case 0: g = g0; break;
                case 1: g = 0.5 * t2 * ea; break;
                case 2: g = 0.5 * t2 * (a * ea + g0); break;
                case -1: g = 0.5 * e1(a * a / t2); break;
                case -2: g = ea / a - 2.0 / t2 * g0; break;
                default: throw ArgumentError("unsupported moment order");
            }
            return g / (2.0 * numeric::kPi * t2);
        }
        case Family::Exponential: {
            const double l = p.rate();
            const double r = 2.0 * l;
            const double ea = std::exp(-r * a);
            double h = 0.0;
            switch (k) {
                case 0: h = ea / r; break;
                case 1: h = ea * (a / r + 1.0 / (r * r)); break;
                case 2: h = ea * (a * a / r + 2.0 * a / (r * r) + 2.0 / (r * r * r)); break;
                case -1: h = e1(r * a); break;
                case -2: h = ea / a - r * e1(r * a); break;
                default: throw ArgumentError("unsupported moment order");
            }
            return l * l * h;
        }
        case Family::Pareto: {
            const double al = p.alpha();
            const double e = p.eta();
            const double d = 2.0 * al + 1.0 - k;
            if (!(d > 0.0))
                throw DivergenceError("loss integral diverges for Pareto index " + format_double(al));
            return al * al * std::pow(e / a, 2.0 * al) * std::pow(a, k - 1.0) / d;
        }
        default: break;
    }
    throw DomainError("true prior must be normal, exponential or Pareto");
}

double quadratic_integral(const PriorSpec& t, const RateForm& rt, const RateForm& re, double a) {
    if (rt.power == re.power) {
        const double d = rt.coef - re.coef;
        if (d == 0.0) return 0.0;
        return d * d * square_moment(t, a, 2 * rt.power);
    }
    const double v = rt.coef * rt.coef * square_moment(t, a, 2 * rt.power) -
                     2.0 * rt.coef * re.coef * square_moment(t, a, rt.power + re.power) +
                     re.coef * re.coef * square_moment(t, a, 2 * re.power);
    return std::max(v, 0.0);
}

int family_power(Family f) {
    switch (f) {
        case Family::Normal: return 1;
        case Family::Exponential:
        case Family::ImproperExponential: return 0;
        case Family::Pareto: return -1;
        case Family::Discrete: break;
    }
    throw DomainError("estimating family must be normal, exponential or Pareto");
}

double tail_quadrature(const PriorSpec& t, double a, const std::function<double(double)>& g) {
    const double lo = effective_cutoff(t, a);
    auto f = [&](double x) {
        const double ld = log_density(t, x);
        if (!std::isfinite(ld)) return 0.0;
        const double v = g(x);
        return std::exp(2.0 * ld) * v * v;
    };
    return numeric::integrate(f, lo, kInf, {1e-12, 20}).value;
}

void check_divergence(const PriorSpec& t, int est_power, double a) {
    // Reuse the moment bounds: the integral is finite iff every moment it
    // touches is.
    const int tp = rate_form(t).power;
    square_moment(t, a, 2 * tp);
    square_moment(t, a, 2 * est_power);
}

}  // namespace

double cutoff_loss(std::span<const double> thetas, const RankedList& ranking, std::size_t k) {
    check_ranking(thetas, ranking);
    if (k < 1 || k > thetas.size()) throw ArgumentError("cutoff k out of range");
    const auto best = sorted_desc(thetas);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += best[i] - thetas[ranking.order[i]];
    return acc;
}

std::vector<double> cutoff_losses(std::span<const double> thetas, const RankedList& ranking) {
    check_ranking(thetas, ranking);
    const auto best = sorted_desc(thetas);
    std::vector<double> out(thetas.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        acc += best[i] - thetas[ranking.order[i]];
        out[i] = acc;
    }
    return out;
}

double inversion_decomposition(std::span<const double> thetas, const RankedList& ranking) {
    check_ranking(thetas, ranking);
    const auto& o = ranking.order;
    double acc = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i)
        for (std::size_t j = i + 1; j < o.size(); ++j) {
            const double gap = thetas[o[j]] - thetas[o[i]];
            if (gap > 0.0) acc += gap;
        }
    return acc;
}

double weighted_top_decile_loss(std::span<const double> thetas, const RankedList& estimated,
                                const RankedList& reference) {
    check_ranking(thetas, estimated);
    check_ranking(thetas, reference);
    const std::size_t m = thetas.size() / 10;
    if (m == 0) throw ArgumentError("weighted top-decile loss needs at least 10 units");
    double acc = 0.0;
    for (std::size_t i = 1; i <= m; ++i)
        acc += static_cast<double>(m - i) * (thetas[reference.order[i - 1]] - thetas[estimated.order[i - 1]]);
    return acc;
}

LossBreakdown loss_breakdown(std::span<const double> thetas, const RankedList& estimated,
                             const RankedList& reference) {
    LossBreakdown b;
    b.per_cutoff = cutoff_losses(thetas, estimated);
    for (double v : b.per_cutoff) b.total_over_cutoffs += v;
    b.cutoff_count = thetas.size() / 10;
    b.weighted_top_decile = weighted_top_decile_loss(thetas, estimated, reference);
    return b;
}

double optimal_expected_loss(const PriorSpec& prior, double sigma1, double sigma2) {
    check_true_prior(prior);
    const double s = 0.5 * (sigma1 * sigma1 + sigma2 * sigma2);
    if (s == 0.0) return 0.0;
    return s * square_moment(prior, -kInf, 0);
}

double misspecification_integral(const LossScenario& s) {
    check_true_prior(s.true_prior);
    return quadratic_integral(s.true_prior, rate_form(s.true_prior), rate_form(s.estimating_prior), s.a);
}

double misspecification_integral_quadrature(const LossScenario& s) {
    check_true_prior(s.true_prior);
    check_divergence(s.true_prior, rate_form(s.estimating_prior).power, s.a);
    const PriorSpec& t = s.true_prior;
    const PriorSpec& e = s.estimating_prior;
    return tail_quadrature(t, s.a, [&](double x) { return lambda_formula(t, x) - lambda_formula(e, x); });
}

double misspecification_loss(const LossScenario& s) {
    if (!s.sigma1 || !s.sigma2) throw ArgumentError("misspecification_loss needs sigma1 and sigma2");
    const double d = (*s.sigma1) * (*s.sigma1) - (*s.sigma2) * (*s.sigma2);
    return 0.5 * d * d * misspecification_integral(s);
}

double point_estimate_integral(const PriorSpec& true_prior, double a) {
    check_true_prior(true_prior);
    const RateForm rt = rate_form(true_prior);
    return rt.coef * rt.coef * square_moment(true_prior, a, 2 * rt.power);
}

double point_estimate_integral_quadrature(const PriorSpec& true_prior, double a) {
    check_true_prior(true_prior);
    check_divergence(true_prior, rate_form(true_prior).power, a);
    return tail_quadrature(true_prior, a, [&](double x) { return lambda_formula(true_prior, x); });
}

namespace {

// Minimizing coefficient of lambda_hat(x) = c x^power.
double optimal_coefficient(const PriorSpec& t, int power, double a) {
    const RateForm rt = rate_form(t);
    if (rt.power == power) return rt.coef;
    return rt.coef * square_moment(t, a, rt.power + power) / square_moment(t, a, 2 * power);
}

}  // namespace

double optimal_hyperparameter(const PriorSpec& true_prior, Family estimating, double a) {
    check_true_prior(true_prior);
    const double c = optimal_coefficient(true_prior, family_power(estimating), a);
    switch (estimating) {
        case Family::Normal:
            if (!(c > 0.0)) throw NumericalError("no positive optimal 1/tau^2 for this cutoff");
            return 1.0 / std::sqrt(c);
        case Family::Exponential:
        case Family::ImproperExponential:
            if (!(c > 0.0)) throw NumericalError("no positive optimal rate for this cutoff");
            return c;
        case Family::Pareto:
            if (!(c > 1.0)) throw NumericalError("no positive optimal alpha for this cutoff");
            return c - 1.0;
        case Family::Discrete: break;
    }
    throw DomainError("estimating family must be normal, exponential or Pareto");
}

PriorSpec optimal_estimating_prior(const PriorSpec& true_prior, Family estimating, double a) {
    const double v = optimal_hyperparameter(true_prior, estimating, a);
    switch (estimating) {
        case Family::Normal: return PriorSpec::normal(v);
        case Family::Exponential: return PriorSpec::exponential(v);
        case Family::ImproperExponential: return PriorSpec::improper_exponential(v);
        case Family::Pareto:
            return PriorSpec::pareto(v, true_prior.family() == Family::Pareto ? true_prior.eta()
                                                                              : kDefaultParetoEta);
        case Family::Discrete: break;
    }
    throw DomainError("estimating family must be normal, exponential or Pareto");
}

double misestimation_sensitivity(const PriorSpec& true_prior, Family estimating, double a) {
    check_true_prior(true_prior);
    return square_moment(true_prior, a, 2 * family_power(estimating));
}

double sensitivity_parameter(const PriorSpec& prior) {
    switch (prior.family()) {
        case Family::Normal: return 1.0 / (prior.tau() * prior.tau());
        case Family::Exponential:
        case Family::ImproperExponential: return prior.rate();
        case Family::Pareto: return prior.alpha();
        case Family::Discrete: break;
    }
    throw DomainError("discrete priors have no sensitivity parameter");
}

PriorSpec with_sensitivity_parameter(const PriorSpec& prior, double p) {
    if (prior.family() == Family::Normal) {
        if (!(p > 0.0)) throw ArgumentError("1/tau^2 must be positive");
        return PriorSpec::normal(1.0 / std::sqrt(p));
    }
    return prior.with_primary_parameter(p);
}

std::vector<PriorSpec> default_true_priors() {
    return {PriorSpec::normal(1.0), PriorSpec::exponential(1.0), PriorSpec::pareto(2.0, kDefaultParetoEta)};
}

std::vector<LossTableRow> loss_table(std::span<const PriorSpec> true_priors, double cutoff_quantile) {
    std::vector<LossTableRow> rows;
    for (const auto& t : true_priors) {
        const double a = quantile(t, cutoff_quantile);
        const std::string tname(family_name(t.family()));
        for (Family f : {Family::Normal, Family::Exponential, Family::Pareto}) {
            LossTableRow r;
            r.true_family = tname;
            r.est_family = std::string(family_name(f));
            r.parameter = f == Family::Normal ? "tau" : f == Family::Exponential ? "rate" : "alpha";
            try {
                const PriorSpec est = optimal_estimating_prior(t, f, a);
                r.optimal_param = est.primary_parameter();
                r.integral_loss = misspecification_integral({t, est, a, {}, {}});
                r.sensitivity = misestimation_sensitivity(t, f, a);
            } catch (const DivergenceError&) {
                r.integral_loss = kInf;
                r.optimal_param.reset();
                r.sensitivity.reset();
            }
            rows.push_back(std::move(r));
        }
        LossTableRow pe;
        pe.true_family = tname;
        pe.est_family = "point_estimate";
        try {
            pe.integral_loss = point_estimate_integral(t, a);
        } catch (const DivergenceError&) {
            pe.integral_loss = kInf;
        }
        rows.push_back(std::move(pe));
    }
    return rows;
}

void write_loss_table_csv(std::ostream& os, std::span<const LossTableRow> rows) {
    os << "true_family,est_family,parameter,integral_loss,optimal_param,sensitivity\n";
    for (const auto& r : rows) {
        os << r.true_family << ',' << r.est_family << ',' << r.parameter << ',' << format_double(r.integral_loss)
           << ',' << (r.optimal_param ? format_double(*r.optimal_param) : "") << ','
           << (r.sensitivity ? format_double(*r.sensitivity) : "") << '\n';
    }
}

}  // namespace rankprior
