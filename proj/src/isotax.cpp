#include "rankprior/isotax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rankprior/errors.hpp"
#include "rankprior/format.hpp"
#include "rankprior/numeric.hpp"
#include "rankprior/posterior.hpp"

namespace rankprior {

namespace {

double exact_point(const PriorSpec& prior, double level, double v) {
    const double s = std::sqrt(v);
    auto f = [&](double x) { return posterior_mean(prior, {x, s}) - level; };
    double step = std::max(1.0, std::abs(level)) * 0.5 + s;
    double lo = level - step;
    double hi = level + step;
    double flo = f(lo);
    double fhi = f(hi);
    for (int k = 0; k < 80 && !(flo <= 0.0 && fhi >= 0.0); ++k) {
        step *= 2.0;
        if (flo > 0.0) {
            lo = level - step;
            flo = f(lo);
        }
        if (fhi < 0.0) {
            hi = level + step;
            fhi = f(hi);
        }
    }
    if (!(flo <= 0.0 && fhi >= 0.0)) throw NumericalError("isotaxis: no bracket");
    return numeric::find_root(f, lo, hi);
}

double approx_point(const PriorSpec& prior, double level, double v) {
    switch (prior.family()) {
        case Family::Normal: {
            const double t2 = prior.tau() * prior.tau();
            return level * (t2 + v) / t2;
        }
        case Family::Exponential:
        case Family::ImproperExponential: return level + prior.rate() * v;
        case Family::Pareto: {
            const double h = 0.5 * level;
            return h + std::sqrt(h * h + (prior.alpha() + 1.0) * v);
        }
        case Family::Discrete: break;
    }
    throw DomainError("no closed-form isotaxis for discrete priors");
}

}  // namespace

IsotaxisCurve isotaxis_curve(const PriorSpec& prior, double level, std::span<const double> variance_grid,
                             IsotaxMode mode) {
    if (!std::isfinite(level)) throw ArgumentError("isotaxis level must be finite");
    IsotaxisCurve c;
    c.level = level;
    const bool exact = mode == IsotaxMode::Exact || prior.family() == Family::Discrete;
    for (double v : variance_grid) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("isotaxis variances must be nonnegative");
        if (v == 0.0) {
            c.points.push_back({level, 0.0});
            continue;
        }
        try {
            c.points.push_back({exact ? exact_point(prior, level, v) : approx_point(prior, level, v), v});
        } catch (const NumericalError&) {
            ++c.failures;
        }
    }
    return c;
}

std::size_t top_count(std::size_t n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("rank fraction must lie in (0, 1)");
    // Guard against alpha * n landing a hair above an integer.
    const double k = std::ceil(alpha * static_cast<double>(n) - 1e-9);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n);
}

double rank_threshold(const PriorSpec& prior, std::span<const Observation> obs, double alpha) {
    const RankedList r = rank_units(prior, obs);
    return r.scores[top_count(obs.size(), alpha) - 1];
}

std::vector<IsotaxPoint> significance_curve(std::span<const double> variance_grid, double level) {
    if (!(level > 0.0 && level < 1.0)) throw ArgumentError("significance level must lie in (0, 1)");
    const double z = numeric::normal_quantile(1.0 - 0.5 * level);
    std::vector<IsotaxPoint> out;
    for (double v : variance_grid) {
        if (!(v >= 0.0)) throw ArgumentError("variances must be nonnegative");
        out.push_back({z * std::sqrt(v), v});
    }
    return out;
}

std::vector<double> even_variance_grid(double max_variance, std::size_t count) {
    if (!(max_variance > 0.0) || count < 2) throw ArgumentError("variance grid needs max > 0 and two points");
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k)
        g[k] = max_variance * static_cast<double>(k) / static_cast<double>(count - 1);
    return g;
}

void write_isotax_csv(std::ostream& os, std::span<const IsotaxisCurve> curves, bool sigma_space) {
    os << "level_C,rank_fraction,x," << (sigma_space ? "sigma" : "variance") << '\n';
    for (const auto& c : curves)
        for (const auto& p : c.points)
            os << format_double(c.level) << ',' << (c.rank_fraction ? format_double(*c.rank_fraction) : "") << ','
               << format_double(p.x) << ',' << format_double(sigma_space ? std::sqrt(p.variance) : p.variance)
               << '\n';
}

std::string isotax_svg(std::span<const Observation> obs, std::span<const IsotaxisCurve> curves,
                       std::span<const IsotaxPoint> significance, const SvgOptions& options) {
    constexpr double W = 800, H = 600, L = 70, R = 20, T = 40, B = 50;
    auto yval = [&](double v) { return options.sigma_space ? std::sqrt(v) : v; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymax = 0.0;
    for (const auto& o : obs) {
        xmin = std::min(xmin, o.x);
        xmax = std::max(xmax, o.x);
        ymax = std::max(ymax, yval(o.sigma * o.sigma));
    }
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
        }
    if (!std::isfinite(xmin)) xmin = -1.0, xmax = 1.0;
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= 0.0) ymax = 1.0;
    const double pad = 0.05 * (xmax - xmin);
    xmin -= pad;
    xmax += pad;
    ymax *= 1.05;

    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - y / ymax * (H - T - B); };
    auto num = [](double v) {
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(2);
        s << v;
        return s.str();
    };
    auto tick = [](double v) {
        std::ostringstream s;
        s.precision(3);
        s << v;
        return s.str();
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << ' ' << H << "\" width=\"" << W
       << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!options.title.empty()) os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\">" << options.title << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 5.0;
        const double yv = ymax * k / 5.0;
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">x</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\" text-anchor=\"middle\">" << (options.sigma_space ? "sigma" : "sigma^2") << "</text>\n";

    os << "<g fill=\"#555\" fill-opacity=\"0.5\">\n";
    for (const auto& o : obs)
        os << "<circle cx=\"" << num(px(o.x)) << "\" cy=\"" << num(py(yval(o.sigma * o.sigma))) << "\" r=\"2\"/>\n";
    os << "</g>\n";

    static const char* colors[] = {"#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
    auto polyline = [&](const std::vector<IsotaxPoint>& pts, const char* color, const char* extra) {
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << extra << " points=\"";
        for (const auto& p : pts) {
            const double y = yval(p.variance);
            if (y > ymax || p.x < xmin || p.x > xmax) continue;
            os << num(px(p.x)) << ',' << num(py(y)) << ' ';
        }
        os << "\"/>\n";
    };
    for (std::size_t i = 0; i < curves.size(); ++i) polyline(curves[i].points, colors[i % 6], "");
    polyline(std::vector<IsotaxPoint>(significance.begin(), significance.end()), "#1f77b4",
             " stroke-dasharray=\"6 4\"");
    os << "</svg>\n";
    return os.str();
}

}  // namespace rankprior
