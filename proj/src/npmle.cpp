#include "rankprior/npmle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rankprior/errors.hpp"
#include "rankprior/nnls.hpp"
#include "rankprior/numeric.hpp"

namespace rankprior {

namespace kernels {

double mixture_em_step_serial(std::span<const double> lik, std::size_t g, std::span<const double> w,
                              std::span<double> w_next, std::span<double> grad) {
    const std::size_t n = lik.size() / g;
    std::vector<double> inv(n);
    double ll = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double* row = lik.data() + j * g;
        double m = 0.0;
        for (std::size_t b = 0; b < g; ++b) m += w[b] * row[b];
        inv[j] = 1.0 / m;
        ll += std::log(m);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double* row = lik.data() + j * g;
        for (std::size_t b = 0; b < g; ++b) grad[b] += row[b] * inv[j];
    }
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t b = 0; b < g; ++b) {
        grad[b] *= scale;
        w_next[b] = w[b] * grad[b];
    }
    return ll;
}

double mixture_em_step_parallel(std::span<const double> lik, std::size_t g, std::span<const double> w,
                                std::span<double> w_next, std::span<double> grad) {
    const auto n = static_cast<std::ptrdiff_t>(lik.size() / g);
    std::vector<double> inv(static_cast<std::size_t>(n));
    std::vector<double> logm(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        const double* row = lik.data() + static_cast<std::size_t>(j) * g;
        double m = 0.0;
        for (std::size_t b = 0; b < g; ++b) m += w[b] * row[b];
        inv[static_cast<std::size_t>(j)] = 1.0 / m;
        logm[static_cast<std::size_t>(j)] = std::log(m);
    }
    // Column blocks: each grid point sums over j in the same order as the
    // serial kernel, so results match bit for bit.
    constexpr std::size_t kBlock = 64;
    const auto blocks = static_cast<std::ptrdiff_t>((g + kBlock - 1) / kBlock);
    const double scale = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
        const std::size_t b0 = static_cast<std::size_t>(blk) * kBlock;
        const std::size_t b1 = std::min(g, b0 + kBlock);
        double acc[kBlock] = {};
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            const double* row = lik.data() + static_cast<std::size_t>(j) * g;
            const double iv = inv[static_cast<std::size_t>(j)];
            for (std::size_t b = b0; b < b1; ++b) acc[b - b0] += row[b] * iv;
        }
        for (std::size_t b = b0; b < b1; ++b) {
            grad[b] = acc[b - b0] * scale;
            w_next[b] = w[b] * grad[b];
        }
    }
    double ll = 0.0;
    for (double v : logm) ll += v;
    return ll;
}

}  // namespace kernels

namespace {

constexpr double kMaxDenseEntries = 4e8;

void check_obs(std::span<const Observation> obs) {
    if (obs.empty()) throw ArgumentError("NPMLE needs at least one observation");
    for (const auto& o : obs) {
        if (!std::isfinite(o.x)) throw ArgumentError("observation x must be finite");
        if (!(o.sigma > 0.0) || !std::isfinite(o.sigma)) throw ArgumentError("NPMLE needs every sigma > 0");
    }
}

// Per-observation log-likelihood of theta = b, minus the constant
// log(phi(0)/sigma_j) that is the row maximum when x_j lies on the grid.
inline double log_kernel(const Observation& o, double b) {
    const double z = (o.x - b) / o.sigma;
    return -0.5 * z * z;
}

double log_const(std::span<const Observation> obs) {
    double c = 0.0;
    for (const auto& o : obs) c += std::log(numeric::kInvSqrt2Pi / o.sigma);
    return c;
}

struct State {
    std::vector<double> w;
    double ll = -std::numeric_limits<double>::infinity();
    std::vector<double> next;
    std::vector<double> grad;
};

}  // namespace

std::vector<double> npmle_grid(std::span<const Observation> obs, std::size_t grid_size) {
    check_obs(obs);
    std::vector<double> pts;
    pts.reserve(obs.size() + grid_size);
    double lo = obs.front().x;
    double hi = lo;
    double smax = 0.0;
    for (const auto& o : obs) {
        pts.push_back(o.x);
        lo = std::min(lo, o.x);
        hi = std::max(hi, o.x);
        smax = std::max(smax, o.sigma);
    }
    lo -= 3.0 * smax;
    hi += 3.0 * smax;
    if (grid_size == 1) pts.push_back(0.5 * (lo + hi));
    for (std::size_t k = 0; grid_size > 1 && k < grid_size; ++k)
        pts.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid_size - 1));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

NpmleFit fit_npmle(std::span<const Observation> obs, const NpmleConfig& config) {
    check_obs(obs);
    if (!(config.loglik_tolerance > 0.0) || !(config.weight_prune_threshold >= 0.0) ||
        !(config.gradient_tolerance > 0.0))
        throw ArgumentError("NPMLE tolerances must be positive");

    const std::vector<double> grid = npmle_grid(obs, config.grid_size);
    const std::size_t g = grid.size();
    const std::size_t n = obs.size();
    if (static_cast<double>(n) * static_cast<double>(g) > kMaxDenseEntries)
        throw ArgumentError("dataset too large for the dense NPMLE; subsample or reduce the grid");

    std::vector<double> lik(n * g);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j)
        for (std::size_t b = 0; b < g; ++b)
            lik[static_cast<std::size_t>(j) * g + b] = std::exp(log_kernel(obs[static_cast<std::size_t>(j)], grid[b]));

    const double c = log_const(obs);
    auto step = [&](State& s) {
        s.next.resize(g);
        s.grad.resize(g);
        s.ll = kernels::mixture_em_step_parallel(lik, g, s.w, s.next, s.grad) + c;
    };
    auto max_grad = [](const State& s) { return *std::max_element(s.grad.begin(), s.grad.end()); };

    NpmleFit fit;
    State cur;
    cur.w.assign(g, 1.0 / static_cast<double>(g));
    step(cur);
    fit.loglik_trace.push_back(cur.ll);

    std::vector<double> r(g), v(g);
    std::size_t it = 0;
    bool stalled = false;
    const std::size_t em_cap = std::min(config.em_iterations, config.max_iterations);
    for (; it < em_cap; ++it) {
        State s1;
        s1.w = cur.next;
        step(s1);
        State best = s1;
        if (config.accelerate) {
            // Squared extrapolation along the last two EM moves, backtracked
            // toward the plain EM point until every weight stays positive.
            double rn = 0.0, vn = 0.0;
            for (std::size_t b = 0; b < g; ++b) {
                r[b] = s1.w[b] - cur.w[b];
                v[b] = s1.next[b] - s1.w[b] - r[b];
                rn += r[b] * r[b];
                vn += v[b] * v[b];
            }
            if (vn > 0.0) {
                double alpha = std::min(-std::sqrt(rn / vn), -1.0);
                State sp;
                sp.w.resize(g);
                for (int tries = 0; tries < 60 && alpha < -1.0; ++tries) {
                    bool positive = true;
                    double sum = 0.0;
                    for (std::size_t b = 0; b < g && positive; ++b) {
                        sp.w[b] = cur.w[b] - 2.0 * alpha * r[b] + alpha * alpha * v[b];
                        positive = sp.w[b] > 0.0;
                        sum += sp.w[b];
                    }
                    if (positive) {
                        for (auto& x : sp.w) x /= sum;
                        step(sp);
                        if (sp.ll >= s1.ll) best = std::move(sp);
                        break;
                    }
                    alpha = 0.5 * (alpha - 1.0);
                }
            }
        }
        if (!(best.ll >= cur.ll)) {
            stalled = true;  // no further increase at working precision
            break;
        }
        const double gain = best.ll - cur.ll;
        cur = std::move(best);
        fit.loglik_trace.push_back(cur.ll);
        if (gain < config.loglik_tolerance && max_grad(cur) <= 1.0 + config.gradient_tolerance) {
            fit.converged = true;
            ++it;
            break;
        }
    }

    // Newton polish: the quadratic model of the log-likelihood at w is
    // minimized over w >= 0 by NNLS of the scaled likelihood against 2.
    // An extra row pulls sum(w) toward 1; without it the model is
    // underdetermined whenever the grid outnumbers the observations.
    const auto rows = static_cast<Eigen::Index>(n + 1);
    Eigen::MatrixXd S(rows, static_cast<Eigen::Index>(g));
    Eigen::VectorXd target = Eigen::VectorXd::Constant(rows, 2.0);
    const double pin = std::sqrt(static_cast<double>(n));
    S.row(rows - 1).setConstant(pin);
    target[rows - 1] = pin;
    for (; !fit.converged && !stalled && it < config.max_iterations; ++it) {
        for (std::size_t j = 0; j < n; ++j) {
            double m = 0.0;
            for (std::size_t b = 0; b < g; ++b) m += cur.w[b] * lik[j * g + b];
            for (std::size_t b = 0; b < g; ++b)
                S(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = lik[j * g + b] / m;
        }
        const Eigen::VectorXd sol = numeric::nnls(S, target);
        const double total = sol.sum();
        if (!(total > 0.0)) break;

        std::vector<double> d(g);
        double slope = 0.0;
        for (std::size_t b = 0; b < g; ++b) {
            d[b] = sol[static_cast<Eigen::Index>(b)] / total - cur.w[b];
            slope += static_cast<double>(n) * cur.grad[b] * d[b];
        }
        if (!(slope > 0.0)) break;
        bool accepted = false;
        State cand;
        cand.w.resize(g);
        for (double step_len = 1.0; step_len > 1e-12; step_len *= 0.5) {
            for (std::size_t b = 0; b < g; ++b) cand.w[b] = std::max(0.0, cur.w[b] + step_len * d[b]);
            step(cand);
            if (cand.ll >= cur.ll + slope * step_len / 3.0) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const double gain = cand.ll - cur.ll;
        cur = std::move(cand);
        fit.loglik_trace.push_back(cur.ll);
        if (gain < config.loglik_tolerance && max_grad(cur) <= 1.0 + config.gradient_tolerance) {
            fit.converged = true;
            ++it;
        }
    }
    if (!fit.converged) fit.converged = max_grad(cur) <= 1.0 + config.gradient_tolerance;
    fit.iterations = it;

    std::vector<double> support;
    std::vector<double> weights;
    for (std::size_t b = 0; b < g; ++b)
        if (cur.w[b] >= config.weight_prune_threshold && cur.w[b] > 0.0) {
            support.push_back(grid[b]);
            weights.push_back(cur.w[b]);
        }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& x : weights) x /= total;
    fit.prior = PriorSpec::discrete(std::move(support), std::move(weights));

    // Certificate and likelihood of the pruned prior.
    State fin;
    fin.w.assign(g, 0.0);
    {
        auto s = fit.prior.support();
        auto w = fit.prior.weights();
        for (std::size_t i = 0, b = 0; i < s.size(); ++i) {
            while (grid[b] != s[i]) ++b;
            fin.w[b] = w[i];
        }
    }
    step(fin);
    fit.log_likelihood = fin.ll;
    fit.max_gradient_ratio = max_grad(fin);
    return fit;
}

double marginal_log_likelihood(const PriorSpec& prior, std::span<const Observation> obs) {
    double ll = 0.0;
    if (prior.family() == Family::Normal) {
        for (const auto& o : obs) {
            const double v = prior.tau() * prior.tau() + o.sigma * o.sigma;
            ll += -0.5 * o.x * o.x / v - 0.5 * std::log(v) + std::log(numeric::kInvSqrt2Pi);
        }
        return ll;
    }
    if (prior.family() != Family::Discrete)
        throw DomainError("marginal_log_likelihood supports discrete and normal priors");
    auto s = prior.support();
    auto w = prior.weights();
    for (const auto& o : obs) {
        if (!(o.sigma > 0.0)) throw ArgumentError("marginal likelihood needs sigma > 0");
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.size(); ++i)
            if (w[i] > 0.0) top = std::max(top, std::log(w[i]) + log_kernel(o, s[i]));
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (w[i] > 0.0) acc += std::exp(std::log(w[i]) + log_kernel(o, s[i]) - top);
        ll += top + std::log(acc) + std::log(numeric::kInvSqrt2Pi / o.sigma);
    }
    return ll;
}

std::vector<double> npmle_gradient(const PriorSpec& prior, std::span<const Observation> obs,
                                   std::span<const double> points) {
    if (prior.family() != Family::Discrete) throw DomainError("npmle_gradient needs a discrete prior");
    check_obs(obs);
    auto s = prior.support();
    auto w = prior.weights();
    // log marginal_j without the shared log(phi(0)/sigma_j) term.
    std::vector<double> logm(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.size(); ++i)
            if (w[i] > 0.0) top = std::max(top, std::log(w[i]) + log_kernel(obs[j], s[i]));
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (w[i] > 0.0) acc += std::exp(std::log(w[i]) + log_kernel(obs[j], s[i]) - top);
        logm[j] = top + std::log(acc);
    }
    std::vector<double> out(points.size(), 0.0);
    for (std::size_t k = 0; k < points.size(); ++k)
        for (std::size_t j = 0; j < obs.size(); ++j) out[k] += std::exp(log_kernel(obs[j], points[k]) - logm[j]);
    return out;
}

double mass_in_interval(const PriorSpec& prior, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    if (prior.family() == Family::Discrete) {
        auto s = prior.support();
        auto w = prior.weights();
        double m = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i] > lo && s[i] < hi) m += w[i];
        return m;
    }
    return cdf(prior, hi) - cdf(prior, lo);
}

double lemma1_bound(double r, double a, double sigma) {
    if (!(r > 1.0)) throw ArgumentError("lemma1_bound: r must exceed 1");
    if (!(a >= 0.0)) throw ArgumentError("lemma1_bound: a must be nonnegative");
    if (!(sigma > 0.0)) throw ArgumentError("lemma1_bound: sigma must be positive");
    return a + sigma * std::sqrt(2.0 * std::log(r));
}

double local_mass_radius(std::size_t n, double sigma) {
    if (n < 1) throw ArgumentError("n must be positive");
    return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)) + 1.0);
}

double local_mass_floor(std::size_t n) {
    if (n < 1) throw ArgumentError("n must be positive");
    return -std::expm1(-0.5) / static_cast<double>(n);
}

double combined_robustness_bound(std::size_t n, double sigma) {
    if (n < 2) throw ArgumentError("combined_robustness_bound: n must be at least 2");
    if (!(sigma > 0.0)) throw ArgumentError("combined_robustness_bound: sigma must be positive");
    const double nd = static_cast<double>(n);
    return sigma * (std::sqrt(2.0 * std::log(nd) + 1.0) +
                    std::sqrt(2.0 * std::log(nd / -std::expm1(-0.5) - 1.0)));
}

}  // namespace rankprior
