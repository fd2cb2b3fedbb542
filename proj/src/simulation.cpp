#include "rankprior/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "rankprior/errors.hpp"
#include "rankprior/format.hpp"
#include "rankprior/loss.hpp"
#include "rankprior/posterior.hpp"
#include "rankprior/rng.hpp"
#include "rankprior/tail_mle.hpp"

namespace rankprior {

namespace {

constexpr std::uint64_t kThetaStream = 0;
constexpr std::uint64_t kSigmaStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

void validate(const SimulationConfig& c) {
    if (c.n < 10) throw ArgumentError("simulation needs n >= 10");
    if (c.replicates < 1) throw ArgumentError("simulation needs at least one replicate");
    if (!(c.sigma_mean > 0.0)) throw ArgumentError("sigma_mean must be positive");
    if (!(c.sigma_offset >= 0.0)) throw ArgumentError("sigma_offset must be nonnegative");
    if (!(c.cutoff_quantile > 0.0 && c.cutoff_quantile < 1.0)) throw ArgumentError("cutoff quantile must lie in (0, 1)");
    if (c.true_prior.family() == Family::ImproperExponential)
        throw ArgumentError("the true prior must be proper");
}

struct Estimator {
    std::optional<Family> family;
    ParameterMode mode = ParameterMode::Optimal;
    std::optional<PriorSpec> fixed;  // optimal mode: precomputed prior
    bool broken = false;             // optimal prior undefined (divergent)
};

struct Outcome {
    bool ok = false;
    double loss = 0.0;
    std::optional<double> param;
};

RankedList rank_serial(const PriorSpec& p, const std::vector<Observation>& obs) {
    return rank_scores(kernels::posterior_means_serial(p, obs));
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<CellResult> run_estimators(const SimulationConfig& base, std::vector<Estimator> ests) {
    validate(base);
    const PriorSpec& truth = base.true_prior;
    const double a = quantile(truth, base.cutoff_quantile);
    const double eta = truth.family() == Family::Pareto ? truth.eta() : kDefaultParetoEta;
    for (auto& e : ests) {
        if (!e.family || e.mode != ParameterMode::Optimal) continue;
        if (*e.family == truth.family()) {
            e.fixed = truth;
            continue;
        }
        try {
            e.fixed = optimal_estimating_prior(truth, *e.family, a);
        } catch (const NumericalError&) {
            e.broken = true;
        }
    }

    const auto reps = static_cast<std::ptrdiff_t>(base.replicates);
    std::vector<std::vector<Outcome>> table(base.replicates, std::vector<Outcome>(ests.size()));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t r = 0; r < reps; ++r) {
        auto& row = table[static_cast<std::size_t>(r)];
        SimulatedDataset ds;
        RankedList ref;
        try {
            ds = simulate_dataset(base, static_cast<std::size_t>(r));
            ref = rank_serial(truth, ds.observations);
        } catch (const std::exception&) {
            continue;
        }
        std::optional<TailSample> tail;
        for (std::size_t k = 0; k < ests.size(); ++k) {
            const Estimator& e = ests[k];
            Outcome& out = row[k];
            if (e.broken) continue;
            try {
                RankedList est;
                if (!e.family) {
                    est = rank_by_point_estimate(ds.observations);
                } else if (e.mode == ParameterMode::Optimal) {
                    est = rank_serial(*e.fixed, ds.observations);
                } else {
                    if (!tail) tail = make_tail_sample(ds.observations, a);
                    const PriorSpec fitted = fit_tail(*e.family, *tail, eta);
                    out.param = fitted.primary_parameter();
                    est = rank_serial(fitted, ds.observations);
                }
                out.loss = weighted_top_decile_loss(ds.thetas, est, ref);
                out.ok = true;
            } catch (const std::exception&) {
                out.ok = false;
                out.param.reset();
            }
        }
    }

    std::vector<CellResult> cells;
    for (std::size_t k = 0; k < ests.size(); ++k) {
        const Estimator& e = ests[k];
        CellResult c;
        c.true_family = std::string(family_name(truth.family()));
        c.estimator = e.family ? std::string(family_name(*e.family)) : "point_estimate";
        c.mode = e.family ? std::string(mode_name(e.mode)) : "none";
        c.n = base.n;
        for (std::size_t r = 0; r < base.replicates; ++r) {
            const Outcome& o = table[r][k];
            if (!o.ok) {
                ++c.failures;
                continue;
            }
            c.losses.push_back(o.loss);
            if (o.param) c.params.push_back(*o.param);
        }
        c.replicates = c.losses.size();
        if (!c.losses.empty()) {
            c.mean_loss = mean_of(c.losses);
            c.se_loss = sd_of(c.losses, c.mean_loss) / std::sqrt(static_cast<double>(c.losses.size()));
        } else {
            c.mean_loss = c.se_loss = std::numeric_limits<double>::quiet_NaN();
        }
        if (!c.params.empty()) {
            c.param_mean = mean_of(c.params);
            c.param_sd = sd_of(c.params, *c.param_mean);
        } else if (e.fixed) {
            c.param_mean = e.fixed->primary_parameter();
            c.param_sd = 0.0;
        }
        cells.push_back(std::move(c));
    }
    return cells;
}

}  // namespace

std::string_view mode_name(ParameterMode m) noexcept {
    return m == ParameterMode::Optimal ? "optimal" : "tail_mle";
}

ParameterMode parse_mode(std::string_view s) {
    if (s == "optimal") return ParameterMode::Optimal;
    if (s == "tail_mle") return ParameterMode::TailMle;
    throw ArgumentError("unknown parameter mode '" + std::string(s) + "'");
}

SimulatedDataset simulate_dataset(const SimulationConfig& config, std::size_t replicate) {
    validate(config);
    const std::uint64_t base = static_cast<std::uint64_t>(replicate) * 4;
    Rng theta_rng = Rng::stream(config.seed, base + kThetaStream);
    Rng sigma_rng = Rng::stream(config.seed, base + kSigmaStream);
    Rng noise_rng = Rng::stream(config.seed, base + kNoiseStream);
    SimulatedDataset ds;
    ds.thetas.resize(config.n);
    ds.observations.resize(config.n);
    const double rate = 1.0 / config.sigma_mean;
    for (std::size_t i = 0; i < config.n; ++i) {
        const double theta = draw(config.true_prior, theta_rng);
        const double sigma = config.sigma_offset + sigma_rng.exponential(rate);
        ds.thetas[i] = theta;
        ds.observations[i] = {theta + sigma * noise_rng.normal(), sigma};
    }
    return ds;
}

CellResult run_cell(const SimulationConfig& config, std::optional<Family> estimating) {
    Estimator e;
    e.family = estimating;
    e.mode = config.mode;
    return run_estimators(config, {e}).front();
}

std::vector<CellResult> run_cells(const SimulationConfig& base, const std::vector<ParameterMode>& modes,
                                  bool include_point_estimate) {
    std::vector<Estimator> ests;
    for (ParameterMode m : modes)
        for (Family f : {Family::Normal, Family::Exponential, Family::Pareto}) {
            Estimator e;
            e.family = f;
            e.mode = m;
            ests.push_back(e);
        }
    if (include_point_estimate) ests.push_back(Estimator{});
    return run_estimators(base, std::move(ests));
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
    StudyConfig c;
    try {
        if (j.contains("true_priors"))
            for (const auto& p : j.at("true_priors")) c.true_priors.push_back(prior_from_json(p));
        if (j.contains("sizes")) c.sizes = j.at("sizes").get<std::vector<std::size_t>>();
        if (j.contains("replicates")) c.replicates = j.at("replicates").get<std::vector<std::size_t>>();
        c.include_large = j.value("include_large", c.include_large);
        if (j.contains("modes")) {
            c.modes.clear();
            for (const auto& m : j.at("modes")) c.modes.push_back(parse_mode(m.get<std::string>()));
        }
        c.sigma_mean = j.value("sigma_mean", c.sigma_mean);
        c.sigma_offset = j.value("sigma_offset", c.sigma_offset);
        c.seed = j.value("seed", c.seed);
        c.cutoff_quantile = j.value("cutoff_quantile", c.cutoff_quantile);
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("invalid simulation config: ") + e.what());
    }
    if (c.sizes.size() != c.replicates.size())
        throw ArgumentError("simulation config: sizes and replicates differ in length");
    return c;
}

nlohmann::json to_json(const StudyConfig& c) {
    nlohmann::json j;
    j["true_priors"] = nlohmann::json::array();
    for (const auto& p : c.true_priors) j["true_priors"].push_back(to_json(p));
    j["sizes"] = c.sizes;
    j["replicates"] = c.replicates;
    j["include_large"] = c.include_large;
    j["modes"] = nlohmann::json::array();
    for (auto m : c.modes) j["modes"].push_back(std::string(mode_name(m)));
    j["sigma_mean"] = c.sigma_mean;
    j["sigma_offset"] = c.sigma_offset;
    j["seed"] = c.seed;
    j["cutoff_quantile"] = c.cutoff_quantile;
    return j;
}

StudyResult run_study(const StudyConfig& config, const Progress& progress) {
    if (config.sizes.size() != config.replicates.size())
        throw ArgumentError("sizes and replicates differ in length");
    std::vector<PriorSpec> truths = config.true_priors;
    if (truths.empty()) truths = default_true_priors();
    std::vector<std::pair<std::size_t, std::size_t>> plan;
    for (std::size_t i = 0; i < config.sizes.size(); ++i) plan.emplace_back(config.sizes[i], config.replicates[i]);
    if (config.include_large) plan.emplace_back(100000, 10);

    StudyResult out;
    for (const auto& [n, reps] : plan)
        for (const auto& t : truths) {
            SimulationConfig sc;
            sc.true_prior = t;
            sc.n = n;
            sc.replicates = reps;
            sc.sigma_mean = config.sigma_mean;
            sc.sigma_offset = config.sigma_offset;
            sc.seed = config.seed;
            sc.cutoff_quantile = config.cutoff_quantile;
            auto cells = run_cells(sc, config.modes, true);
            for (auto& c : cells) out.cells.push_back(std::move(c));
            if (progress)
                progress("finished " + std::string(family_name(t.family())) + " n=" + std::to_string(n) + " (" +
                         std::to_string(reps) + " replicates)");
        }
    return out;
}

void write_study_csv(std::ostream& os, const StudyResult& r) {
    os << "n,true_family,estimator,mode,replicates,failures,mean_loss,se_loss,param_mean,param_sd\n";
    for (const auto& c : r.cells)
        os << c.n << ',' << c.true_family << ',' << c.estimator << ',' << c.mode << ',' << c.replicates << ','
           << c.failures << ',' << format_double(c.mean_loss) << ',' << format_double(c.se_loss) << ','
           << (c.param_mean ? format_double(*c.param_mean) : "") << ','
           << (c.param_sd ? format_double(*c.param_sd) : "") << '\n';
}

void write_study_report(std::ostream& os, const StudyResult& r) {
    std::map<std::size_t, std::vector<const CellResult*>> by_n;
    for (const auto& c : r.cells) by_n[c.n].push_back(&c);
    const char* ests[] = {"normal", "exponential", "pareto", "point_estimate"};
    auto fmt = [](double m, double s, int prec) {
        std::ostringstream o;
        o << std::setprecision(prec) << m << " (" << std::setprecision(2) << s << ")";
        return o.str();
    };
    for (const auto& [n, cells] : by_n) {
        for (const char* mode : {"optimal", "tail_mle"}) {
            bool any = false;
            for (const auto* c : cells) any = any || c->mode == mode;
            if (!any) continue;
            os << "Mean weighted top-decile loss, n = " << n << ", parameters: " << mode << "\n";
            os << std::left << std::setw(14) << "true \\ est";
            for (const char* e : ests) os << std::setw(22) << e;
            os << "\n";
            std::vector<std::string> truths;
            for (const auto* c : cells)
                if (std::find(truths.begin(), truths.end(), c->true_family) == truths.end())
                    truths.push_back(c->true_family);
            for (const auto& t : truths) {
                os << std::setw(14) << t;
                for (const char* e : ests) {
                    std::string cell = "-";
                    for (const auto* c : cells)
                        if (c->true_family == t && c->estimator == e &&
                            (c->mode == mode || (c->mode == "none" && std::string(e) == "point_estimate"))) {
                            cell = c->replicates ? fmt(c->mean_loss, c->se_loss, 4) : "failed";
                            if (c->failures) cell += " [" + std::to_string(c->failures) + " failed]";
                        }
                    os << std::setw(22) << cell;
                }
                os << "\n";
            }
            os << "\n";
            if (std::string(mode) != "tail_mle") continue;
            os << "Mean fitted parameter (sd), n = " << n << "\n";
            for (const auto& t : truths) {
                os << std::setw(14) << t;
                for (const char* e : {"normal", "exponential", "pareto"}) {
                    std::string cell = "-";
                    for (const auto* c : cells)
                        if (c->true_family == t && c->estimator == e && c->mode == mode && c->param_mean)
                            cell = fmt(*c->param_mean, c->param_sd.value_or(0.0), 5);
                    os << std::setw(22) << cell;
                }
                os << "\n";
            }
            os << "\n";
        }
    }
}

}  // namespace rankprior
