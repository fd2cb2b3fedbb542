// rankprior: command-line front end.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rankprior/errors.hpp"
#include "rankprior/format.hpp"
#include "rankprior/io.hpp"
#include "rankprior/isotax.hpp"
#include "rankprior/loss.hpp"
#include "rankprior/npmle.hpp"
#include "rankprior/parallel.hpp"
#include "rankprior/posterior.hpp"
#include "rankprior/prior.hpp"
#include "rankprior/simulation.hpp"
#include "rankprior/tail_mle.hpp"

using namespace rankprior;
using nlohmann::json;

namespace {

struct Common {
    std::uint64_t seed = 20130101;
    std::string out = "-";
    std::string format = "csv";
    bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    app->add_option("--out", c.out, "Output path, - for stdout")->capture_default_str();
    app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app->add_flag("--quiet", c.quiet, "Suppress progress and reject reports");
}

// Writes to a file or stdout; files are replaced only after the whole output is built.
void emit(const Common& c, const std::string& text) {
    if (c.out == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw ArgumentError("cannot write '" + c.out + "'");
    f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ArgumentError("bad number for " + what + ": '" + s + "'");
    return v;
}

// family:key=value,key=value
PriorSpec parse_inline_prior(const std::string& spec, double eta) {
    const auto colon = spec.find(':');
    const Family f = parse_family(spec.substr(0, colon));
    std::map<std::string, double> kv;
    if (colon != std::string::npos)
        for (const auto& part : split(spec.substr(colon + 1), ',')) {
            const auto eq = part.find('=');
            if (eq == std::string::npos) throw ArgumentError("expected key=value in '" + part + "'");
            kv[part.substr(0, eq)] = to_double(part.substr(eq + 1), part.substr(0, eq));
        }
    auto need = [&](const char* k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw ArgumentError(std::string("prior '") + spec + "' needs " + k);
        return it->second;
    };
    switch (f) {
        case Family::Normal:
            if (kv.count("tau2")) return PriorSpec::normal(std::sqrt(need("tau2")));
            return PriorSpec::normal(need("tau"));
        case Family::Exponential: return PriorSpec::exponential(need("rate"));
        case Family::ImproperExponential: return PriorSpec::improper_exponential(need("rate"));
        case Family::Pareto: return PriorSpec::pareto(need("alpha"), kv.count("eta") ? kv["eta"] : eta);
        case Family::Discrete: break;
    }
    throw ArgumentError("discrete priors must be given as JSON");
}

struct PriorChoice {
    PriorSpec prior = PriorSpec::normal(1.0);
    json info;  // how the prior was obtained
};

PriorChoice fit_family(const std::string& family, const std::vector<Observation>& obs, double tail_quantile,
                       double eta, std::size_t grid_size) {
    PriorChoice pc;
    if (family == "npmle") {
        NpmleConfig cfg;
        cfg.grid_size = grid_size;
        auto fit = fit_npmle(obs, cfg);
        pc.prior = fit.prior;
        pc.info = {{"method", "npmle"},
                   {"log_likelihood", fit.log_likelihood},
                   {"iterations", fit.iterations},
                   {"converged", fit.converged},
                   {"max_gradient_ratio", fit.max_gradient_ratio}};
        return pc;
    }
    if (family == "naive-normal") {
        const double v = naive_normal_variance(obs);
        pc.prior = PriorSpec::normal(std::sqrt(v));
        pc.info = {{"method", "naive method-of-moments normal variance"}, {"tau2", v}};
        return pc;
    }
    const Family f = parse_family(family);
    if (f != Family::Normal && f != Family::Exponential && f != Family::Pareto)
        throw ArgumentError("tail fits support normal, exponential and pareto");
    std::vector<double> xs;
    for (const auto& o : obs) xs.push_back(o.x);
    const double a = empirical_quantile(xs, tail_quantile);
    auto tail = make_tail_sample(obs, a);
    pc.prior = fit_tail(f, tail, eta);
    pc.info = {{"method", "tail_mle"}, {"a", a}, {"tail_quantile", tail_quantile}, {"n_a", tail.n_a}};
    return pc;
}

PriorChoice resolve_prior(const std::string& spec, const std::vector<Observation>& obs, double tail_quantile,
                          double eta, std::size_t grid_size) {
    if (spec == "npmle" || spec == "naive-normal") return fit_family(spec, obs, tail_quantile, eta, grid_size);
    if (spec.rfind("fit-tail:", 0) == 0) return fit_family(spec.substr(9), obs, tail_quantile, eta, grid_size);
    PriorChoice pc;
    pc.info = {{"method", "given"}};
    if (!spec.empty() && spec.front() == '{') {
        try {
            pc.prior = prior_from_json(json::parse(spec));
        } catch (const json::exception& e) {
            throw ArgumentError(std::string("bad prior JSON: ") + e.what());
        }
        return pc;
    }
    if (std::ifstream f(spec); f && spec.find(':') == std::string::npos) {
        try {
            pc.prior = prior_from_json(json::parse(f));
        } catch (const json::exception& e) {
            throw ArgumentError("bad prior JSON in '" + spec + "': " + e.what());
        }
        return pc;
    }
    pc.prior = parse_inline_prior(spec, eta);
    return pc;
}

Dataset load_input(const std::string& path, const std::string& fmt, const Common& c) {
    Dataset d = path == "-" ? read_dataset(std::cin, parse_input_format(fmt))
                            : load_dataset(path, parse_input_format(fmt));
    if (!c.quiet && !d.rejects.empty()) {
        std::cerr << d.rejects.size() << " row(s) rejected\n";
        write_rejects(std::cerr, d.rejects);
    }
    return d;
}

json prior_json(const PriorChoice& pc) {
    json j = to_json(pc.prior);
    j["fit"] = pc.info;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    parallel::apply_env_thread_cap();
    CLI::App app{"Empirical-Bayes ranking by posterior mean"};
    app.require_subcommand(1);

    std::string input = "-";
    std::string input_format = "auto";
    std::string prior_spec;
    double tail_quantile = 0.9;
    double eta = kDefaultParetoEta;
    std::size_t grid_size = NpmleConfig{}.grid_size;

    auto add_data = [&](CLI::App* sub, bool with_prior) {
        sub->add_option("--input", input, "Dataset CSV, - for stdin")->required();
        sub->add_option("--input-format", input_format, "auto, estimate or odds-ratio")->capture_default_str();
        sub->add_option("--tail-quantile", tail_quantile, "Truncation quantile for tail fits")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        sub->add_option("--eta", eta, "Pareto minimum for fitted Pareto priors")->capture_default_str();
        sub->add_option("--grid-size", grid_size, "Extra NPMLE grid points")->capture_default_str();
        if (with_prior)
            sub->add_option("--prior", prior_spec,
                            "JSON, JSON file, family:key=value, npmle, fit-tail:<family> or naive-normal")
                ->required();
    };

    // rank
    Common rank_c;
    auto* rank = app.add_subcommand("rank", "Rank units by posterior mean");
    add_common(rank, rank_c);
    add_data(rank, true);

    // isotax
    Common iso_c;
    std::string levels = "0.01,0.05,0.1";
    std::string values;
    bool svg = false;
    bool sigma_space = false;
    bool exact = false;
    double significance = 0.05;
    std::size_t points = 200;
    double max_variance = 0.0;
    auto* iso = app.add_subcommand("isotax", "Isotaxis curves for top-fraction thresholds");
    add_common(iso, iso_c);
    add_data(iso, true);
    iso->add_option("--levels", levels, "Comma-separated top fractions")->capture_default_str();
    iso->add_option("--values", values, "Comma-separated posterior-mean levels (overrides --levels)");
    iso->add_flag("--svg", svg, "Write an SVG figure instead of CSV");
    iso->add_flag("--sigma-space", sigma_space, "Use sigma rather than sigma^2 on the vertical axis");
    iso->add_flag("--exact", exact, "Root-find exact posterior means instead of first-order curves");
    iso->add_option("--significance", significance, "Two-sided level of the significance curve")
        ->capture_default_str();
    iso->add_option("--points", points, "Variance grid size")->capture_default_str();
    iso->add_option("--max-variance", max_variance, "Top of the variance grid (default: data max)");

    // loss-table
    Common loss_c;
    double cutoff_quantile = 0.9;
    auto* loss = app.add_subcommand("loss-table", "Expected-loss integrals, optimal parameters, sensitivities");
    add_common(loss, loss_c);
    loss->add_option("--cutoff-quantile", cutoff_quantile, "Cutoff as a quantile of each true prior")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();

    // simulate
    Common sim_c;
    std::string config_path;
    std::string report_path;
    bool large = false;
    auto* sim = app.add_subcommand("simulate", "Run the simulation study");
    add_common(sim, sim_c);
    sim->add_option("--config", config_path, "Study configuration JSON");
    sim->add_option("--report", report_path, "Also write a text report here");
    sim->add_flag("--large", large, "Add the n = 100000 rows");

    // fit-prior
    Common fit_c;
    std::string family = "npmle";
    auto* fit = app.add_subcommand("fit-prior", "Fit a prior to a dataset");
    add_common(fit, fit_c);
    add_data(fit, false);
    fit->add_option("--family", family, "normal, exponential, pareto, npmle or naive-normal")
        ->check(CLI::IsMember({"normal", "exponential", "pareto", "npmle", "naive-normal"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*rank) {
            auto d = load_input(input, input_format, rank_c);
            auto obs = observations(d);
            auto pc = resolve_prior(prior_spec, obs, tail_quantile, eta, grid_size);
            auto ranking = rank_units(pc.prior, obs);
            if (rank_c.format == "json") {
                emit(rank_c, dump({{"prior", prior_json(pc)}, {"units", ranking_json(d.units, ranking)}}));
            } else {
                std::ostringstream os;
                write_ranking_csv(os, d.units, ranking);
                emit(rank_c, os.str());
            }
        } else if (*iso) {
            auto d = load_input(input, input_format, iso_c);
            auto obs = observations(d);
            auto pc = resolve_prior(prior_spec, obs, tail_quantile, eta, grid_size);
            double vmax = max_variance;
            if (!(vmax > 0.0))
                for (const auto& o : obs) vmax = std::max(vmax, o.sigma * o.sigma);
            auto grid = even_variance_grid(vmax, points);
            const auto mode = exact ? IsotaxMode::Exact : IsotaxMode::Approximate;
            std::vector<IsotaxisCurve> curves;
            if (!values.empty()) {
                for (const auto& v : split(values, ','))
                    curves.push_back(isotaxis_curve(pc.prior, to_double(v, "--values"), grid, mode));
            } else {
                for (const auto& l : split(levels, ',')) {
                    const double alpha = to_double(l, "--levels");
                    auto c = isotaxis_curve(pc.prior, rank_threshold(pc.prior, obs, alpha), grid, mode);
                    c.rank_fraction = alpha;
                    curves.push_back(std::move(c));
                }
            }
            auto sig = significance_curve(grid, significance);
            if (svg) {
                SvgOptions so;
                so.title = "Isotaxes, " + std::string(family_name(pc.prior.family())) + " prior";
                so.sigma_space = sigma_space;
                emit(iso_c, isotax_svg(obs, curves, sig, so));
            } else if (iso_c.format == "json") {
                json jc = json::array();
                for (const auto& c : curves) {
                    json pts = json::array();
                    for (const auto& p : c.points) pts.push_back({p.x, p.variance});
                    jc.push_back({{"level", c.level},
                                  {"rank_fraction", c.rank_fraction ? json(*c.rank_fraction) : json(nullptr)},
                                  {"failures", c.failures},
                                  {"points", pts}});
                }
                json js = json::array();
                for (const auto& p : sig) js.push_back({p.x, p.variance});
                emit(iso_c, dump({{"prior", prior_json(pc)}, {"curves", jc}, {"significance", js}}));
            } else {
                std::ostringstream os;
                write_isotax_csv(os, curves, sigma_space);
                emit(iso_c, os.str());
            }
        } else if (*loss) {
            auto priors = default_true_priors();
            auto rows = loss_table(priors, cutoff_quantile);
            if (loss_c.format == "json") {
                json j = json::array();
                for (const auto& r : rows)
                    j.push_back({{"true_family", r.true_family},
                                 {"est_family", r.est_family},
                                 {"parameter", r.parameter},
                                 {"integral_loss", std::isfinite(r.integral_loss) ? json(r.integral_loss)
                                                                                  : json(format_double(r.integral_loss))},
                                 {"optimal_param", r.optimal_param ? json(*r.optimal_param) : json(nullptr)},
                                 {"sensitivity", r.sensitivity ? json(*r.sensitivity) : json(nullptr)}});
                emit(loss_c, dump(j));
            } else {
                std::ostringstream os;
                write_loss_table_csv(os, rows);
                emit(loss_c, os.str());
            }
        } else if (*sim) {
            StudyConfig cfg;
            if (!config_path.empty()) {
                std::ifstream f(config_path);
                if (!f) throw ArgumentError("cannot open '" + config_path + "'");
                try {
                    cfg = study_config_from_json(json::parse(f));
                } catch (const json::exception& e) {
                    throw ArgumentError(std::string("bad config JSON: ") + e.what());
                }
            }
            if (sim->count("--seed")) cfg.seed = sim_c.seed;
            if (large) cfg.include_large = true;
            Progress progress;
            if (!sim_c.quiet) progress = [](const std::string& s) { std::cerr << s << '\n'; };
            auto result = run_study(cfg, progress);
            if (sim_c.format == "json") {
                json cells = json::array();
                for (const auto& c : result.cells)
                    cells.push_back({{"n", c.n},
                                     {"true_family", c.true_family},
                                     {"estimator", c.estimator},
                                     {"mode", c.mode},
                                     {"replicates", c.replicates},
                                     {"failures", c.failures},
                                     {"mean_loss", c.mean_loss},
                                     {"se_loss", c.se_loss},
                                     {"param_mean", c.param_mean ? json(*c.param_mean) : json(nullptr)},
                                     {"param_sd", c.param_sd ? json(*c.param_sd) : json(nullptr)}});
                emit(sim_c, dump({{"config", to_json(cfg)}, {"cells", cells}}));
            } else {
                std::ostringstream os;
                write_study_csv(os, result);
                emit(sim_c, os.str());
            }
            if (!report_path.empty()) {
                std::ofstream r(report_path);
                if (!r) throw ArgumentError("cannot write '" + report_path + "'");
                write_study_report(r, result);
            }
        } else if (*fit) {
            auto d = load_input(input, input_format, fit_c);
            auto obs = observations(d);
            auto pc = fit_family(family, obs, tail_quantile, eta, grid_size);
            if (fit_c.format == "json") {
                emit(fit_c, dump(prior_json(pc)));
            } else {
                std::ostringstream os;
                os << "key,value\nfamily," << family_name(pc.prior.family()) << '\n';
                if (pc.prior.family() == Family::Discrete) {
                    for (std::size_t i = 0; i < pc.prior.support().size(); ++i)
                        os << "support_" << i << ',' << format_double(pc.prior.support()[i]) << "\nweight_" << i
                           << ',' << format_double(pc.prior.weights()[i]) << '\n';
                } else {
                    os << "parameter," << format_double(pc.prior.primary_parameter()) << '\n';
                    if (pc.prior.family() == Family::Pareto) os << "eta," << format_double(pc.prior.eta()) << '\n';
                }
                for (const auto& [k, v] : pc.info.items())
                    if (k != "method") os << k << ',' << (v.is_number_float() ? format_double(v.get<double>()) : v.dump()) << '\n';
                emit(fit_c, os.str());
            }
        }
    } catch (const EstimationError& e) {
        std::cerr << "error: " << e.what() << " (approximate value " << format_double(e.approximation()) << ")\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
