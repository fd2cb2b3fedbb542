#pragma once

// Monte Carlo study of ranking loss under misspecified priors.
//
// Replicate r of a configuration draws theta, sigma and noise from three
// streams keyed by (seed, r), so any replicate can be regenerated alone and
// results do not depend on thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rankprior/prior.hpp"

namespace rankprior {

enum class ParameterMode { Optimal, TailMle };
std::string_view mode_name(ParameterMode m) noexcept;
ParameterMode parse_mode(std::string_view s);

struct SimulationConfig {
    PriorSpec true_prior = PriorSpec::normal(1.0);
    std::size_t n = 1000;
    std::size_t replicates = 200;
    double sigma_mean = 0.02;
    double sigma_offset = 0.0001;
    std::uint64_t seed = 20130101;
    ParameterMode mode = ParameterMode::Optimal;
    double cutoff_quantile = 0.9;
};

struct SimulatedDataset {
    std::vector<double> thetas;
    std::vector<Observation> observations;
};

SimulatedDataset simulate_dataset(const SimulationConfig& config, std::size_t replicate);

// One estimator: a parametric family, or nullopt for ranking by x.
struct CellResult {
    std::string true_family;
    std::string estimator;  // family name or "point_estimate"
    std::string mode;       // "optimal", "tail_mle", or "none" for point estimates
    std::size_t n = 0;
    std::size_t replicates = 0;  // successful replicates
    std::size_t failures = 0;
    double mean_loss = 0.0;
    double se_loss = 0.0;
    std::optional<double> param_mean;
    std::optional<double> param_sd;
    std::vector<double> losses;  // by replicate, failures skipped
    std::vector<double> params;
};

CellResult run_cell(const SimulationConfig& config, std::optional<Family> estimating);

struct StudyConfig {
    std::vector<PriorSpec> true_priors;  // empty: normal(1), exponential(1), Pareto(2, 0.5)
    std::vector<std::size_t> sizes = {1000, 10000};
    std::vector<std::size_t> replicates = {200, 50};
    bool include_large = false;  // adds n = 100000 with 10 replicates
    std::vector<ParameterMode> modes = {ParameterMode::Optimal, ParameterMode::TailMle};
    double sigma_mean = 0.02;
    double sigma_offset = 0.0001;
    std::uint64_t seed = 20130101;
    double cutoff_quantile = 0.9;
};

StudyConfig study_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StudyConfig& c);

struct StudyResult {
    std::vector<CellResult> cells;
};

using Progress = std::function<void(const std::string&)>;

// Every true prior x size x (three families x modes + point estimate).
// Datasets and reference rankings are shared across the cells of a
// replicate.
StudyResult run_study(const StudyConfig& config, const Progress& progress = {});

// The cells for one true prior and size, sharing datasets.
std::vector<CellResult> run_cells(const SimulationConfig& base, const std::vector<ParameterMode>& modes,
                                  bool include_point_estimate);

void write_study_csv(std::ostream& os, const StudyResult& r);
void write_study_report(std::ostream& os, const StudyResult& r);

}  // namespace rankprior
