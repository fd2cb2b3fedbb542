#pragma once

// Dataset ingestion and result tables.
//
// Input is CSV with an optional header. Two row shapes are accepted:
//   id, estimate, stderr
//   id, odds_ratio, ci_low, ci_high     (95% interval; x = log OR, sigma = log width / 4)
// Without a header the shape is taken from the column count.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rankprior/posterior.hpp"
#include "rankprior/prior.hpp"

namespace rankprior {

enum class InputFormat { Auto, Estimate, OddsRatio };

InputFormat parse_input_format(std::string_view s);

struct Unit {
    std::string id;
    Observation obs;
};

struct RowReject {
    std::size_t line = 0;  // 1-based line in the source
    std::string reason;
};

struct Dataset {
    std::vector<Unit> units;
    std::vector<RowReject> rejects;
    InputFormat format = InputFormat::Auto;  // the shape actually read
};

// Bad rows land in `rejects`; an input with no valid rows throws ArgumentError.
Dataset read_dataset(std::istream& in, InputFormat format = InputFormat::Auto);
Dataset load_dataset(const std::string& path, InputFormat format = InputFormat::Auto);

// Throws ArgumentError unless ci_high > ci_low > 0 and odds_ratio > 0.
Observation odds_ratio_observation(double odds_ratio, double ci_low, double ci_high);

std::vector<Observation> observations(const Dataset& d);

// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

// Method-of-moments normal variance over the whole dataset,
// mean(x^2) - mean(sigma^2), floored at 1e-12.
double naive_normal_variance(std::span<const Observation> obs);

// Columns id, x, sigma, posterior_mean, rank (1 = best), in rank order.
void write_ranking_csv(std::ostream& os, const std::vector<Unit>& units, const RankedList& ranking);
nlohmann::json ranking_json(const std::vector<Unit>& units, const RankedList& ranking);

void write_rejects(std::ostream& os, const std::vector<RowReject>& rejects);

}  // namespace rankprior
