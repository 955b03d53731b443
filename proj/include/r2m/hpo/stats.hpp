// SPDX-License-Identifier: Apache-2.0
//
// Best-of-k resampling statistics and hyperparameter/metric correlation
// analysis.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "r2m/common.hpp"
#include "r2m/hpo/space.hpp"

namespace r2m::hpo {

class DegenerateError : public Error {
public:
    using Error::Error;
};

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

/// For k = 1..max_k: each repeat draws max_k values with replacement from every
/// population, takes the maximum of the first k per population and averages
/// over populations. Returns mean and population std over repeats, indexed by
/// k - 1. Throws std::logic_error if the mean curve ever decreases.
std::vector<MeanStd> best_of_k_stats(const std::vector<std::vector<double>>& populations, int repeats,
                                     std::uint64_t rng_seed, int max_k = 10);

/// Sample Pearson correlation. Throws DegenerateError on a constant input and
/// std::invalid_argument on mismatched or too-short inputs.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct Quartiles {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    std::size_t count = 0;

    bool operator==(const Quartiles&) const = default;
};

/// Five-number summary with linear interpolation between order statistics.
Quartiles quartiles(std::vector<double> values);

struct Observation {
    HyperparameterSetting setting;
    double metric = 0.0;
};

struct CorrelationReport {
    /// Keys: "learning rate" (log10), "weight decay" (log10), "iters", "batch size".
    std::map<std::string, double> pearson;
    std::map<std::string, Quartiles> by_optimizer;
    std::map<std::string, Quartiles> by_schedule;
    std::vector<std::string> warnings;
};

CorrelationReport correlation_report(std::span<const Observation> data);

}  // namespace r2m::hpo
