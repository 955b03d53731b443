// SPDX-License-Identifier: Apache-2.0

#include "r2m/hpo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace r2m::hpo {

double expected_improvement(double mean, double variance, double best_so_far, double xi) {
    const double gain = mean - best_so_far - xi;
    if (!(variance > 0.0)) return std::max(gain, 0.0);
    const double sigma = std::sqrt(variance);
    const double z = gain / sigma;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return std::max(gain * cdf + sigma * pdf, 0.0);
}

HyperparameterSetting propose_next(const Surrogate& model, const SearchSpace& space,
                                   std::span<const TrialRecord> history, std::uint64_t rng_seed,
                                   std::size_t pool_size, double xi) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& t : history) best = std::max(best, t.metric_value);
    if (history.empty()) best = 0.0;

    Rng rng(rng_seed);
    HyperparameterSetting chosen = sample_uniform(space, rng);
    double chosen_ei = -1.0;
    for (std::size_t i = 0; i < std::max<std::size_t>(pool_size, 1); ++i) {
        HyperparameterSetting candidate = i == 0 ? chosen : sample_uniform(space, rng);
        const Prediction p = model.predict(encode(candidate, space));
        const double ei = expected_improvement(p.mean, p.variance, best, xi);
        if (ei > chosen_ei) {
            chosen = candidate;
            chosen_ei = ei;
        }
    }
    return chosen;
}

}  // namespace r2m::hpo
