// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "r2m/hpo/space.hpp"
#include "r2m/hpo/surrogate.hpp"
#include "r2m/hpo/trace.hpp"

namespace r2m::hpo {

inline constexpr double kDefaultXi = 0.01;
inline constexpr std::size_t kDefaultPoolSize = 2048;

/// Closed-form expected improvement for maximization,
/// E[max(f - best - xi, 0)] with f ~ N(mean, variance).
double expected_improvement(double mean, double variance, double best_so_far, double xi = kDefaultXi);

/// Draws `pool_size` uniform candidates and returns the one with the largest
/// expected improvement over the best metric in `history` (lowest index wins
/// ties).
HyperparameterSetting propose_next(const Surrogate& model, const SearchSpace& space,
                                   std::span<const TrialRecord> history, std::uint64_t rng_seed,
                                   std::size_t pool_size = kDefaultPoolSize, double xi = kDefaultXi);

}  // namespace r2m::hpo
