// SPDX-License-Identifier: Apache-2.0
//
// Per-task hyperparameter search spaces, settings and their encoding.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "r2m/common.hpp"
#include "r2m/util.hpp"

namespace r2m::hpo {

enum class Optimizer { SGD, Adam, AdamW, RMSprop };
enum class Schedule { MultiStepLR, CosineAnnealingLR, StepLR, PolyLR };

inline constexpr std::array<Optimizer, 4> kOptimizers{Optimizer::SGD, Optimizer::Adam, Optimizer::AdamW,
                                                      Optimizer::RMSprop};
inline constexpr std::array<Schedule, 4> kSchedules{Schedule::MultiStepLR, Schedule::CosineAnnealingLR,
                                                    Schedule::StepLR, Schedule::PolyLR};

std::string_view to_string(Optimizer o) noexcept;
std::string_view to_string(Schedule s) noexcept;
std::optional<Optimizer> optimizer_from_string(std::string_view s) noexcept;
std::optional<Schedule> schedule_from_string(std::string_view s) noexcept;

template <class T>
struct Range {
    T lo;
    T hi;
    bool contains(T v) const { return v >= lo && v <= hi; }
    bool operator==(const Range&) const = default;
};

struct SearchSpace {
    Task task = Task::classification;
    Range<double> lr{1e-8, 0.1};
    Range<double> wd{1e-5, 0.1};
    Range<std::int64_t> iters{2000, 5000};
    Range<std::int64_t> batch{1, 64};

    bool operator==(const SearchSpace&) const = default;
};

struct HyperparameterSetting {
    std::int64_t iters = 0;
    std::int64_t batch_size = 0;
    Optimizer optimizer = Optimizer::SGD;
    double learning_rate = 0.0;
    double weight_decay = 0.0;
    Schedule schedule = Schedule::MultiStepLR;

    bool operator==(const HyperparameterSetting&) const = default;
};

inline constexpr std::size_t kEncodedDims = 12;
using EncodedPoint = std::array<double, kEncodedDims>;

SearchSpace search_space_for(Task task);

bool within_bounds(const HyperparameterSetting& s, const SearchSpace& space);

/// Categoricals uniform; learning rate and weight decay log-uniform; iters and
/// batch size uniform integers (inclusive).
HyperparameterSetting sample_uniform(const SearchSpace& space, Rng& rng);
HyperparameterSetting sample_uniform(const SearchSpace& space, std::uint64_t rng_seed);

/// one-hot(optimizer) ++ one-hot(schedule) ++ [log-lr, log-wd, iters, batch]
/// scaled to [0, 1].
EncodedPoint encode(const HyperparameterSetting& s, const SearchSpace& space);

/// Listing-style keys: "iters", "batch size", "optimizer", "learning rate",
/// "weight decay", "lr schedule".
nlohmann::ordered_json to_json(const HyperparameterSetting& s);
/// Strict decoding; throws SchemaError naming the bad key.
HyperparameterSetting setting_from_json(const nlohmann::json& j);

/// Search-space description handed to the HPO prompt.
nlohmann::ordered_json space_prompt_json(const SearchSpace& space);

/// Short stable digest of a setting, used to reference it from plans.
std::string setting_digest(const HyperparameterSetting& s);

}  // namespace r2m::hpo
