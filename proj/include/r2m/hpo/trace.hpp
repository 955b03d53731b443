// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "r2m/hpo/space.hpp"

namespace r2m::hpo {

enum class Strategy { random, bayes_gp, bayes_rf, llm };

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> strategy_from_string(std::string_view s) noexcept;

struct TrialRecord {
    int round = 1;
    /// Empty only when no usable setting could be obtained for the round
    /// (an LLM proposal that failed after its repair retry).
    std::optional<HyperparameterSetting> setting;
    double metric_value = 0.0;
    /// Failure description; empty for successful rounds.
    std::string note;

    bool operator==(const TrialRecord&) const = default;
};

struct HPOTrace {
    std::string request_id;
    Strategy strategy = Strategy::random;
    std::vector<TrialRecord> trials;
    TrialRecord best;

    bool operator==(const HPOTrace&) const = default;
};

/// Recomputes `best` as the earliest trial with the maximal metric.
void update_best(HPOTrace& trace);

nlohmann::ordered_json to_json(const TrialRecord& t);
TrialRecord trial_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const HPOTrace& t);
HPOTrace trace_from_json(const nlohmann::json& j);

/// One TrialRecord JSON object per line.
std::string to_jsonl(const HPOTrace& t);
std::vector<TrialRecord> trials_from_jsonl(std::string_view text);

}  // namespace r2m::hpo
