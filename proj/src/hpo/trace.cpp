// SPDX-License-Identifier: Apache-2.0

#include "r2m/hpo/trace.hpp"

#include <sstream>

namespace r2m::hpo {

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::random: return "random";
        case Strategy::bayes_gp: return "bayes_gp";
        case Strategy::bayes_rf: return "bayes_rf";
        case Strategy::llm: return "llm";
    }
    return "random";
}

std::optional<Strategy> strategy_from_string(std::string_view s) noexcept {
    for (auto v : {Strategy::random, Strategy::bayes_gp, Strategy::bayes_rf, Strategy::llm}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

void update_best(HPOTrace& trace) {
    if (trace.trials.empty()) {
        trace.best = TrialRecord{};
        return;
    }
    const TrialRecord* best = &trace.trials.front();
    for (const auto& t : trace.trials) {
        if (t.metric_value > best->metric_value) best = &t;
    }
    trace.best = *best;
}

nlohmann::ordered_json to_json(const TrialRecord& t) {
    nlohmann::ordered_json j;
    j["round"] = t.round;
    j["setting"] = t.setting ? to_json(*t.setting) : nlohmann::ordered_json(nullptr);
    j["metric_value"] = t.metric_value;
    if (!t.note.empty()) j["note"] = t.note;
    return j;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
    TrialRecord t;
    t.round = j.at("round").get<int>();
    if (!j.at("setting").is_null()) t.setting = setting_from_json(j.at("setting"));
    t.metric_value = j.at("metric_value").get<double>();
    t.note = j.value("note", "");
    return t;
}

nlohmann::ordered_json to_json(const HPOTrace& t) {
    nlohmann::ordered_json j;
    j["request_id"] = t.request_id;
    j["strategy"] = std::string(to_string(t.strategy));
    j["trials"] = nlohmann::ordered_json::array();
    for (const auto& tr : t.trials) j["trials"].push_back(to_json(tr));
    j["best"] = to_json(t.best);
    return j;
}

HPOTrace trace_from_json(const nlohmann::json& j) {
    HPOTrace t;
    t.request_id = j.at("request_id").get<std::string>();
    const auto s = strategy_from_string(j.at("strategy").get<std::string>());
    if (!s) throw SchemaError("strategy", "unknown strategy");
    t.strategy = *s;
    for (const auto& tr : j.at("trials")) t.trials.push_back(trial_from_json(tr));
    t.best = trial_from_json(j.at("best"));
    return t;
}

std::string to_jsonl(const HPOTrace& t) {
    std::string out;
    for (const auto& tr : t.trials) {
        out += to_json(tr).dump();
        out += '\n';
    }
    return out;
}

std::vector<TrialRecord> trials_from_jsonl(std::string_view text) {
    std::vector<TrialRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(trial_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

}  // namespace r2m::hpo
