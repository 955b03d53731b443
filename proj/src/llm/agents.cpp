// SPDX-License-Identifier: Apache-2.0

#include "r2m/llm/agents.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "r2m/llm/extract.hpp"

namespace r2m::llm {

namespace {

nlohmann::json extract_parse_block(const std::string& reply) {
    if (reply.find(kParseMarker) != std::string::npos) return extract_json(reply, kParseMarker);
    return extract_json(reply);
}

}  // namespace

ParseOutcome llm_parse_request(ChatClient& client, std::string_view request_text,
                               std::span<const ParsingDemo> demos) {
    auto messages = render_parsing_prompt(request_text, demos);
    ParseOutcome outcome;
    std::string reply;
    std::string error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) {
            messages.push_back({Role::assistant, reply.empty() ? std::string("(empty reply)") : reply});
            messages.push_back({Role::user, fmt::format("Your previous answer could not be used: {}. Return a "
                                                        "corrected {} that conforms to the json specification.",
                                                        error, kParseMarker)});
        }
        reply = client.complete(messages);
        try {
            std::vector<std::string> warnings;
            outcome.config = schema::config_from_json(extract_parse_block(reply), schema::ParseMode::lenient, &warnings);
            outcome.retries = attempt;
            outcome.warnings = std::move(warnings);
            return outcome;
        } catch (const ExtractError& e) {
            error = e.what();
        } catch (const ParseError& e) {
            error = e.what();
        } catch (const SchemaError& e) {
            error = e.what();
        }
    }
    throw UnderstandingError("request understanding failed after one repair attempt: " + error, reply);
}

ParseOutcome llm_parse_request(ChatClient& client, std::string_view request_text) {
    const ParsingDemo demo = default_parsing_demo();
    return llm_parse_request(client, request_text, std::span<const ParsingDemo>(&demo, 1));
}

namespace {

double number_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(key, "missing");
    if (it->is_number()) return it->get<double>();
    if (it->is_string()) {
        const std::string s = trim(it->get<std::string>());
        std::size_t used = 0;
        try {
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw SchemaError(key, "expected a number");
}

template <class Enum, std::size_t N>
Enum enum_field(const nlohmann::json& j, const char* key, const std::array<Enum, N>& values) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(key, "missing");
    if (!it->is_string()) throw SchemaError(key, "expected a string");
    const std::string wanted = to_lower(trim(it->get<std::string>()));
    for (Enum v : values) {
        if (to_lower(hpo::to_string(v)) == wanted) return v;
    }
    std::string allowed;
    for (Enum v : values) allowed += (allowed.empty() ? "" : ", ") + std::string(hpo::to_string(v));
    throw SchemaError(key, fmt::format("'{}' is not one of {}", it->get<std::string>(), allowed));
}

template <class T>
T clamp_to(T value, const hpo::Range<T>& range, const char* key, std::vector<std::string>* warnings) {
    const T clamped = std::clamp(value, range.lo, range.hi);
    if (clamped != value && warnings != nullptr) {
        warnings->push_back(fmt::format("{} {} clamped to {}", key, value, clamped));
    }
    return clamped;
}

}  // namespace

hpo::HyperparameterSetting decode_proposal(const nlohmann::json& j, const hpo::SearchSpace& space,
                                           std::vector<std::string>* warnings) {
    if (!j.is_object()) throw SchemaError("setting", "expected a JSON object");
    hpo::HyperparameterSetting s;
    auto integral = [&](const char* key, const hpo::Range<std::int64_t>& range) {
        const double v = number_field(j, key);
        if (!std::isfinite(v)) throw SchemaError(key, "not finite");
        const double rounded = std::round(std::clamp(v, -9.0e15, 9.0e15));
        if (rounded != v && warnings != nullptr) warnings->push_back(fmt::format("{} {} rounded", key, v));
        return clamp_to(static_cast<std::int64_t>(rounded), range, key, warnings);
    };
    auto positive = [&](const char* key, const hpo::Range<double>& range) {
        const double v = number_field(j, key);
        if (!std::isfinite(v)) throw SchemaError(key, "not finite");
        return clamp_to(v, range, key, warnings);
    };
    s.iters = integral("iters", space.iters);
    s.batch_size = integral("batch size", space.batch);
    s.optimizer = enum_field(j, "optimizer", hpo::kOptimizers);
    s.learning_rate = positive("learning rate", space.lr);
    s.weight_decay = positive("weight decay", space.wd);
    s.schedule = enum_field(j, "lr schedule", hpo::kSchedules);
    return s;
}

ProposalOutcome llm_propose_setting(ChatClient& client, const HPOContext& ctx, const hpo::SearchSpace& space,
                                    std::span<const HPOTurn> history) {
    const int round = static_cast<int>(history.size()) + 1;
    auto messages = render_hpo_messages(round, ctx, hpo::space_prompt_json(space).dump(4), history);
    ProposalOutcome outcome;
    std::string reply;
    std::string error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) {
            messages.push_back({Role::assistant, reply.empty() ? std::string("(empty reply)") : reply});
            messages.push_back({Role::user, fmt::format("That set of hyperparameters could not be used: {}. Please "
                                                        "provide a set of hyperparameters in the required json "
                                                        "format.",
                                                        error)});
        }
        reply = client.complete(messages);
        try {
            std::vector<std::string> warnings;
            outcome.setting = decode_proposal(extract_json(reply), space, &warnings);
            outcome.reply = reply;
            outcome.retries = attempt;
            outcome.warnings = std::move(warnings);
            return outcome;
        } catch (const ExtractError& e) {
            error = e.what();
        } catch (const SchemaError& e) {
            error = e.what();
        }
    }
    throw ProposalError("no usable hyperparameter setting after one repair attempt: " + error, reply);
}

}  // namespace r2m::llm
