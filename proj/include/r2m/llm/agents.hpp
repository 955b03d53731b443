// SPDX-License-Identifier: Apache-2.0
//
// The two LLM-backed steps of the pipeline: turning a request into a
// configuration, and proposing hyperparameters inside the HPO dialogue.

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "r2m/common.hpp"
#include "r2m/hpo/space.hpp"
#include "r2m/llm/chat.hpp"
#include "r2m/llm/prompts.hpp"
#include "r2m/schema.hpp"

namespace r2m::llm {

/// Request understanding failed on the first attempt and on the repair retry.
class UnderstandingError : public Error {
public:
    UnderstandingError(const std::string& what, std::string last_reply)
        : Error(what), last_reply_(std::move(last_reply)) {}
    const std::string& last_reply() const noexcept { return last_reply_; }

private:
    std::string last_reply_;
};

/// No usable hyperparameter setting after the repair retry.
class ProposalError : public Error {
public:
    ProposalError(const std::string& what, std::string last_reply)
        : Error(what), last_reply_(std::move(last_reply)) {}
    const std::string& last_reply() const noexcept { return last_reply_; }

private:
    std::string last_reply_;
};

inline constexpr std::string_view kParseMarker = "###parse###";

struct ParseOutcome {
    schema::RequestConfig config;
    int retries = 0;
    std::vector<std::string> warnings;
};

/// Renders the parsing prompt, extracts the JSON after ###parse### (or the
/// first JSON block when the marker is missing) and parses it leniently. On
/// any failure the error is sent back once as a user turn before giving up.
ParseOutcome llm_parse_request(ChatClient& client, std::string_view request_text,
                               std::span<const ParsingDemo> demos);
/// Same, with the bundled parsing example as the only demo.
ParseOutcome llm_parse_request(ChatClient& client, std::string_view request_text);

struct ProposalOutcome {
    hpo::HyperparameterSetting setting;
    /// The reply the setting was decoded from.
    std::string reply;
    int retries = 0;
    std::vector<std::string> warnings;
};

/// Decodes a proposed setting: numeric fields outside the space are clamped to
/// the nearest bound (with a warning) and integers are rounded. Throws
/// SchemaError for missing fields or unknown categorical values.
hpo::HyperparameterSetting decode_proposal(const nlohmann::json& j, const hpo::SearchSpace& space,
                                           std::vector<std::string>* warnings);

/// One HPO round. Unknown categoricals or malformed replies get one repair
/// retry; a second failure throws ProposalError.
ProposalOutcome llm_propose_setting(ChatClient& client, const HPOContext& ctx, const hpo::SearchSpace& space,
                                    std::span<const HPOTurn> history);

}  // namespace r2m::llm
