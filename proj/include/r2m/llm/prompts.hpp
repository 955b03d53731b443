// SPDX-License-Identifier: Apache-2.0
//
// Deterministic renderers for the request-generation, request-parsing and
// multi-round HPO conversations. Template text lives in assets/prompts and is
// compiled into the library.

#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "r2m/common.hpp"
#include "r2m/llm/chat.hpp"

namespace r2m::llm {

/// Caller violated a documented precondition of a renderer.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Substitutes `{{name}}` slots. A `{{#name}}...{{/name}}` section is kept
/// only when slot `name` is non-empty. Unknown slots throw ContractError.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& slots);

/// Raw template and asset text, keyed by file name (e.g. "hpo_system.txt").
const std::map<std::string, std::string_view>& template_assets();

struct ParsingDemo {
    std::string request;
    nlohmann::ordered_json parse;
};

/// The bundled crop-classification example.
ParsingDemo default_parsing_demo();
/// The configuration JSON specification inserted into the parsing prompt.
std::string_view config_format_text();

/// System message from the parsing template; user message is the request
/// prefixed with ###requirement### (unless it already carries the prefix).
std::vector<ChatMessage> render_parsing_prompt(std::string_view request_text, std::span<const ParsingDemo> demos);

std::vector<std::string> default_generation_constraints();
std::vector<std::string> default_generation_examples();

/// Single user message asking for `n` requirements. Constraints are numbered
/// from 1; empty lists drop their section.
std::vector<ChatMessage> render_generation_prompt(int n, std::span<const std::string> constraints,
                                                  std::span<const std::string> examples);

/// Data and model description handed to the HPO conversation.
struct HPOContext {
    std::int64_t num_classes = 0;
    std::string dataset;
    std::string model_name;
    double params_m = 0.0;
    double flops_g = 0.0;
    /// Reference score of the model on its benchmark, on a 0-100 scale.
    double accuracy = 0.0;
    /// Metric reported back to the assistant after each round.
    std::string metric = "accuracy";

    bool operator==(const HPOContext&) const = default;
};

/// {"data": {"num_classes", "dataset"}, "model": {"name", "params(M)",
/// "flops(G)", "accuracy"}}.
nlohmann::ordered_json to_json(const HPOContext& ctx);

/// One completed round: what the assistant said and what training returned.
struct HPOTurn {
    std::string assistant;
    double metric_value = 0.0;
};

/// Conversation for `round` (1-based): the system prompt with the search space,
/// the context as the first user turn, then each prior assistant reply followed
/// by a feedback turn with its metric to four decimals. Throws ContractError
/// unless history.size() == round - 1.
std::vector<ChatMessage> render_hpo_messages(int round, const HPOContext& ctx, std::string_view space_json,
                                             std::span<const HPOTurn> history);

}  // namespace r2m::llm
