// SPDX-License-Identifier: Apache-2.0

#include "r2m/llm/prompts.hpp"

#include <fmt/core.h>

#include "r2m/prompt_assets.hpp"
#include "r2m/util.hpp"

namespace r2m::llm {

namespace {

constexpr std::string_view kRequirementTag = "###requirement###";
constexpr std::string_view kParseTag = "###parse###";

std::string_view strip_final_newline(std::string_view s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        if (!trim(line).empty()) out.emplace_back(trim(line));
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return out;
}

std::string with_tag(std::string_view text) {
    const std::string t = trim(text);
    if (t.rfind(kRequirementTag, 0) == 0) return t;
    return std::string(kRequirementTag) + t;
}

}  // namespace

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw ContractError("unterminated template slot");
        std::string_view tag = tmpl.substr(open + 2, close - open - 2);
        pos = close + 2;

        if (!tag.empty() && tag.front() == '#') {
            const std::string name(tag.substr(1));
            const std::string end_tag = "{{/" + name + "}}";
            const auto end = tmpl.find(end_tag, pos);
            if (end == std::string_view::npos) throw ContractError("unterminated template section '" + name + "'");
            auto it = slots.find(name);
            if (it == slots.end()) throw ContractError("unknown template slot '" + name + "'");
            if (!it->second.empty()) out.append(render_template(tmpl.substr(pos, end - pos), slots));
            pos = end + end_tag.size();
            continue;
        }
        auto it = slots.find(std::string(tag));
        if (it == slots.end()) throw ContractError("unknown template slot '" + std::string(tag) + "'");
        out.append(it->second);
    }
    return out;
}

const std::map<std::string, std::string_view>& template_assets() {
    static const std::map<std::string, std::string_view> assets_by_name{
        {"request_parsing.txt", assets::request_parsing},
        {"request_generation.txt", assets::request_generation},
        {"hpo_system.txt", assets::hpo_system},
        {"hpo_feedback.txt", assets::hpo_feedback},
        {"config_schema.json", assets::config_schema},
        {"generation_constraints.txt", assets::generation_constraints},
        {"generation_examples.txt", assets::generation_examples},
        {"parsing_example.json", assets::parsing_example},
    };
    return assets_by_name;
}

ParsingDemo default_parsing_demo() {
    const auto doc = nlohmann::ordered_json::parse(assets::parsing_example);
    return {doc.at("request").get<std::string>(), doc.at("parse")};
}

std::string_view config_format_text() { return strip_final_newline(assets::config_schema); }

std::vector<ChatMessage> render_parsing_prompt(std::string_view request_text, std::span<const ParsingDemo> demos) {
    if (trim(request_text).empty()) throw ContractError("render_parsing_prompt: empty request text");
    std::string examples;
    for (const auto& demo : demos) {
        if (!examples.empty()) examples += '\n';
        examples += with_tag(demo.request);
        examples += '\n';
        examples += kParseTag;
        examples += demo.parse.dump();
    }
    const std::string system = render_template(
        strip_final_newline(assets::request_parsing),
        {{"config_format", std::string(config_format_text())}, {"examples", examples}});
    return {{Role::system, std::string(strip_final_newline(system))}, {Role::user, with_tag(request_text)}};
}

std::vector<std::string> default_generation_constraints() { return lines_of(assets::generation_constraints); }
std::vector<std::string> default_generation_examples() { return lines_of(assets::generation_examples); }

std::vector<ChatMessage> render_generation_prompt(int n, std::span<const std::string> constraints,
                                                  std::span<const std::string> examples) {
    if (n < 1) throw ContractError("render_generation_prompt: n must be at least 1");
    std::string constraint_block;
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        if (i > 0) constraint_block += '\n';
        constraint_block += fmt::format("{}. {}", i + 1, constraints[i]);
    }
    std::string example_block;
    for (const auto& e : examples) {
        if (!example_block.empty()) example_block += '\n';
        example_block += with_tag(e);
    }
    const std::string text = render_template(
        strip_final_newline(assets::request_generation),
        {{"count", std::to_string(n)}, {"constraints", constraint_block}, {"examples", example_block}});
    return {{Role::user, std::string(strip_final_newline(text))}};
}

nlohmann::ordered_json to_json(const HPOContext& ctx) {
    nlohmann::ordered_json j;
    j["data"]["num_classes"] = ctx.num_classes;
    j["data"]["dataset"] = ctx.dataset;
    j["model"]["name"] = ctx.model_name;
    j["model"]["params(M)"] = json_number(ctx.params_m);
    j["model"]["flops(G)"] = json_number(ctx.flops_g);
    j["model"]["accuracy"] = json_number(ctx.accuracy);
    return j;
}

std::vector<ChatMessage> render_hpo_messages(int round, const HPOContext& ctx, std::string_view space_json,
                                             std::span<const HPOTurn> history) {
    if (round < 1) throw ContractError("render_hpo_messages: round must be at least 1");
    if (history.size() != static_cast<std::size_t>(round - 1)) {
        throw ContractError(fmt::format("render_hpo_messages: round {} needs {} prior turn(s), got {}", round,
                                        round - 1, history.size()));
    }
    std::vector<ChatMessage> messages;
    messages.push_back({Role::system, render_template(strip_final_newline(assets::hpo_system),
                                                      {{"search_space", std::string(space_json)}})});
    messages.push_back({Role::user, to_json(ctx).dump(4)});
    const std::string_view feedback = strip_final_newline(assets::hpo_feedback);
    for (const auto& turn : history) {
        messages.push_back({Role::assistant, turn.assistant});
        messages.push_back({Role::user, render_template(feedback, {{"metric", ctx.metric},
                                                                   {"value", fmt::format("{:.4f}", turn.metric_value)}})});
    }
    return messages;
}

}  // namespace r2m::llm
