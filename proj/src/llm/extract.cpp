// SPDX-License-Identifier: Apache-2.0

#include "r2m/llm/extract.hpp"

#include <vector>

namespace r2m::llm {

namespace {

std::optional<nlohmann::json> try_parse(std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    auto doc = nlohmann::json::parse(t, nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
}

std::vector<std::string_view> fenced_blocks(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        // Skip an info string such as "json" up to the end of the line.
        auto body = text.find('\n', open + 3);
        if (body == std::string_view::npos) break;
        ++body;
        const auto close = text.find("```", body);
        if (close == std::string_view::npos) break;
        out.push_back(text.substr(body, close - body));
        pos = close + 3;
    }
    return out;
}

/// End of the balanced object starting at `start`, honouring string literals.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::nullopt;
}

}  // namespace

nlohmann::json extract_json(std::string_view text, std::optional<std::string_view> marker) {
    std::string_view region = text;
    if (marker) {
        const auto at = text.rfind(*marker);
        if (at == std::string_view::npos) {
            throw ExtractError("marker '" + std::string(*marker) + "' not found", std::string(text));
        }
        region = text.substr(at + marker->size());
    }

    if (auto doc = try_parse(region)) return *doc;
    for (auto block : fenced_blocks(region)) {
        if (auto doc = try_parse(block)) return *doc;
    }
    for (std::size_t i = region.find('{'); i != std::string_view::npos; i = region.find('{', i + 1)) {
        if (auto end = balanced_end(region, i)) {
            if (auto doc = try_parse(region.substr(i, *end - i))) return *doc;
        }
    }
    throw ExtractError("no JSON value found in model output", std::string(text));
}

}  // namespace r2m::llm
