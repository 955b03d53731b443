// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "r2m/common.hpp"

namespace r2m::llm {

/// No JSON value could be recovered from model output.
class ExtractError : public Error {
public:
    ExtractError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// Recovers a JSON value from free-form model output. With a marker, only the
/// text after its last occurrence is considered (a missing marker is an
/// error). Within that text the whole trimmed string is tried first, then each
/// fenced code block, then every balanced top-level {...} block in order.
nlohmann::json extract_json(std::string_view text, std::optional<std::string_view> marker = std::nullopt);

}  // namespace r2m::llm
