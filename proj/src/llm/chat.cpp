// SPDX-License-Identifier: Apache-2.0

#include "r2m/llm/chat.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <fmt/core.h>

#include "r2m/transport.hpp"
#include "r2m/util.hpp"

namespace r2m::llm {

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> role_from_string(std::string_view s) noexcept {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    return std::nullopt;
}

nlohmann::ordered_json to_json(std::span<const ChatMessage> messages) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        nlohmann::ordered_json j;
        j["role"] = std::string(to_string(m.role));
        j["content"] = m.content;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::string messages_digest(std::span<const ChatMessage> messages) { return sha256_hex(to_json(messages).dump()); }

ScriptedChatClient::ScriptedChatClient(std::vector<std::string> replies, std::map<std::string, std::string> by_digest)
    : replies_(std::move(replies)), by_digest_(std::move(by_digest)) {}

ScriptedChatClient::ScriptedChatClient(ScriptedChatClient&& other) noexcept
    : replies_(std::move(other.replies_)),
      by_digest_(std::move(other.by_digest_)),
      next_(other.next_),
      seen_(std::move(other.seen_)) {}

ScriptedChatClient ScriptedChatClient::parse(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scripted client file: ") + e.what());
    }
    if (!doc.is_object()) throw ChatError("scripted client file must be a JSON object");
    std::vector<std::string> replies;
    std::map<std::string, std::string> by_digest;
    try {
        if (doc.contains("replies")) replies = doc.at("replies").get<std::vector<std::string>>();
        if (doc.contains("by_digest")) by_digest = doc.at("by_digest").get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ChatError(std::string("scripted client file: ") + e.what());
    }
    return ScriptedChatClient(std::move(replies), std::move(by_digest));
}

ScriptedChatClient ScriptedChatClient::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string ScriptedChatClient::complete(const std::vector<ChatMessage>& messages) {
    std::lock_guard lock(mutex_);
    seen_.push_back(messages);
    if (!by_digest_.empty()) {
        if (auto it = by_digest_.find(messages_digest(messages)); it != by_digest_.end()) return it->second;
    }
    if (next_ >= replies_.size()) {
        throw ChatError(fmt::format("scripted client exhausted after {} replies", replies_.size()));
    }
    return replies_[next_++];
}

std::size_t ScriptedChatClient::calls() const {
    std::lock_guard lock(mutex_);
    return seen_.size();
}

std::vector<std::vector<ChatMessage>> ScriptedChatClient::transcript() const {
    std::lock_guard lock(mutex_);
    return seen_;
}

HttpClientConfig http_config_from_json(const nlohmann::json& j,
                                       const std::function<std::optional<std::string>(const char*)>& getenv) {
    HttpClientConfig c;
    try {
        c.endpoint = j.value("endpoint", "");
        c.model = j.value("model", "");
        if (j.contains("timeout_s")) {
            c.timeout = std::chrono::milliseconds(static_cast<long long>(j.at("timeout_s").get<double>() * 1000.0));
        }
        c.max_retries = j.value("max_retries", c.max_retries);
        c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
        c.temperature = j.value("temperature", c.temperature);
    } catch (const nlohmann::json::exception& e) {
        throw ChatError(std::string("client config: ") + e.what());
    }
    if (auto v = getenv("R2M_LLM_ENDPOINT")) c.endpoint = *v;
    if (auto v = getenv("R2M_LLM_MODEL")) c.model = *v;
    if (auto v = getenv("R2M_LLM_API_KEY")) c.api_key = *v;
    if (c.endpoint.empty()) throw ChatError("client config: no endpoint (set \"endpoint\" or R2M_LLM_ENDPOINT)");
    if (c.model.empty()) throw ChatError("client config: no model (set \"model\" or R2M_LLM_MODEL)");
    c.max_retries = std::max(c.max_retries, 0);
    return c;
}

HttpChatClient::HttpChatClient(HttpClientConfig config)
    : config_(std::move(config)),
      slots_(std::clamp<std::ptrdiff_t>(config_.max_in_flight, 1, kMaxInFlight)) {}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["messages"] = to_json(messages);
    body["temperature"] = config_.temperature;
    const std::string payload = body.dump();
    transport::Headers headers;
    if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);

    std::string last_error;
    auto delay = config_.backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        transport::HttpResponse res;
        slots_.acquire();
        try {
            res = transport::http_post_json(config_.endpoint, payload, headers, config_.timeout);
        } catch (...) {
            slots_.release();
            throw;
        }
        slots_.release();

        if (res.status == 0) {
            last_error = res.error;
            continue;
        }
        if (res.status == 429 || res.status >= 500) {
            last_error = fmt::format("HTTP {}", res.status);
            continue;
        }
        if (res.status < 200 || res.status >= 300) {
            throw ChatError(fmt::format("chat endpoint returned HTTP {}: {}", res.status, res.body.substr(0, 200)));
        }
        try {
            const auto doc = nlohmann::json::parse(res.body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ChatError(std::string("unexpected chat response: ") + e.what());
        }
    }
    throw ChatError(fmt::format("chat request failed after {} attempt(s): {}", config_.max_retries + 1, last_error));
}

std::unique_ptr<ChatClient> load_client(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    const std::string type = doc.is_object() ? doc.value("type", "scripted") : "scripted";
    if (type == "http") {
        auto env = [](const char* name) -> std::optional<std::string> {
            const char* v = std::getenv(name);
            if (v == nullptr || *v == '\0') return std::nullopt;
            return std::string(v);
        };
        return std::make_unique<HttpChatClient>(http_config_from_json(doc, env));
    }
    if (type != "scripted") throw ChatError("unknown client type '" + type + "'");
    return std::make_unique<ScriptedChatClient>(ScriptedChatClient::parse(text));
}

}  // namespace r2m::llm
