// SPDX-License-Identifier: Apache-2.0
//
// Chat-completion client contract with a scripted backend for offline runs and
// an HTTP backend speaking the chat-completions wire format.

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "r2m/common.hpp"

namespace r2m::llm {

enum class Role { system, user, assistant };

std::string_view to_string(Role r) noexcept;
std::optional<Role> role_from_string(std::string_view s) noexcept;

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

nlohmann::ordered_json to_json(std::span<const ChatMessage> messages);

/// SHA-256 of the compact JSON encoding of `messages`. Scripted backends key
/// replies on it.
std::string messages_digest(std::span<const ChatMessage> messages);

/// Transport or protocol failure while talking to a chat backend.
class ChatError : public Error {
public:
    using Error::Error;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Returns the assistant reply for the conversation so far.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// Replays canned replies. A reply keyed by the conversation digest wins;
/// otherwise the next ordinal reply is used. Running out throws ChatError.
///
/// File format: {"replies": ["...", ...], "by_digest": {"<sha256>": "..."}}
/// with either member optional.
class ScriptedChatClient final : public ChatClient {
public:
    ScriptedChatClient() = default;
    explicit ScriptedChatClient(std::vector<std::string> replies,
                                std::map<std::string, std::string> by_digest = {});
    ScriptedChatClient(ScriptedChatClient&& other) noexcept;

    static ScriptedChatClient parse(std::string_view text);
    static ScriptedChatClient load(const std::filesystem::path& path);

    std::string complete(const std::vector<ChatMessage>& messages) override;

    std::size_t calls() const;
    /// Every conversation seen so far, in call order.
    std::vector<std::vector<ChatMessage>> transcript() const;

private:
    std::vector<std::string> replies_;
    std::map<std::string, std::string> by_digest_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
    std::vector<std::vector<ChatMessage>> seen_;
};

struct HttpClientConfig {
    std::string endpoint;
    std::string model;
    std::string api_key;
    std::chrono::milliseconds timeout{std::chrono::seconds(60)};
    int max_retries = 2;
    int max_in_flight = 4;
    double temperature = 0.0;
    std::chrono::milliseconds backoff{500};
};

/// Reads {"type": "http", "endpoint", "model", "timeout_s", "max_retries",
/// "max_in_flight", "temperature"}. R2M_LLM_ENDPOINT and R2M_LLM_MODEL override
/// the file; the credential comes only from R2M_LLM_API_KEY.
HttpClientConfig http_config_from_json(const nlohmann::json& j,
                                       const std::function<std::optional<std::string>(const char*)>& getenv);

class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(HttpClientConfig config);

    std::string complete(const std::vector<ChatMessage>& messages) override;

    const HttpClientConfig& config() const noexcept { return config_; }

private:
    static constexpr std::ptrdiff_t kMaxInFlight = 64;

    HttpClientConfig config_;
    std::counting_semaphore<kMaxInFlight> slots_;
};

/// Builds a client from a config file: {"type": "http", ...} or a scripted
/// reply file (type "scripted" or no type).
std::unique_ptr<ChatClient> load_client(const std::filesystem::path& path);

}  // namespace r2m::llm
