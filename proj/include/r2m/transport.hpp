// SPDX-License-Identifier: Apache-2.0
//
// Minimal blocking HTTP and subprocess helpers shared by the chat client and
// the external trainer adapter.

#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace r2m::transport {

struct HttpResponse {
    int status = 0;  // 0 when no response was received
    std::string body;
    std::string error;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

/// POSTs `body` as application/json to an http:// or https:// URL.
HttpResponse http_post_json(const std::string& url, const std::string& body, const Headers& headers,
                            std::chrono::milliseconds timeout);

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string out;
};

/// Runs `command` through /bin/sh, feeding `input` on stdin and collecting
/// stdout. The child is killed when `timeout` elapses.
ProcessResult run_process(const std::string& command, std::string_view input, std::chrono::milliseconds timeout);

}  // namespace r2m::transport
