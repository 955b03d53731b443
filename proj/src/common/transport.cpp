// SPDX-License-Identifier: Apache-2.0

#include "r2m/transport.hpp"

#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace r2m::transport {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse http_post_json(const std::string& url, const std::string& body, const Headers& headers,
                            std::chrono::milliseconds timeout) {
    HttpResponse out;
    const SplitUrl parts = split_url(url);
    httplib::Client client(parts.origin);
    if (!client.is_valid()) {
        out.error = "invalid endpoint URL '" + url + "'";
        return out;
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(parts.path, h, body, "application/json");
    if (!res) {
        out.error = "HTTP request failed: " + httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

ProcessResult run_process(const std::string& command, std::string_view input, std::chrono::milliseconds timeout) {
    ProcessResult result;
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) return result;
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        return result;
    }

    const pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
        return result;
    }
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
        setpgid(0, 0);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    setpgid(pid, pid);
    close(in_pipe[0]);
    close(out_pipe[1]);
    fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    // Keep a writer that exits early from killing us with SIGPIPE.
    struct sigaction ignore {};
    struct sigaction previous {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::size_t written = 0;
    int write_fd = in_pipe[1];
    if (input.empty()) {
        close(write_fd);
        write_fd = -1;
    }
    bool out_open = true;
    char buffer[4096];
    while (out_open) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            break;
        }
        pollfd fds[2];
        nfds_t count = 0;
        fds[count++] = {out_pipe[0], POLLIN, 0};
        if (write_fd >= 0) fds[count++] = {write_fd, POLLOUT, 0};
        const auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        if (poll(fds, count, static_cast<int>(std::min<long long>(wait_ms, 1000))) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            const ssize_t n = read(out_pipe[0], buffer, sizeof buffer);
            if (n > 0) {
                result.out.append(buffer, static_cast<std::size_t>(n));
            } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
                out_open = false;
            }
        }
        if (count == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const ssize_t n = write(write_fd, input.data() + written, input.size() - written);
            if (n > 0) written += static_cast<std::size_t>(n);
            if (n < 0 && errno != EAGAIN && errno != EINTR) written = input.size();
            if (written >= input.size()) {
                close(write_fd);
                write_fd = -1;
            }
        }
    }
    if (write_fd >= 0) close(write_fd);
    close(out_pipe[0]);

    if (result.timed_out) kill(-pid, SIGKILL);
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    sigaction(SIGPIPE, &previous, nullptr);
    if (!result.timed_out) {
        result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    }
    return result;
}

}  // namespace r2m::transport
