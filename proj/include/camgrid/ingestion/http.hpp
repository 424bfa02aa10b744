#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

namespace camgrid::ingestion {

inline constexpr std::size_t kDefaultBodyCap = 8u << 20;

struct HttpOptions {
    std::chrono::milliseconds timeout{4000};  // connect, per-read, and overall wall-clock budget
    int max_redirects = 3;
    std::size_t body_cap = kDefaultBodyCap;
    // When non-zero, stop reading after this many body bytes and return what
    // arrived (marked truncated). Used for probes and stream sniffing.
    std::size_t read_limit = 0;
};

struct HttpResponse {
    int status = 0;
    std::string content_type;
    std::string final_url;
    int redirects = 0;
    bool truncated = false;
    std::vector<std::uint8_t> body;
};

// Plain HTTP GET with manual redirect handling. Non-2xx statuses are returned,
// not thrown. Throws Error with code network (connect/read failures, https,
// too many redirects), timeout, or too_large (body above body_cap).
HttpResponse http_get(const std::string& url, const HttpOptions& options = {});

struct StreamHead {
    int status = 0;
    std::string content_type;
};

// Streams a response body. `on_head` sees the status line first and may
// return false to skip the body; `on_chunk` returning false or a stop
// request ends the transfer. The overall timeout does not apply here; only
// connect and per-read timeouts do.
void http_stream(const std::string& url, const HttpOptions& options,
                 const std::function<bool(const StreamHead&)>& on_head,
                 const std::function<bool(std::span<const std::uint8_t>)>& on_chunk, std::stop_token stop = {});

}  // namespace camgrid::ingestion
