#include "camgrid/ingestion/http.hpp"

#include <httplib.h>

#include "camgrid/core/error.hpp"
#include "camgrid/core/url.hpp"

namespace camgrid::ingestion {

namespace {

using SteadyClock = std::chrono::steady_clock;

void configure(httplib::Client& client, std::chrono::milliseconds timeout) {
    const auto sec = static_cast<time_t>(timeout.count() / 1000);
    const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    client.set_follow_location(false);
    client.set_keep_alive(false);
}

Url require_http_url(const std::string& text) {
    auto url = parse_url(text);
    if (!url) throw Error(ErrorCode::invalid_argument, "not an absolute http URL: " + text);
    if (url->scheme != "http") throw Error(ErrorCode::network, "only plain http is supported: " + text);
    return *url;
}

[[noreturn]] void throw_transport(httplib::Error err, const std::string& url) {
    const auto what = httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout) {
        throw Error(ErrorCode::timeout, "connect timed out: " + url, nlohmann::json{{"url", url}});
    }
    throw Error(ErrorCode::network, what + ": " + url, nlohmann::json{{"url", url}, {"cause", what}});
}

bool is_redirect(int status) {
    return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

}  // namespace

HttpResponse http_get(const std::string& url_text, const HttpOptions& options) {
    auto url = require_http_url(url_text);
    const auto deadline = SteadyClock::now() + options.timeout;
    HttpResponse out;
    for (int hop = 0;; ++hop) {
        httplib::Client client(url.origin());
        configure(client, options.timeout);

        out.status = 0;
        out.body.clear();
        out.truncated = false;
        std::string location;
        enum class Abort { none, limit, too_large, timeout, redirect } abort = Abort::none;

        auto res = client.Get(
            url.target, httplib::Headers{},
            [&](const httplib::Response& r) {
                out.status = r.status;
                out.content_type = r.get_header_value("Content-Type");
                if (is_redirect(r.status)) {
                    location = r.get_header_value("Location");
                    abort = Abort::redirect;
                    return false;
                }
                return true;
            },
            [&](const char* data, std::size_t len) {
                if (SteadyClock::now() > deadline) {
                    abort = Abort::timeout;
                    return false;
                }
                if (options.read_limit > 0 && out.body.size() + len >= options.read_limit) {
                    const auto take = options.read_limit - out.body.size();
                    out.body.insert(out.body.end(), data, data + take);
                    out.truncated = true;
                    abort = Abort::limit;
                    return false;
                }
                if (out.body.size() + len > options.body_cap) {
                    abort = Abort::too_large;
                    return false;
                }
                out.body.insert(out.body.end(), data, data + len);
                return true;
            });

        switch (abort) {
            case Abort::limit:
                out.final_url = url.to_string();
                return out;
            case Abort::too_large:
                throw Error(ErrorCode::too_large, "response body exceeds cap: " + url.to_string(),
                            nlohmann::json{{"cap", options.body_cap}});
            case Abort::timeout:
                throw Error(ErrorCode::timeout, "request exceeded its time budget: " + url.to_string());
            case Abort::redirect: {
                if (hop >= options.max_redirects) {
                    throw Error(ErrorCode::network, "too many redirects: " + url_text,
                                nlohmann::json{{"max_redirects", options.max_redirects}});
                }
                auto next = resolve_reference(url, location);
                if (!next || next->scheme != "http") {
                    throw Error(ErrorCode::network, "unusable redirect target '" + location + "'");
                }
                url = *next;
                ++out.redirects;
                continue;
            }
            case Abort::none: break;
        }
        if (!res) {
            if (res.error() == httplib::Error::Read && SteadyClock::now() >= deadline) {
                throw Error(ErrorCode::timeout, "read timed out: " + url.to_string());
            }
            throw_transport(res.error(), url.to_string());
        }
        out.status = res->status;
        out.content_type = res->get_header_value("Content-Type");
        out.final_url = url.to_string();
        return out;
    }
}

void http_stream(const std::string& url_text, const HttpOptions& options,
                 const std::function<bool(const StreamHead&)>& on_head,
                 const std::function<bool(std::span<const std::uint8_t>)>& on_chunk, std::stop_token stop) {
    auto url = require_http_url(url_text);
    for (int hop = 0;; ++hop) {
        httplib::Client client(url.origin());
        configure(client, options.timeout);
        std::stop_callback on_stop(stop, [&client] { client.stop(); });

        std::string location;
        bool redirected = false;
        bool declined = false;
        auto res = client.Get(
            url.target, httplib::Headers{},
            [&](const httplib::Response& r) {
                if (is_redirect(r.status)) {
                    location = r.get_header_value("Location");
                    redirected = true;
                    return false;
                }
                if (!on_head({r.status, r.get_header_value("Content-Type")})) {
                    declined = true;
                    return false;
                }
                return true;
            },
            [&](const char* data, std::size_t len) {
                if (stop.stop_requested()) return false;
                return on_chunk({reinterpret_cast<const std::uint8_t*>(data), len});
            });

        if (redirected) {
            if (hop >= options.max_redirects) throw Error(ErrorCode::network, "too many redirects: " + url_text);
            auto next = resolve_reference(url, location);
            if (!next || next->scheme != "http") {
                throw Error(ErrorCode::network, "unusable redirect target '" + location + "'");
            }
            url = *next;
            continue;
        }
        if (declined || stop.stop_requested()) return;
        if (!res) {
            if (res.error() == httplib::Error::Canceled) return;
            throw_transport(res.error(), url.to_string());
        }
        return;
    }
}

}  // namespace camgrid::ingestion
