#include "camgrid/core/url.hpp"

#include <algorithm>
#include <charconv>

namespace camgrid {

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

std::string Url::to_string() const {
    const bool default_port = (scheme == "http" && port == 80) || (scheme == "https" && port == 443);
    return scheme + "://" + host + (default_port ? "" : ":" + std::to_string(port)) + target;
}

std::optional<Url> parse_url(std::string_view text) {
    const auto sep = text.find("://");
    if (sep == std::string_view::npos || sep == 0) return std::nullopt;
    Url url;
    url.scheme = std::string(text.substr(0, sep));
    std::transform(url.scheme.begin(), url.scheme.end(), url.scheme.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (url.scheme == "http") {
        url.port = 80;
    } else if (url.scheme == "https") {
        url.port = 443;
    } else {
        return std::nullopt;
    }
    auto rest = text.substr(sep + 3);
    const auto path_pos = rest.find_first_of("/?#");
    auto authority = rest.substr(0, path_pos);
    if (authority.empty() || authority.find('@') != std::string_view::npos) return std::nullopt;
    const auto colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.front() != '[') {
        auto port_text = authority.substr(colon + 1);
        int port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 || port > 65535) {
            return std::nullopt;
        }
        url.port = port;
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) return std::nullopt;
    for (char c : authority) {
        if (c == ' ' || c == '/' || c == '\\') return std::nullopt;
    }
    url.host = std::string(authority);
    if (path_pos == std::string_view::npos) {
        url.target = "/";
    } else {
        auto target = rest.substr(path_pos);
        const auto hash = target.find('#');
        target = target.substr(0, hash);
        url.target = target.empty() || target.front() != '/' ? "/" + std::string(target) : std::string(target);
    }
    return url;
}

std::optional<Url> resolve_reference(const Url& base, std::string_view reference) {
    if (reference.find("://") != std::string_view::npos) return parse_url(reference);
    if (reference.empty()) return std::nullopt;
    Url out = base;
    if (reference.front() == '/') {
        out.target = std::string(reference);
    } else {
        auto path = base.target.substr(0, base.target.find('?'));
        path = path.substr(0, path.rfind('/') + 1);
        out.target = path + std::string(reference);
    }
    return out;
}

}  // namespace camgrid
