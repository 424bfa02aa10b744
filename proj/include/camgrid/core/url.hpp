#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace camgrid {

struct Url {
    std::string scheme;  // lowercase, "http" or "https"
    std::string host;
    int port = 80;
    std::string target = "/";  // path plus query

    // "scheme://host:port", the part cpp-httplib wants for a client.
    [[nodiscard]] std::string origin() const;
    [[nodiscard]] std::string to_string() const;
};

// Absolute http(s) URLs only; relative references and other schemes yield nullopt.
std::optional<Url> parse_url(std::string_view text);

// Resolves a Location header against the URL that produced it.
std::optional<Url> resolve_reference(const Url& base, std::string_view reference);

}  // namespace camgrid
