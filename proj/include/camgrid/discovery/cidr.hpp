#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace camgrid::discovery {

struct Ipv4Range {
    std::uint32_t network = 0;
    int prefix = 32;

    // Usable host addresses in ascending order. Network and broadcast
    // addresses are left out for prefixes shorter than /31.
    [[nodiscard]] std::vector<std::string> hosts() const;
    [[nodiscard]] std::uint64_t host_count() const;
    // Entirely inside 10/8, 172.16/12, 192.168/16, 127/8 or 169.254/16.
    [[nodiscard]] bool is_private() const;
    [[nodiscard]] std::string to_string() const;
};

// "a.b.c.d/n" or a bare address (/32). Host bits are cleared. Throws
// Error(validation).
Ipv4Range parse_cidr(const std::string& text);

std::uint32_t parse_ipv4(const std::string& text);
std::string format_ipv4(std::uint32_t address);

}  // namespace camgrid::discovery
