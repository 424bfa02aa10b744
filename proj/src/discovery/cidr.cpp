#include "camgrid/discovery/cidr.hpp"

#include <arpa/inet.h>

#include "camgrid/core/error.hpp"

namespace camgrid::discovery {

namespace {

std::uint32_t mask_for(int prefix) {
    return prefix == 0 ? 0u : ~0u << (32 - prefix);
}

struct Block {
    std::uint32_t base;
    int prefix;
};

constexpr Block kPrivate[] = {
    {0x0A000000u, 8},   // 10/8
    {0xAC100000u, 12},  // 172.16/12
    {0xC0A80000u, 16},  // 192.168/16
    {0x7F000000u, 8},   // 127/8
    {0xA9FE0000u, 16},  // 169.254/16
};

}  // namespace

std::uint32_t parse_ipv4(const std::string& text) {
    in_addr addr{};
    if (inet_pton(AF_INET, text.c_str(), &addr) != 1) {
        throw Error(ErrorCode::validation, "not an IPv4 address: " + text, {{"field", "range"}, {"value", text}});
    }
    return ntohl(addr.s_addr);
}

std::string format_ipv4(std::uint32_t address) {
    in_addr addr{};
    addr.s_addr = htonl(address);
    char buf[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &addr, buf, sizeof buf);
    return buf;
}

Ipv4Range parse_cidr(const std::string& text) {
    Ipv4Range r;
    const auto slash = text.find('/');
    r.prefix = 32;
    if (slash != std::string::npos) {
        const auto p = text.substr(slash + 1);
        if (p.empty() || p.size() > 2 || p.find_first_not_of("0123456789") != std::string::npos) {
            throw Error(ErrorCode::validation, "bad prefix length in " + text, {{"field", "range"}, {"value", text}});
        }
        r.prefix = std::stoi(p);
        if (r.prefix > 32) {
            throw Error(ErrorCode::validation, "prefix length above 32 in " + text,
                        {{"field", "range"}, {"value", text}});
        }
    }
    r.network = parse_ipv4(text.substr(0, slash)) & mask_for(r.prefix);
    return r;
}

std::uint64_t Ipv4Range::host_count() const {
    const std::uint64_t all = 1ULL << (32 - prefix);
    return prefix < 31 ? all - 2 : all;
}

std::vector<std::string> Ipv4Range::hosts() const {
    std::vector<std::string> out;
    const std::uint64_t all = 1ULL << (32 - prefix);
    const std::uint64_t first = prefix < 31 ? 1 : 0;
    const std::uint64_t last = prefix < 31 ? all - 1 : all;
    out.reserve(static_cast<std::size_t>(last - first));
    for (std::uint64_t i = first; i < last; ++i) out.push_back(format_ipv4(network + static_cast<std::uint32_t>(i)));
    return out;
}

bool Ipv4Range::is_private() const {
    for (const auto& b : kPrivate) {
        if (prefix >= b.prefix && (network & mask_for(b.prefix)) == b.base) return true;
    }
    return false;
}

std::string Ipv4Range::to_string() const {
    return format_ipv4(network) + "/" + std::to_string(prefix);
}

}  // namespace camgrid::discovery
