#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "camgrid/discovery/rate_limiter.hpp"
#include "camgrid/discovery/signature.hpp"

namespace camgrid::discovery {

inline constexpr std::size_t kProbePrefixBytes = 64;

struct ProbeHit {
    std::string address;  // host:port
    std::string path;
    std::string brand;
    int status_code = 0;
    std::string content_type;
    std::vector<std::uint8_t> first_bytes;  // at most 64

    bool operator==(const ProbeHit&) const = default;
};

void to_json(nlohmann::json& j, const ProbeHit& h);

// One GET per (address, path) in signature order until the brand's first
// hit. A hit needs status 200 and a matching content type prefix after at
// most three redirects. Transport failures are non-hits. A limiter, when
// given, is acquired before every request.
std::vector<ProbeHit> probe_address(const std::string& address, const std::vector<BrandSignature>& signatures,
                                    std::chrono::milliseconds timeout, RateLimiter* limiter = nullptr);

}  // namespace camgrid::discovery
