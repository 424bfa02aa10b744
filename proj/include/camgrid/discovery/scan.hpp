#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "camgrid/discovery/signature.hpp"
#include "camgrid/discovery/verify.hpp"

namespace camgrid::discovery {

struct ScanOptions {
    int port = 80;
    int concurrency_limit = 16;
    double rate_limit = 50.0;  // requests/second across the whole scan
    std::chrono::milliseconds timeout{4000};
    double liveness_delay_s = 5.0;
    bool allow_public = false;
    int min_prefix = 16;         // widest range accepted
    bool reject_static = false;  // image but not live: rejected_static instead of pending_review
};

struct ScanStats {
    std::size_t addresses = 0;
    std::size_t requests = 0;
    std::size_t hits = 0;
    double elapsed_s = 0.0;
};

// Probes every host of `cidr` on options.port, verifies the hits and returns
// candidates sorted by (address, path). Refuses ranges wider than
// /min_prefix and non-private ranges without allow_public (Error validation).
std::vector<DiscoveryCandidate> scan_range(const std::string& cidr, const std::vector<BrandSignature>& signatures,
                                           const ScanOptions& options, ScanStats* stats = nullptr);

// Same pipeline over explicit host names.
std::vector<DiscoveryCandidate> scan_hosts(const std::vector<std::string>& hosts,
                                           const std::vector<BrandSignature>& signatures, const ScanOptions& options,
                                           ScanStats* stats = nullptr);

// One JSON object per line, in the given order.
std::string to_json_lines(const std::vector<DiscoveryCandidate>& candidates);

}  // namespace camgrid::discovery
