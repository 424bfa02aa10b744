#include "camgrid/discovery/scan.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "camgrid/core/error.hpp"
#include "camgrid/discovery/cidr.hpp"
#include "camgrid/discovery/probe.hpp"

namespace camgrid::discovery {

namespace {

// Runs fn(0..n-1) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    std::atomic<std::size_t> next{0};
    const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
}

// (numeric address, port, path); non-numeric hosts sort after numeric ones.
auto sort_key(const ProbeHit& h) {
    const auto colon = h.address.rfind(':');
    const auto host = h.address.substr(0, colon);
    const int port = colon == std::string::npos ? 0 : std::atoi(h.address.c_str() + colon + 1);
    std::uint64_t numeric = ~0ULL;
    try {
        numeric = parse_ipv4(host);
    } catch (const Error&) {
    }
    return std::make_tuple(numeric, host, port, h.path);
}

}  // namespace

std::vector<DiscoveryCandidate> scan_hosts(const std::vector<std::string>& hosts,
                                           const std::vector<BrandSignature>& signatures, const ScanOptions& options,
                                           ScanStats* stats) {
    if (!(options.rate_limit > 0.0)) throw Error(ErrorCode::validation, "rate must be positive", {{"field", "rate"}});
    if (options.concurrency_limit < 1) {
        throw Error(ErrorCode::validation, "concurrency must be at least 1", {{"field", "concurrency"}});
    }
    if (options.timeout.count() <= 0) {
        throw Error(ErrorCode::validation, "timeout must be positive", {{"field", "timeout"}});
    }
    if (!(options.liveness_delay_s > 0.0)) {
        throw Error(ErrorCode::validation, "liveness delay must be positive", {{"field", "liveness_delay"}});
    }
    if (signatures.empty()) throw Error(ErrorCode::config, "no brand signatures given", {{"field", "signatures"}});

    const auto t0 = std::chrono::steady_clock::now();
    RateLimiter limiter(options.rate_limit);

    std::mutex mu;
    std::vector<ProbeHit> hits;
    parallel_for(hosts.size(), options.concurrency_limit, [&](std::size_t i) {
        auto found = probe_address(hosts[i] + ":" + std::to_string(options.port), signatures, options.timeout, &limiter);
        std::lock_guard lock(mu);
        for (auto& h : found) hits.push_back(std::move(h));
    });
    std::sort(hits.begin(), hits.end(), [](const ProbeHit& a, const ProbeHit& b) { return sort_key(a) < sort_key(b); });

    ingestion::HttpOptions http;
    http.timeout = options.timeout;
    std::vector<PendingVerification> pending(hits.size());
    parallel_for(hits.size(), options.concurrency_limit,
                 [&](std::size_t i) { pending[i] = begin_verification(hits[i], http, &limiter); });
    std::vector<DiscoveryCandidate> out(hits.size());
    parallel_for(hits.size(), options.concurrency_limit, [&](std::size_t i) {
        out[i].hit = hits[i];
        out[i].verification = finish_verification(std::move(pending[i]), options.liveness_delay_s, http, &limiter);
        out[i].disposition = disposition_for(out[i].verification, options.reject_static);
    });

    if (stats) {
        stats->addresses = hosts.size();
        stats->requests = limiter.grants();
        stats->hits = hits.size();
        stats->elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return out;
}

std::vector<DiscoveryCandidate> scan_range(const std::string& cidr, const std::vector<BrandSignature>& signatures,
                                           const ScanOptions& options, ScanStats* stats) {
    const auto range = parse_cidr(cidr);
    if (range.prefix < options.min_prefix) {
        throw Error(ErrorCode::validation,
                    "range " + range.to_string() + " is wider than /" + std::to_string(options.min_prefix),
                    {{"field", "range"}, {"prefix", range.prefix}, {"min_prefix", options.min_prefix}});
    }
    if (!range.is_private() && !options.allow_public) {
        throw Error(ErrorCode::validation,
                    "refusing to scan non-private range " + range.to_string() + " without --allow-public",
                    {{"field", "range"}, {"range", range.to_string()}});
    }
    return scan_hosts(range.hosts(), signatures, options, stats);
}

std::string to_json_lines(const std::vector<DiscoveryCandidate>& candidates) {
    std::string out;
    for (const auto& c : candidates) {
        out += nlohmann::json(c).dump();
        out += '\n';
    }
    return out;
}

}  // namespace camgrid::discovery
