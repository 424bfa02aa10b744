#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "camgrid/core/types.hpp"
#include "camgrid/ingestion/http.hpp"

namespace camgrid::registry {

using SnapshotFetcher = std::function<Frame(const StreamEndpoint&)>;
using SteadyClock = std::function<std::chrono::steady_clock::time_point()>;

// Latest-frame cache, one entry per camera. Concurrent misses for the same
// camera share one upstream fetch.
class SnapshotCache {
public:
    explicit SnapshotCache(SnapshotFetcher fetch, std::chrono::milliseconds ttl = std::chrono::seconds(10),
                           SteadyClock clock = [] { return std::chrono::steady_clock::now(); });

    // Fetcher backed by ingestion::fetch_frame.
    static SnapshotFetcher live_fetcher(ingestion::HttpOptions http = {});

    // Throws Error(upstream) with details.cause when the fetch fails.
    Frame get(const std::string& camera_id, const StreamEndpoint& endpoint);

    [[nodiscard]] std::uint64_t upstream_fetches() const noexcept { return fetches_.load(); }
    [[nodiscard]] std::uint64_t hits() const noexcept { return hits_.load(); }
    [[nodiscard]] std::chrono::milliseconds ttl() const noexcept { return ttl_; }

private:
    struct Entry {
        std::mutex mu;
        std::optional<Frame> frame;
        StreamEndpoint endpoint;
        std::chrono::steady_clock::time_point fetched_at{};
    };

    SnapshotFetcher fetch_;
    std::chrono::milliseconds ttl_;
    SteadyClock clock_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
    std::atomic<std::uint64_t> fetches_{0};
    std::atomic<std::uint64_t> hits_{0};
};

}  // namespace camgrid::registry
