#include "camgrid/registry/snapshot_cache.hpp"

#include "camgrid/core/error.hpp"
#include "camgrid/ingestion/snapshot.hpp"

namespace camgrid::registry {

SnapshotCache::SnapshotCache(SnapshotFetcher fetch, std::chrono::milliseconds ttl, SteadyClock clock)
    : fetch_(std::move(fetch)), ttl_(ttl), clock_(std::move(clock)) {}

SnapshotFetcher SnapshotCache::live_fetcher(ingestion::HttpOptions http) {
    return [http](const StreamEndpoint& e) { return ingestion::fetch_frame(e, http); };
}

Frame SnapshotCache::get(const std::string& camera_id, const StreamEndpoint& endpoint) {
    std::shared_ptr<Entry> entry;
    {
        std::lock_guard lock(mu_);
        auto& slot = entries_[camera_id];
        if (!slot) slot = std::make_shared<Entry>();
        entry = slot;
    }
    std::lock_guard lock(entry->mu);
    const auto now = clock_();
    if (entry->frame && entry->endpoint == endpoint && now - entry->fetched_at < ttl_) {
        ++hits_;
        return *entry->frame;
    }
    ++fetches_;
    try {
        auto frame = fetch_(endpoint);
        frame.camera_id = camera_id;
        entry->frame = frame;
        entry->endpoint = endpoint;
        entry->fetched_at = now;
        return frame;
    } catch (const Error& e) {
        throw Error(ErrorCode::upstream, "snapshot fetch failed for " + camera_id + ": " + e.what(),
                    {{"camera_id", camera_id},
                     {"cause", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"details", e.details()}}}});
    } catch (const std::exception& e) {
        throw Error(ErrorCode::upstream, "snapshot fetch failed for " + camera_id + ": " + e.what(),
                    {{"camera_id", camera_id}, {"cause", {{"code", "internal"}, {"message", e.what()}}}});
    }
}

}  // namespace camgrid::registry
