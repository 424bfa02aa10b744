#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "camgrid/core/types.hpp"
#include "camgrid/discovery/verify.hpp"
#include "camgrid/ingestion/http.hpp"

namespace camgrid::discovery {

struct RefreshEstimate {
    bool is_static = false;
    std::optional<double> fps;
    int samples = 0;  // successful fetches or frames
    int changes = 0;
    std::vector<FetchEvidence> evidence;
};

void to_json(nlohmann::json& j, const RefreshEstimate& e);

// Snapshot sampling goes through these ports so long-period sources can be
// simulated. `clock` is seconds on any monotonic scale.
struct RefreshPorts {
    std::function<std::vector<std::uint8_t>(const StreamEndpoint&)> fetch;
    std::function<double()> clock;
    std::function<void(double)> sleep_for;
};

RefreshPorts live_refresh_ports(const ingestion::HttpOptions& http = {});

// snapshot_poll: `samples` fetches poll_interval_s apart; the rate is one
// over the median interval between content changes, or one over the
// observed span when only one change was seen; no change at all means
// static. mjpeg_stream: one over the median part inter-arrival time over
// `samples` parts. Fewer than two successful fetches throws
// Error(estimation) with the partial evidence in details.
RefreshEstimate estimate_refresh_rate(const StreamEndpoint& endpoint, int samples, double poll_interval_s,
                                      const RefreshPorts& ports);
RefreshEstimate estimate_refresh_rate(const StreamEndpoint& endpoint, int samples = 5, double poll_interval_s = 1.0,
                                      const ingestion::HttpOptions& http = {});

}  // namespace camgrid::discovery
