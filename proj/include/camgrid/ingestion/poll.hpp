#pragma once

#include <cstdint>
#include <functional>
#include <stop_token>
#include <string>

#include <json.hpp>

#include "camgrid/core/types.hpp"
#include "camgrid/ingestion/http.hpp"

namespace camgrid::ingestion {

enum class SinkResult { ok, failed, stop };

// Called serially for one stream, with strictly increasing Frame::seq.
using FrameSink = std::function<SinkResult(Frame&&)>;

struct PollOptions {
    double fps = 1.0;
    double duration_s = 1.0;
    std::string camera_id;
    HttpOptions http{};
    int max_consecutive_failures = 10;
};

struct AcquisitionSummary {
    std::uint64_t frames_delivered = 0;
    // Snapshot mode accounts for every tick: delivered + skipped + failed == expected.
    std::uint64_t ticks_expected = 0;
    std::uint64_t ticks_skipped = 0;
    std::uint64_t ticks_failed = 0;
    // MJPEG mode: parts replaced in the one-slot queue before delivery.
    std::uint64_t frames_dropped = 0;
    std::uint64_t errors = 0;
    double elapsed_s = 0.0;
    double effective_fps = 0.0;
    bool aborted = false;    // consecutive-failure threshold reached
    bool cancelled = false;  // stop requested by the caller or the sink
    std::string last_error;
};

nlohmann::json to_json(const AcquisitionSummary& s);

// Acquires frames for `duration_s` seconds.
//
// snapshot_poll: ticks at a fixed period 1/fps; a tick that comes due while
// a fetch is in flight is skipped, not queued.
// mjpeg_stream: the stream is read continuously into a one-frame mailbox
// (newest wins) and delivered at no more than fps frames/second.
//
// Fetch errors and SinkResult::failed both count toward the consecutive
// failure threshold; reaching it ends acquisition early with aborted = true.
AcquisitionSummary poll_stream(const StreamEndpoint& endpoint, const PollOptions& options, const FrameSink& sink,
                               std::stop_token stop = {});

}  // namespace camgrid::ingestion
