#pragma once

#include "camgrid/core/types.hpp"
#include "camgrid/ingestion/http.hpp"

namespace camgrid::ingestion {

// One GET of a snapshot_poll endpoint. The frame's format comes from magic
// bytes, dimensions are best-effort, captured_at = received_at and seq is
// left at 0 for the caller to assign. Errors: http_status (non-200), timeout,
// too_large, network, unknown_format.
Frame fetch_snapshot_frame(const StreamEndpoint& endpoint, const HttpOptions& options = {});

// Connects to an mjpeg_stream endpoint and returns its first complete part.
Frame fetch_stream_frame(const StreamEndpoint& endpoint, const HttpOptions& options = {});

// Dispatches on endpoint.mode.
Frame fetch_frame(const StreamEndpoint& endpoint, const HttpOptions& options = {});

// Builds a Frame around a payload that just arrived.
Frame make_frame(std::vector<std::uint8_t> bytes, Timestamp received_at);

}  // namespace camgrid::ingestion
