#include "camgrid/ingestion/snapshot.hpp"

#include <optional>

#include "camgrid/core/error.hpp"
#include "camgrid/ingestion/format.hpp"
#include "camgrid/ingestion/multipart.hpp"

namespace camgrid::ingestion {

Frame make_frame(std::vector<std::uint8_t> bytes, Timestamp received_at) {
    Frame f;
    f.received_at = received_at;
    f.captured_at = received_at;
    f.format = detect_format(bytes);
    if (f.format != FrameFormat::unknown) {
        try {
            const auto d = parse_image_dimensions(bytes, f.format);
            f.width = d.width;
            f.height = d.height;
        } catch (const Error&) {
        }
    }
    f.bytes = std::move(bytes);
    return f;
}

Frame fetch_snapshot_frame(const StreamEndpoint& endpoint, const HttpOptions& options) {
    if (endpoint.mode != RetrievalMode::snapshot_poll) {
        throw Error(ErrorCode::invalid_argument, "fetch_snapshot_frame needs a snapshot_poll endpoint");
    }
    auto res = http_get(endpoint.url, options);
    if (res.status != 200) {
        throw Error(ErrorCode::http_status, "upstream answered HTTP " + std::to_string(res.status),
                    nlohmann::json{{"status", res.status}, {"url", endpoint.url}});
    }
    if (res.body.empty()) throw Error(ErrorCode::unknown_format, "empty snapshot body");
    auto frame = make_frame(std::move(res.body), now_utc());
    if (frame.format == FrameFormat::unknown) {
        throw Error(ErrorCode::unknown_format, "snapshot payload is not a recognised image",
                    nlohmann::json{{"content_type", res.content_type}});
    }
    return frame;
}

Frame fetch_stream_frame(const StreamEndpoint& endpoint, const HttpOptions& options) {
    std::optional<MultipartParserState> parser;
    std::optional<Frame> frame;
    int status = 0;
    std::size_t received = 0;
    std::string content_type;
    const auto deadline = std::chrono::steady_clock::now() + options.timeout;
    bool timed_out = false;
    http_stream(
        endpoint.url, options,
        [&](const StreamHead& head) {
            status = head.status;
            content_type = head.content_type;
            if (status != 200) return false;
            auto boundary = boundary_from_content_type(head.content_type);
            if (!boundary) return false;
            parser = make_multipart_state(*boundary, std::max<std::size_t>(options.body_cap, 1));
            return true;
        },
        [&](std::span<const std::uint8_t> chunk) {
            received += chunk.size();
            auto parts = feed_multipart(*parser, chunk);
            if (!parts.empty()) {
                frame = make_frame(std::move(parts.front().payload), now_utc());
                return false;
            }
            if (std::chrono::steady_clock::now() > deadline) {
                timed_out = true;
                return false;
            }
            return true;
        });
    if (status != 200) {
        throw Error(ErrorCode::http_status, "upstream answered HTTP " + std::to_string(status),
                    nlohmann::json{{"status", status}, {"url", endpoint.url}});
    }
    if (!parser) {
        throw Error(ErrorCode::unknown_format, "stream has no multipart boundary",
                    nlohmann::json{{"content_type", content_type}});
    }
    if (!frame) {
        if (timed_out) throw Error(ErrorCode::timeout, "no complete part within the time budget");
        throw Error(ErrorCode::network, "stream ended before a complete part",
                    nlohmann::json{{"bytes_received", received}});
    }
    if (frame->bytes.empty() || frame->format == FrameFormat::unknown) {
        throw Error(ErrorCode::unknown_format, "stream part is not a recognised image");
    }
    return std::move(*frame);
}

Frame fetch_frame(const StreamEndpoint& endpoint, const HttpOptions& options) {
    return endpoint.mode == RetrievalMode::mjpeg_stream ? fetch_stream_frame(endpoint, options)
                                                        : fetch_snapshot_frame(endpoint, options);
}

}  // namespace camgrid::ingestion
