#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camgrid/core/time.hpp"

namespace camgrid {

// ip_camera: the endpoint host is the camera itself. non_ip_camera: a proxy or
// an organisation's web server fronts the data, so the host address says
// little about where the camera is.
enum class CameraKind { ip_camera, non_ip_camera };

struct GeoPoint {
    double latitude = 0.0;   // degrees, [-90, 90]
    double longitude = 0.0;  // degrees, [-180, 180]

    [[nodiscard]] bool is_valid() const noexcept;
    bool operator==(const GeoPoint&) const = default;
};

enum class LocationProvenance { owner_provided, geocoded_address, ip_derived, unknown };

struct LocationInfo {
    std::optional<GeoPoint> point;  // may be absent only when provenance is unknown
    LocationProvenance provenance = LocationProvenance::unknown;
    std::optional<std::string> country;
    std::optional<std::string> state;
    std::optional<std::string> city;

    bool operator==(const LocationInfo&) const = default;
};

enum class RetrievalMode { snapshot_poll, mjpeg_stream };

enum class MediaFormat { jpeg, png, mjpeg, mp4, flash };

struct StreamEndpoint {
    std::string url;
    RetrievalMode mode = RetrievalMode::snapshot_poll;
    std::optional<MediaFormat> declared_format;

    bool operator==(const StreamEndpoint&) const = default;
};

struct QualityInfo {
    std::optional<int> width;
    std::optional<int> height;
    std::optional<double> estimated_refresh_rate;  // frames/second

    bool operator==(const QualityInfo&) const = default;
};

struct ReliabilityInfo {
    double uptime_fraction = 0.0;
    Timestamp last_seen{};
    double observation_window = 0.0;  // seconds

    bool operator==(const ReliabilityInfo&) const = default;
};

struct CameraRecord {
    std::string id;
    CameraKind kind = CameraKind::ip_camera;
    StreamEndpoint endpoint;
    LocationInfo location;
    QualityInfo quality;
    ReliabilityInfo reliability;
    std::set<std::string> tags;

    bool operator==(const CameraRecord&) const = default;
};

// Registration id: content hash of (url, mode), so re-discovering the same
// endpoint lands on the same record.
std::string camera_id_for(std::string_view url, RetrievalMode mode);

// pgm is accepted alongside the two web formats because the analysis pipeline
// has a built-in decoder for it.
enum class FrameFormat { jpeg, png, pgm, unknown };

struct Frame {
    std::string camera_id;
    std::uint64_t seq = 0;
    Timestamp captured_at{};
    Timestamp received_at{};
    FrameFormat format = FrameFormat::unknown;
    std::optional<int> width;
    std::optional<int> height;
    std::vector<std::uint8_t> bytes;

    [[nodiscard]] std::span<const std::uint8_t> payload() const noexcept { return bytes; }
    bool operator==(const Frame&) const = default;
};

std::string_view to_string(CameraKind v);
std::string_view to_string(LocationProvenance v);
std::string_view to_string(RetrievalMode v);
std::string_view to_string(MediaFormat v);
std::string_view to_string(FrameFormat v);

std::optional<CameraKind> parse_camera_kind(std::string_view s);
std::optional<LocationProvenance> parse_provenance(std::string_view s);
std::optional<RetrievalMode> parse_retrieval_mode(std::string_view s);
std::optional<MediaFormat> parse_media_format(std::string_view s);
std::optional<FrameFormat> parse_frame_format(std::string_view s);

}  // namespace camgrid
