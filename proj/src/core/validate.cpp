#include "camgrid/core/validate.hpp"

#include <cmath>

#include "camgrid/core/url.hpp"

namespace camgrid {

std::vector<Violation> validate_camera_record(const CameraRecord& rec, Timestamp now) {
    std::vector<Violation> out;
    auto add = [&](std::string code, std::string field, std::string message) {
        out.push_back({std::move(code), std::move(field), std::move(message)});
    };

    if (rec.id.empty()) add("empty_id", "id", "camera id must be non-empty");

    if (!parse_url(rec.endpoint.url)) add("invalid_url", "endpoint.url", "url must be an absolute http(s) URL");
    if (rec.endpoint.mode == RetrievalMode::mjpeg_stream && rec.endpoint.declared_format &&
        *rec.endpoint.declared_format != MediaFormat::mjpeg) {
        add("format_mode_mismatch", "endpoint.declared_format", "mjpeg_stream endpoints must declare mjpeg or nothing");
    }

    const auto& loc = rec.location;
    if (loc.point) {
        const auto& p = *loc.point;
        if (!std::isfinite(p.latitude) || !std::isfinite(p.longitude)) {
            add("non_finite_coordinate", "location.point", "coordinates must be finite");
        } else {
            if (p.latitude < -90.0 || p.latitude > 90.0) {
                add("lat_out_of_range", "location.point.latitude", "latitude must lie in [-90, 90]");
            }
            if (p.longitude < -180.0 || p.longitude > 180.0) {
                add("lon_out_of_range", "location.point.longitude", "longitude must lie in [-180, 180]");
            }
        }
    } else if (loc.provenance != LocationProvenance::unknown) {
        add("missing_point", "location.point", "a point is required unless provenance is unknown");
    }

    const auto& q = rec.quality;
    if (q.width.has_value() != q.height.has_value()) {
        add("dims_incomplete", "quality", "width and height must be given together");
    } else if (q.width && (*q.width <= 0 || *q.height <= 0)) {
        add("non_positive_dims", "quality", "width and height must be positive");
    }
    if (q.estimated_refresh_rate && !(*q.estimated_refresh_rate > 0.0 && std::isfinite(*q.estimated_refresh_rate))) {
        add("non_positive_refresh_rate", "quality.estimated_refresh_rate", "refresh rate must be positive");
    }

    const auto& r = rec.reliability;
    if (!(r.uptime_fraction >= 0.0 && r.uptime_fraction <= 1.0)) {
        add("uptime_out_of_range", "reliability.uptime_fraction", "uptime fraction must lie in [0, 1]");
    }
    if (r.last_seen > now) add("last_seen_in_future", "reliability.last_seen", "last_seen must not be after now");
    if (!(r.observation_window >= 0.0 && std::isfinite(r.observation_window))) {
        add("negative_observation_window", "reliability.observation_window", "observation window must be >= 0");
    }
    return out;
}

}  // namespace camgrid
