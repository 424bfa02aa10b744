#pragma once

// Random CameraRecord fixtures and a linear-scan filter oracle.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "camgrid/core/types.hpp"
#include "camgrid/registry/filter.hpp"

namespace test_fixture {

inline const std::vector<std::string> kCountries = {"US", "JP", "DE", "BR"};
inline const std::vector<std::string> kStates = {"NY", "IN", "CA", "TX", "Tokyo"};
inline const std::vector<std::string> kCities = {"New York", "West Lafayette", "Los Angeles", "Austin", "Tokyo"};

inline camgrid::CameraRecord random_record(std::mt19937_64& rng, std::size_t n) {
    using namespace camgrid;
    std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0), u(0.0, 1.0);
    CameraRecord r;
    r.endpoint.url = "http://10." + std::to_string(n / 65536 % 256) + "." + std::to_string(n / 256 % 256) + "." +
                     std::to_string(n % 256) + "/cam/" + std::to_string(n) + ".jpg";
    r.endpoint.mode = u(rng) < 0.7 ? RetrievalMode::snapshot_poll : RetrievalMode::mjpeg_stream;
    r.id = camera_id_for(r.endpoint.url, r.endpoint.mode);
    r.kind = u(rng) < 0.5 ? CameraKind::ip_camera : CameraKind::non_ip_camera;
    if (u(rng) < 0.9) {
        // A few points sit exactly on the antimeridian or the poles.
        const double x = u(rng);
        GeoPoint p{lat(rng), lon(rng)};
        if (x < 0.01) p.longitude = 180.0;
        else if (x < 0.02) p.longitude = -180.0;
        else if (x < 0.03) p.latitude = 90.0;
        r.location.point = p;
        r.location.provenance = LocationProvenance::owner_provided;
    }
    auto pick = [&](const std::vector<std::string>& v) -> std::optional<std::string> {
        const auto i = std::uniform_int_distribution<std::size_t>(0, v.size())(rng);
        if (i == v.size()) return std::nullopt;
        return v[i];
    };
    r.location.country = pick(kCountries);
    r.location.state = pick(kStates);
    r.location.city = pick(kCities);
    if (u(rng) < 0.5) {
        r.quality.width = 640;
        r.quality.height = 480;
    }
    if (u(rng) < 0.3) r.quality.estimated_refresh_rate = 0.5 + u(rng) * 10.0;
    r.reliability.uptime_fraction = u(rng);
    r.reliability.last_seen = from_millis(1'600'000'000'000 + static_cast<std::int64_t>(u(rng) * 1e10));
    r.reliability.observation_window = 3600.0;
    if (u(rng) < 0.4) r.tags = {"traffic"};
    if (u(rng) < 0.2) r.tags.insert("weather");
    return r;
}

inline camgrid::registry::BBox random_bbox(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    camgrid::registry::BBox b;
    const double lat0 = -90.0 + 180.0 * u(rng), lat1 = -90.0 + 180.0 * u(rng);
    b.min_lat = std::min(lat0, lat1);
    b.max_lat = std::max(lat0, lat1);
    b.min_lon = -180.0 + 360.0 * u(rng);
    const double width = u(rng) < 0.1 ? 360.0 + u(rng) * 20.0 : 360.0 * u(rng) * u(rng);
    b.max_lon = b.min_lon + width;  // may run past 180
    return b;
}

// Independent bbox test: a longitude is inside when it, or its copy one turn
// east, falls in [min_lon, max_lon].
inline bool oracle_in_bbox(const camgrid::GeoPoint& p, const camgrid::registry::BBox& b) {
    if (p.latitude < b.min_lat || p.latitude > b.max_lat) return false;
    return (p.longitude >= b.min_lon && p.longitude <= b.max_lon) ||
           (p.longitude + 360.0 >= b.min_lon && p.longitude + 360.0 <= b.max_lon);
}

inline bool oracle_matches(const camgrid::CameraRecord& r, const std::string& disposition,
                           const camgrid::registry::CameraFilter& f) {
    if (f.bbox && (!r.location.point || !oracle_in_bbox(*r.location.point, *f.bbox))) return false;
    if (f.country && r.location.country != f.country) return false;
    if (f.state && r.location.state != f.state) return false;
    if (f.city && r.location.city != f.city) return false;
    if (f.disposition && disposition != camgrid::discovery::to_string(*f.disposition)) return false;
    return true;
}

inline camgrid::registry::CameraFilter random_filter(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    camgrid::registry::CameraFilter f;
    if (u(rng) < 0.6) f.bbox = random_bbox(rng);
    if (u(rng) < 0.3) f.country = kCountries[rng() % kCountries.size()];
    if (u(rng) < 0.2) f.state = kStates[rng() % kStates.size()];
    if (u(rng) < 0.3) f.city = kCities[rng() % kCities.size()];
    if (u(rng) < 0.2) f.disposition = u(rng) < 0.5 ? camgrid::discovery::Disposition::accepted
                                                   : camgrid::discovery::Disposition::pending_review;
    f.limit = u(rng) < 0.5 ? camgrid::registry::kMaxLimit : 1 + static_cast<int>(rng() % 200);
    f.offset = u(rng) < 0.5 ? 0 : static_cast<int>(rng() % 300);
    return f;
}

}  // namespace test_fixture
