#include "camgrid/core/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>


namespace camgrid {

bool GeoPoint::is_valid() const noexcept {
    return std::isfinite(latitude) && std::isfinite(longitude) && latitude >= -90.0 && latitude <= 90.0 &&
           longitude >= -180.0 && longitude <= 180.0;
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept {
    constexpr double deg = std::numbers::pi / 180.0;
    const double dlat = (b.latitude - a.latitude) * deg;
    const double dlon = (b.longitude - a.longitude) * deg;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    double h = s1 * s1 + std::cos(a.latitude * deg) * std::cos(b.latitude * deg) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

}  // namespace camgrid
