#pragma once

#include "camgrid/core/types.hpp"

namespace camgrid {

// Spherical Earth, IUGG mean radius.
inline constexpr double kEarthRadiusKm = 6371.0088;

// Great-circle distance. Inputs are assumed valid.
double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept;

}  // namespace camgrid
