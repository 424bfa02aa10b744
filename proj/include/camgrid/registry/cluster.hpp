#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "camgrid/core/types.hpp"
#include "camgrid/registry/filter.hpp"
#include "camgrid/registry/store.hpp"

namespace camgrid::registry {

inline constexpr int kMaxZoom = 20;
// Web-Mercator latitude limit; cells in the top and bottom rows extend to
// the poles so every valid point has a cell.
inline constexpr double kMercatorMaxLat = 85.0511287798066;

struct CellKey {
    int zoom = 0;
    std::uint32_t x = 0;  // column, west to east
    std::uint32_t y = 0;  // row, north to south

    auto operator<=>(const CellKey&) const = default;
};

// Geographic bounds of a cell (lat/lon rectangle).
BBox cell_bounds(const CellKey& cell);
CellKey cell_for(const GeoPoint& p, int zoom);

struct MarkerCluster {
    GeoPoint centroid;  // mean member coordinates
    std::int64_t count = 0;
    std::string representative_id;  // smallest member id
    CellKey cell;
};

nlohmann::json to_json(const MarkerCluster& c);

// One cluster per non-empty cell of the 2^zoom x 2^zoom grid, ordered by
// (x, y). Throws Error(validation) for zoom outside [0, kMaxZoom].
std::vector<MarkerCluster> cluster_markers(const std::vector<LocatedCamera>& cameras, int zoom);

}  // namespace camgrid::registry
