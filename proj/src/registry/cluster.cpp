#include "camgrid/registry/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "camgrid/core/error.hpp"

namespace camgrid::registry {

namespace {

void check_zoom(int zoom) {
    if (zoom < 0 || zoom > kMaxZoom) {
        throw Error(ErrorCode::validation, "zoom must be in [0, " + std::to_string(kMaxZoom) + "]",
                    {{"field", "zoom"}, {"value", zoom}});
    }
}

double row_to_lat(double y, double n) {
    return std::atan(std::sinh(std::numbers::pi * (1.0 - 2.0 * y / n))) * 180.0 / std::numbers::pi;
}

}  // namespace

CellKey cell_for(const GeoPoint& p, int zoom) {
    check_zoom(zoom);
    const double n = std::ldexp(1.0, zoom);
    const auto last = static_cast<std::uint32_t>(n) - 1;
    const double lat = std::clamp(p.latitude, -kMercatorMaxLat, kMercatorMaxLat) * std::numbers::pi / 180.0;
    const double fx = (p.longitude + 180.0) / 360.0 * n;
    const double fy = (1.0 - std::asinh(std::tan(lat)) / std::numbers::pi) / 2.0 * n;
    auto idx = [&](double f) { return static_cast<std::uint32_t>(std::clamp(std::floor(f), 0.0, double(last))); };
    return {zoom, idx(fx), idx(fy)};
}

BBox cell_bounds(const CellKey& cell) {
    check_zoom(cell.zoom);
    const double n = std::ldexp(1.0, cell.zoom);
    const auto last = static_cast<std::uint32_t>(n) - 1;
    BBox b;
    b.min_lon = cell.x / n * 360.0 - 180.0;
    b.max_lon = (cell.x + 1) / n * 360.0 - 180.0;
    b.max_lat = cell.y == 0 ? 90.0 : row_to_lat(cell.y, n);
    b.min_lat = cell.y == last ? -90.0 : row_to_lat(cell.y + 1, n);
    return b;
}

nlohmann::json to_json(const MarkerCluster& c) {
    return {{"centroid", {{"latitude", c.centroid.latitude}, {"longitude", c.centroid.longitude}}},
            {"count", c.count},
            {"representative_id", c.representative_id},
            {"cell", {{"zoom", c.cell.zoom}, {"x", c.cell.x}, {"y", c.cell.y}}}};
}

std::vector<MarkerCluster> cluster_markers(const std::vector<LocatedCamera>& cameras, int zoom) {
    check_zoom(zoom);
    struct Acc {
        double lat = 0.0, lon = 0.0;
        std::int64_t count = 0;
        const std::string* rep = nullptr;
        CellKey cell;
    };
    std::unordered_map<std::uint64_t, Acc> cells;
    cells.reserve(std::min<std::size_t>(cameras.size(), 1u << 16));
    for (const auto& c : cameras) {
        const auto key = cell_for(c.point, zoom);
        auto& acc = cells[(std::uint64_t{key.x} << 32) | key.y];
        acc.cell = key;
        acc.lat += c.point.latitude;
        acc.lon += c.point.longitude;
        ++acc.count;
        if (!acc.rep || c.id < *acc.rep) acc.rep = &c.id;
    }
    std::vector<MarkerCluster> out;
    out.reserve(cells.size());
    for (const auto& [k, acc] : cells) {
        const double n = static_cast<double>(acc.count);
        MarkerCluster m{{acc.lat / n, acc.lon / n}, acc.count, *acc.rep, acc.cell};
        // The mean of points inside a rectangle is inside it; clamp away
        // floating-point drift at the edges.
        const auto b = cell_bounds(acc.cell);
        m.centroid.latitude = std::clamp(m.centroid.latitude, b.min_lat, b.max_lat);
        m.centroid.longitude = std::clamp(m.centroid.longitude, b.min_lon, b.max_lon);
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(), [](const MarkerCluster& a, const MarkerCluster& b) { return a.cell < b.cell; });
    return out;
}

}  // namespace camgrid::registry
