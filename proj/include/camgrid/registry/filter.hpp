#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "camgrid/core/types.hpp"
#include "camgrid/discovery/verify.hpp"

namespace camgrid::registry {

// Longitude/latitude box. min <= max on both axes; a box whose max_lon runs
// past 180 continues east across the antimeridian (170..190 covers 170..180
// and -180..-170). Widths of 360 or more cover every longitude.
struct BBox {
    double min_lon = -180.0;
    double min_lat = -90.0;
    double max_lon = 180.0;
    double max_lat = 90.0;

    static BBox world() { return {}; }

    // Throws Error(validation) for NaN, unordered or out-of-range values.
    void validate() const;

    // Up to two boxes inside [-180, 180] covering the same longitudes.
    [[nodiscard]] std::vector<BBox> split() const;

    [[nodiscard]] bool contains(const GeoPoint& p) const;

    bool operator==(const BBox&) const = default;
};

// "min_lon,min_lat,max_lon,max_lat". Throws Error(validation).
BBox parse_bbox(const std::string& text);
std::string to_string(const BBox& b);

inline constexpr int kDefaultLimit = 100;
inline constexpr int kMaxLimit = 1000;

struct CameraFilter {
    std::optional<BBox> bbox;
    std::optional<std::string> country;
    std::optional<std::string> state;
    std::optional<std::string> city;
    std::optional<discovery::Disposition> disposition;
    int limit = kDefaultLimit;
    int offset = 0;

    // Throws Error(validation).
    void validate() const;
};

struct CameraPage {
    std::vector<CameraRecord> items;
    std::int64_t total = 0;
};

nlohmann::json to_json(const CameraPage& page);

}  // namespace camgrid::registry
