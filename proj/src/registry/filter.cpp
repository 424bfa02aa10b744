#include "camgrid/registry/filter.hpp"

#include <cmath>
#include <sstream>

#include "camgrid/core/error.hpp"
#include "camgrid/core/serialize.hpp"

namespace camgrid::registry {

namespace {

[[noreturn]] void bad_bbox(const std::string& why, const nlohmann::json& details = nlohmann::json::object()) {
    auto d = details;
    d["field"] = "bbox";
    throw Error(ErrorCode::validation, "invalid bbox: " + why, d);
}

}  // namespace

void BBox::validate() const {
    for (double v : {min_lon, min_lat, max_lon, max_lat}) {
        if (!std::isfinite(v)) bad_bbox("non-finite coordinate");
    }
    if (min_lat < -90.0 || max_lat > 90.0) bad_bbox("latitude outside [-90, 90]");
    if (min_lat > max_lat) bad_bbox("min_lat > max_lat");
    if (min_lon < -180.0 || min_lon > 180.0) bad_bbox("min_lon outside [-180, 180]");
    if (min_lon > max_lon) bad_bbox("min_lon > max_lon");
    if (max_lon > 540.0) bad_bbox("max_lon above 540");
}

std::vector<BBox> BBox::split() const {
    if (max_lon - min_lon >= 360.0) return {{-180.0, min_lat, 180.0, max_lat}};
    if (max_lon <= 180.0) return {*this};
    return {{min_lon, min_lat, 180.0, max_lat}, {-180.0, min_lat, max_lon - 360.0, max_lat}};
}

bool BBox::contains(const GeoPoint& p) const {
    if (p.latitude < min_lat || p.latitude > max_lat) return false;
    for (const auto& b : split()) {
        if (p.longitude >= b.min_lon && p.longitude <= b.max_lon) return true;
    }
    return false;
}

BBox parse_bbox(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) bad_bbox("not a number: " + item);
        } catch (const std::logic_error&) {
            bad_bbox("not a number: " + item);
        }
    }
    if (v.size() != 4 || (!text.empty() && text.back() == ',')) {
        bad_bbox("expected min_lon,min_lat,max_lon,max_lat", {{"value", text}});
    }
    BBox b{v[0], v[1], v[2], v[3]};
    b.validate();
    return b;
}

std::string to_string(const BBox& b) {
    std::ostringstream os;
    os.precision(17);
    os << b.min_lon << ',' << b.min_lat << ',' << b.max_lon << ',' << b.max_lat;
    return os.str();
}

void CameraFilter::validate() const {
    if (bbox) bbox->validate();
    if (limit < 1 || limit > kMaxLimit) {
        throw Error(ErrorCode::validation, "limit must be in [1, " + std::to_string(kMaxLimit) + "]",
                    {{"field", "limit"}, {"value", limit}});
    }
    if (offset < 0) throw Error(ErrorCode::validation, "offset must be >= 0", {{"field", "offset"}, {"value", offset}});
}

nlohmann::json to_json(const CameraPage& page) {
    auto items = nlohmann::json::array();
    for (const auto& r : page.items) items.push_back(r);
    return {{"items", items}, {"total", page.total}};
}

}  // namespace camgrid::registry
