#include "camgrid/core/serialize.hpp"

#include "camgrid/core/error.hpp"
#include "camgrid/core/hash.hpp"

namespace camgrid {

using nlohmann::json;

namespace json_detail {

void fail(const std::string& field, const std::string& what) {
    throw Error(ErrorCode::parse, "field '" + field + "': " + what, json{{"field", field}});
}

const json& member(const json& j, const char* name) {
    if (!j.is_object()) fail(name, "enclosing value is not an object");
    auto it = j.find(name);
    if (it == j.end()) fail(name, "missing");
    return *it;
}

std::string get_string(const json& j, const char* name) {
    const auto& v = member(j, name);
    if (!v.is_string()) fail(name, "expected a string");
    return v.get<std::string>();
}

double get_number(const json& j, const char* name) {
    const auto& v = member(j, name);
    if (!v.is_number()) fail(name, "expected a number");
    return v.get<double>();
}

std::int64_t get_integer(const json& j, const char* name) {
    const auto& v = member(j, name);
    if (!v.is_number_integer()) fail(name, "expected an integer");
    return v.get<std::int64_t>();
}

bool get_bool(const json& j, const char* name) {
    const auto& v = member(j, name);
    if (!v.is_boolean()) fail(name, "expected a boolean");
    return v.get<bool>();
}

std::optional<std::string> get_opt_string(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail(name, "expected a string or null");
    return it->get<std::string>();
}

std::optional<double> get_opt_number(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) fail(name, "expected a number or null");
    return it->get<double>();
}

std::optional<int> get_opt_int(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) fail(name, "expected an integer or null");
    return it->get<int>();
}

Timestamp get_timestamp(const json& j, const char* name) {
    const auto text = get_string(j, name);
    auto t = parse_timestamp(text);
    if (!t) fail(name, "expected an ISO-8601 UTC timestamp");
    return *t;
}

}  // namespace json_detail

using namespace json_detail;

void to_json(json& j, const GeoPoint& v) { j = json{{"latitude", v.latitude}, {"longitude", v.longitude}}; }

void from_json(const json& j, GeoPoint& v) {
    v.latitude = get_number(j, "latitude");
    v.longitude = get_number(j, "longitude");
}

void to_json(json& j, const LocationInfo& v) {
    j = json{{"point", v.point ? json(*v.point) : json(nullptr)},
             {"provenance", to_string(v.provenance)},
             {"country", opt(v.country)},
             {"state", opt(v.state)},
             {"city", opt(v.city)}};
}

void from_json(const json& j, LocationInfo& v) {
    auto it = j.find("point");
    if (it != j.end() && !it->is_null()) {
        v.point = it->get<GeoPoint>();
    } else {
        v.point.reset();
    }
    auto prov = parse_provenance(get_string(j, "provenance"));
    if (!prov) fail("provenance", "unknown provenance");
    v.provenance = *prov;
    v.country = get_opt_string(j, "country");
    v.state = get_opt_string(j, "state");
    v.city = get_opt_string(j, "city");
}

void to_json(json& j, const StreamEndpoint& v) {
    j = json{{"url", v.url},
             {"mode", to_string(v.mode)},
             {"declared_format", v.declared_format ? json(to_string(*v.declared_format)) : json(nullptr)}};
}

void from_json(const json& j, StreamEndpoint& v) {
    v.url = get_string(j, "url");
    auto mode = parse_retrieval_mode(get_string(j, "mode"));
    if (!mode) fail("mode", "unknown retrieval mode");
    v.mode = *mode;
    v.declared_format.reset();
    if (auto f = get_opt_string(j, "declared_format")) {
        v.declared_format = parse_media_format(*f);
        if (!v.declared_format) fail("declared_format", "unknown media format");
    }
}

void to_json(json& j, const QualityInfo& v) {
    j = json{{"width", opt(v.width)},
             {"height", opt(v.height)},
             {"estimated_refresh_rate", opt(v.estimated_refresh_rate)}};
}

void from_json(const json& j, QualityInfo& v) {
    v.width = get_opt_int(j, "width");
    v.height = get_opt_int(j, "height");
    v.estimated_refresh_rate = get_opt_number(j, "estimated_refresh_rate");
}

void to_json(json& j, const ReliabilityInfo& v) {
    j = json{{"uptime_fraction", v.uptime_fraction},
             {"last_seen", format_timestamp(v.last_seen)},
             {"observation_window", v.observation_window}};
}

void from_json(const json& j, ReliabilityInfo& v) {
    v.uptime_fraction = get_number(j, "uptime_fraction");
    v.last_seen = get_timestamp(j, "last_seen");
    v.observation_window = get_number(j, "observation_window");
}

void to_json(json& j, const CameraRecord& v) {
    j = json{{"id", v.id},
             {"kind", to_string(v.kind)},
             {"endpoint", v.endpoint},
             {"location", v.location},
             {"quality", v.quality},
             {"reliability", v.reliability},
             {"tags", v.tags}};
}

void from_json(const json& j, CameraRecord& v) {
    v.id = get_string(j, "id");
    auto kind = parse_camera_kind(get_string(j, "kind"));
    if (!kind) fail("kind", "unknown camera kind");
    v.kind = *kind;
    v.endpoint = member(j, "endpoint").get<StreamEndpoint>();
    v.location = member(j, "location").get<LocationInfo>();
    v.quality = member(j, "quality").get<QualityInfo>();
    v.reliability = member(j, "reliability").get<ReliabilityInfo>();
    v.tags.clear();
    if (auto it = j.find("tags"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) fail("tags", "expected an array of strings");
        for (const auto& t : *it) {
            if (!t.is_string()) fail("tags", "expected an array of strings");
            v.tags.insert(t.get<std::string>());
        }
    }
}

void to_json(json& j, const Frame& v) {
    j = json{{"camera_id", v.camera_id},
             {"seq", v.seq},
             {"captured_at", format_timestamp(v.captured_at)},
             {"received_at", format_timestamp(v.received_at)},
             {"format", to_string(v.format)},
             {"width", opt(v.width)},
             {"height", opt(v.height)},
             {"bytes", base64_encode(v.bytes)}};
}

void from_json(const json& j, Frame& v) {
    v.camera_id = get_string(j, "camera_id");
    const auto seq = get_integer(j, "seq");
    if (seq < 0) fail("seq", "must be non-negative");
    v.seq = static_cast<std::uint64_t>(seq);
    v.captured_at = get_timestamp(j, "captured_at");
    v.received_at = get_timestamp(j, "received_at");
    auto fmt = parse_frame_format(get_string(j, "format"));
    if (!fmt) fail("format", "unknown frame format");
    v.format = *fmt;
    v.width = get_opt_int(j, "width");
    v.height = get_opt_int(j, "height");
    const auto raw = base64_decode(get_string(j, "bytes"));
    v.bytes.assign(raw.begin(), raw.end());
}

void to_json(json& j, const Violation& v) {
    j = json{{"code", v.code}, {"field", v.field}, {"message", v.message}};
}

std::string canonical_json(const CameraRecord& rec) { return json(rec).dump(); }

CameraRecord parse_camera_record(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse, std::string("malformed JSON: ") + e.what());
    }
    return j.get<CameraRecord>();
}

json violations_json(const std::vector<Violation>& violations) {
    json arr = json::array();
    for (const auto& v : violations) arr.push_back(v);
    return arr;
}

}  // namespace camgrid
