#pragma once

#include <string>

#include <json.hpp>

#include "camgrid/core/types.hpp"
#include "camgrid/core/validate.hpp"

// Canonical JSON shapes. Field names are snake_case and match the type
// definitions; optional members are written as null. nlohmann::json keeps
// object keys sorted, so dump() of these values is byte-stable.
//
// Parsing is strict: a missing member, wrong type or unknown enum name throws
// camgrid::Error(ErrorCode::parse) naming the offending field.

namespace camgrid {

void to_json(nlohmann::json& j, const GeoPoint& v);
void from_json(const nlohmann::json& j, GeoPoint& v);
void to_json(nlohmann::json& j, const LocationInfo& v);
void from_json(const nlohmann::json& j, LocationInfo& v);
void to_json(nlohmann::json& j, const StreamEndpoint& v);
void from_json(const nlohmann::json& j, StreamEndpoint& v);
void to_json(nlohmann::json& j, const QualityInfo& v);
void from_json(const nlohmann::json& j, QualityInfo& v);
void to_json(nlohmann::json& j, const ReliabilityInfo& v);
void from_json(const nlohmann::json& j, ReliabilityInfo& v);
void to_json(nlohmann::json& j, const CameraRecord& v);
void from_json(const nlohmann::json& j, CameraRecord& v);
void to_json(nlohmann::json& j, const Frame& v);
void from_json(const nlohmann::json& j, Frame& v);
void to_json(nlohmann::json& j, const Violation& v);

std::string canonical_json(const CameraRecord& rec);
CameraRecord parse_camera_record(const std::string& text);

nlohmann::json violations_json(const std::vector<Violation>& violations);

namespace json_detail {

// Helpers shared by the per-module serializers.
const nlohmann::json& member(const nlohmann::json& j, const char* name);
std::string get_string(const nlohmann::json& j, const char* name);
double get_number(const nlohmann::json& j, const char* name);
std::int64_t get_integer(const nlohmann::json& j, const char* name);
bool get_bool(const nlohmann::json& j, const char* name);
std::optional<std::string> get_opt_string(const nlohmann::json& j, const char* name);
std::optional<double> get_opt_number(const nlohmann::json& j, const char* name);
std::optional<int> get_opt_int(const nlohmann::json& j, const char* name);
Timestamp get_timestamp(const nlohmann::json& j, const char* name);

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

[[noreturn]] void fail(const std::string& field, const std::string& what);

}  // namespace json_detail

}  // namespace camgrid
