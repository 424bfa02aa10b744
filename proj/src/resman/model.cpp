#include "camgrid/resman/model.hpp"

#include <cmath>
#include <set>

#include "camgrid/core/error.hpp"
#include "camgrid/core/serialize.hpp"

namespace camgrid::resman {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what, const std::string& who = {}) {
    nlohmann::json d{{"field", field}};
    if (!who.empty()) d["item"] = who;
    throw Error(ErrorCode::validation, (who.empty() ? "" : who + ": ") + field + " " + what, d);
}

void check_non_negative(double v, const char* field, const std::string& who) {
    if (!std::isfinite(v) || v < 0.0) invalid(field, "must be finite and >= 0", who);
}

void check_positive(double v, const char* field, const std::string& who) {
    if (!std::isfinite(v) || v <= 0.0) invalid(field, "must be finite and > 0", who);
}

const nlohmann::json& array_under(const nlohmann::json& j, const char* key) {
    if (j.is_array()) return j;
    if (j.is_object() && j.contains(key) && j[key].is_array()) return j[key];
    json_detail::fail(key, "expected an array or an object holding one");
}

double opt_number(const nlohmann::json& j, const char* name, double fallback) {
    const auto v = json_detail::get_opt_number(j, name);
    return v ? *v : fallback;
}

}  // namespace

Micros to_micros(double amount) { return static_cast<Micros>(std::llround(amount * 1e6)); }
double from_micros(Micros m) { return static_cast<double>(m) / 1e6; }

std::string to_string(Dimension d) {
    switch (d) {
        case Dimension::cpu: return "cpu";
        case Dimension::memory: return "memory";
        case Dimension::gpu: return "gpu";
    }
    return "?";
}

double Resources::get(Dimension d) const noexcept {
    switch (d) {
        case Dimension::cpu: return cpu;
        case Dimension::memory: return memory;
        case Dimension::gpu: return gpu;
    }
    return 0.0;
}

Resources& Resources::operator+=(const Resources& o) noexcept {
    cpu += o.cpu;
    memory += o.memory;
    gpu += o.gpu;
    return *this;
}

bool Resources::fits_in(const Resources& c) const noexcept {
    for (auto d : kDimensions) {
        if (get(d) > c.get(d) * (1.0 + 1e-9) + 1e-12) return false;
    }
    return true;
}

Resources StreamRequirement::demand() const noexcept {
    return {cpu_per_frame * required_fps, memory, gpu_per_frame * required_fps};
}

void RttModel::set(const std::string& a, const std::string& b, double ms) { rtt_ms[{std::min(a, b), std::max(a, b)}] = ms; }

std::optional<double> RttModel::rtt(const std::string& a, const std::string& b) const {
    const auto it = rtt_ms.find({std::min(a, b), std::max(a, b)});
    if (it == rtt_ms.end()) return std::nullopt;
    return it->second;
}

double achieved_fps(const StreamRequirement& req, const std::string& region, const RttModel& model) {
    const auto rtt = model.rtt(region, req.camera_region);
    if (!rtt) {
        throw Error(ErrorCode::planning, "no rtt between " + region + " and " + req.camera_region,
                    {{"region", region}, {"camera_region", req.camera_region}});
    }
    if (std::isinf(*rtt)) return 0.0;
    return std::min(req.required_fps, model.k / *rtt);
}

void validate(const InstanceType& t) {
    if (t.name.empty()) invalid("name", "must not be empty");
    if (t.region.empty()) invalid("region", "must not be empty", t.name);
    check_positive(t.cpu_capacity, "cpu_capacity", t.name);
    check_non_negative(t.memory_capacity, "memory_capacity", t.name);
    check_non_negative(t.gpu_capacity, "gpu_capacity", t.name);
    if (t.cost_micros <= 0) invalid("cost_rate", "must be > 0", t.name);
}

void validate(const StreamRequirement& r) {
    if (r.stream_id.empty()) invalid("stream_id", "must not be empty");
    check_positive(r.cpu_per_frame, "cpu_per_frame", r.stream_id);
    check_non_negative(r.memory, "memory", r.stream_id);
    check_non_negative(r.gpu_per_frame, "gpu_per_frame", r.stream_id);
    check_positive(r.required_fps, "required_fps", r.stream_id);
}

void validate(const RttModel& m) {
    check_positive(m.k, "k", "rtt");
    for (const auto& [pair, ms] : m.rtt_ms) {
        if (std::isnan(ms) || ms <= 0.0) invalid("rtt_ms", "must be positive", pair.first + "/" + pair.second);
    }
}

void validate_catalog(const std::vector<InstanceType>& catalog) {
    std::set<std::string> names;
    for (const auto& t : catalog) {
        validate(t);
        if (!names.insert(t.name).second) invalid("name", "is duplicated", t.name);
    }
}

void validate_workload(const std::vector<StreamRequirement>& reqs) {
    std::set<std::string> ids;
    for (const auto& r : reqs) {
        validate(r);
        if (!ids.insert(r.stream_id).second) invalid("stream_id", "is duplicated", r.stream_id);
    }
}

nlohmann::json to_json(const InstanceType& t) {
    return {{"name", t.name},
            {"region", t.region},
            {"cpu_capacity", t.cpu_capacity},
            {"memory_capacity", t.memory_capacity},
            {"gpu_capacity", t.gpu_capacity},
            {"cost_rate", t.cost_rate()}};
}

nlohmann::json to_json(const StreamRequirement& r) {
    return {{"stream_id", r.stream_id},     {"cpu_per_frame", r.cpu_per_frame}, {"memory", r.memory},
            {"gpu_per_frame", r.gpu_per_frame}, {"required_fps", r.required_fps},   {"camera_region", r.camera_region}};
}

nlohmann::json to_json(const RttModel& m) {
    auto pairs = nlohmann::json::array();
    for (const auto& [p, ms] : m.rtt_ms) pairs.push_back({{"a", p.first}, {"b", p.second}, {"ms", ms}});
    return {{"k", m.k}, {"rtt_ms", pairs}};
}

InstanceType instance_type_from_json(const nlohmann::json& j) {
    InstanceType t;
    t.name = json_detail::get_string(j, "name");
    t.region = json_detail::get_string(j, "region");
    t.cpu_capacity = json_detail::get_number(j, "cpu_capacity");
    t.memory_capacity = json_detail::get_number(j, "memory_capacity");
    t.gpu_capacity = opt_number(j, "gpu_capacity", 0.0);
    t.cost_micros = to_micros(json_detail::get_number(j, "cost_rate"));
    validate(t);
    return t;
}

StreamRequirement stream_from_json(const nlohmann::json& j) {
    StreamRequirement r;
    r.stream_id = json_detail::get_string(j, "stream_id");
    r.cpu_per_frame = json_detail::get_number(j, "cpu_per_frame");
    r.memory = json_detail::get_number(j, "memory");
    r.gpu_per_frame = opt_number(j, "gpu_per_frame", 0.0);
    r.required_fps = json_detail::get_number(j, "required_fps");
    r.camera_region = json_detail::get_string(j, "camera_region");
    validate(r);
    return r;
}

RttModel rtt_model_from_json(const nlohmann::json& j) {
    RttModel m;
    m.k = opt_number(j, "k", 2000.0);
    for (const auto& e : array_under(j, "rtt_ms")) {
        m.set(json_detail::get_string(e, "a"), json_detail::get_string(e, "b"), json_detail::get_number(e, "ms"));
    }
    validate(m);
    return m;
}

std::vector<InstanceType> catalog_from_json(const nlohmann::json& j) {
    std::vector<InstanceType> out;
    for (const auto& e : array_under(j, "instance_types")) out.push_back(instance_type_from_json(e));
    validate_catalog(out);
    return out;
}

std::vector<StreamRequirement> workload_from_json(const nlohmann::json& j) {
    std::vector<StreamRequirement> out;
    for (const auto& e : array_under(j, "streams")) out.push_back(stream_from_json(e));
    validate_workload(out);
    return out;
}

}  // namespace camgrid::resman
