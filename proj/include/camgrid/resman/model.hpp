#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace camgrid::resman {

// Currency in millionths; plan arithmetic stays exact.
using Micros = std::int64_t;

Micros to_micros(double amount);
double from_micros(Micros m);

enum class Dimension { cpu, memory, gpu };
std::string to_string(Dimension d);

struct Resources {
    double cpu = 0.0;     // compute units / second
    double memory = 0.0;  // MiB
    double gpu = 0.0;     // gpu units / second

    [[nodiscard]] double get(Dimension d) const noexcept;
    Resources& operator+=(const Resources& o) noexcept;
    // Every component <= the other's, with a relative slack of 1e-9.
    [[nodiscard]] bool fits_in(const Resources& capacity) const noexcept;
};

inline constexpr Dimension kDimensions[] = {Dimension::cpu, Dimension::memory, Dimension::gpu};

struct InstanceType {
    std::string name;
    std::string region;
    double cpu_capacity = 0.0;
    double memory_capacity = 0.0;
    double gpu_capacity = 0.0;
    Micros cost_micros = 0;  // per hour

    [[nodiscard]] Resources capacity() const noexcept { return {cpu_capacity, memory_capacity, gpu_capacity}; }
    [[nodiscard]] double cost_rate() const noexcept { return from_micros(cost_micros); }
    bool operator==(const InstanceType&) const = default;
};

struct StreamRequirement {
    std::string stream_id;
    double cpu_per_frame = 0.0;
    double memory = 0.0;
    double gpu_per_frame = 0.0;
    double required_fps = 1.0;
    std::string camera_region;

    // Per-frame costs times fps; memory as is.
    [[nodiscard]] Resources demand() const noexcept;
    bool operator==(const StreamRequirement&) const = default;
};

// Round-trip time between an instance region and a camera region, looked
// up in either order. k is the degradation constant in frames*ms/second.
struct RttModel {
    double k = 2000.0;
    std::map<std::pair<std::string, std::string>, double> rtt_ms;

    void set(const std::string& a, const std::string& b, double ms);
    [[nodiscard]] std::optional<double> rtt(const std::string& a, const std::string& b) const;
};

// min(required_fps, k / rtt). Throws Error(planning) without an rtt entry.
double achieved_fps(const StreamRequirement& req, const std::string& region, const RttModel& model);

// Throw Error(validation) naming the field.
void validate(const InstanceType& t);
void validate(const StreamRequirement& r);
void validate(const RttModel& m);
// Also rejects duplicate names / ids.
void validate_catalog(const std::vector<InstanceType>& catalog);
void validate_workload(const std::vector<StreamRequirement>& reqs);

// JSON shapes:
//   instance type: {name, region, cpu_capacity, memory_capacity, gpu_capacity?, cost_rate}
//   stream:        {stream_id, cpu_per_frame, memory, gpu_per_frame?, required_fps, camera_region}
//   rtt model:     {k?, rtt_ms: [{a, b, ms}, ...]}
// Catalog and workload files are arrays, or objects holding the array under
// "instance_types" / "streams".
nlohmann::json to_json(const InstanceType& t);
nlohmann::json to_json(const StreamRequirement& r);
nlohmann::json to_json(const RttModel& m);
InstanceType instance_type_from_json(const nlohmann::json& j);
StreamRequirement stream_from_json(const nlohmann::json& j);
RttModel rtt_model_from_json(const nlohmann::json& j);
std::vector<InstanceType> catalog_from_json(const nlohmann::json& j);
std::vector<StreamRequirement> workload_from_json(const nlohmann::json& j);

}  // namespace camgrid::resman
