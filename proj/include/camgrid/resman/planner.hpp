#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "camgrid/resman/model.hpp"

namespace camgrid::resman {

struct PlanBin {
    InstanceType type;
    std::vector<std::string> stream_ids;
    Resources load;
};

struct Unassigned {
    std::string stream_id;
    std::string reason;
};

struct AllocationPlan {
    std::string planner;
    double duration_hours = 0.0;
    std::vector<PlanBin> bins;
    std::vector<Unassigned> unassigned;
    Micros total_cost_micros = 0;  // (sum of bin cost rates) x duration

    [[nodiscard]] double total_cost() const noexcept { return from_micros(total_cost_micros); }
};

nlohmann::json to_json(const AllocationPlan& plan);

struct PlanOptions {
    // With a model, an instance region may serve a stream only if
    // achieved_fps >= required_fps * quality_floor.
    std::optional<RttModel> rtt;
    double quality_floor = 0.9;
};

inline constexpr std::size_t kBruteForceMaxStreams = 10;
inline constexpr std::size_t kBruteForceMaxTypes = 4;

// Component-wise maximum capacity over the catalog; demands are normalized
// against it.
Resources reference_capacity(const std::vector<InstanceType>& catalog);

// Dimension with the highest demand / reference ratio (ties: cpu, memory, gpu).
Dimension binding_dimension(const Resources& demand, const Resources& reference);

// argmin over types that can host the whole demand of
// cost_rate / capacity[binding dimension]; ties by cost_rate, then name.
// Throws Error(planning) for an empty catalog or no feasible type.
const InstanceType& select_instance_type(const Resources& demand, const std::vector<InstanceType>& catalog);
const InstanceType& select_instance_type(const std::vector<StreamRequirement>& workload,
                                         const std::vector<InstanceType>& catalog);

// First-fit-decreasing over normalized demand, opening each new bin with
// select_instance_type for the stream that triggers it. Afterwards each bin
// is downsized to the cheapest type that still hosts it, and split into
// single-stream bins when that is cheaper, so the plan never costs more
// than naive_plan.
AllocationPlan pack_streams(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                            double duration_hours, const PlanOptions& options = {});

// One bin per stream on the cheapest type hosting it alone.
AllocationPlan naive_plan(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                          double duration_hours, const PlanOptions& options = {});

// Exact minimum-cost plan by search over all partitions of the streams.
// Refuses (Error(planning)) more than kBruteForceMaxStreams streams or
// kBruteForceMaxTypes types.
AllocationPlan brute_force_plan(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                                double duration_hours, const PlanOptions& options = {});

// Location-only baseline: every stream may only use types in the catalog
// region with the smallest rtt to its camera (ties by name), packed like
// pack_streams without a quality filter.
AllocationPlan nearest_region_plan(const std::vector<StreamRequirement>& reqs,
                                   const std::vector<InstanceType>& catalog, double duration_hours,
                                   const RttModel& model);

}  // namespace camgrid::resman
