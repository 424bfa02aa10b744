#include "camgrid/resman/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "camgrid/core/error.hpp"

namespace camgrid::resman {

namespace {

// Whether stream i may run on catalog type t at all (region rules only).
using Allowed = std::function<bool(std::size_t stream, std::size_t type)>;

void check_inputs(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                  double duration_hours) {
    if (!std::isfinite(duration_hours) || duration_hours <= 0.0) {
        throw Error(ErrorCode::validation, "duration must be positive", {{"field", "duration"}});
    }
    validate_workload(reqs);
    validate_catalog(catalog);
}

Allowed quality_rule(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                     const PlanOptions& opt) {
    if (!opt.rtt) return [](std::size_t, std::size_t) { return true; };
    validate(*opt.rtt);
    if (!std::isfinite(opt.quality_floor) || opt.quality_floor < 0.0 || opt.quality_floor > 1.0) {
        throw Error(ErrorCode::validation, "quality_floor must be in [0, 1]", {{"field", "quality_floor"}});
    }
    return [&reqs, &catalog, model = *opt.rtt, floor = opt.quality_floor](std::size_t s, std::size_t t) {
        if (!model.rtt(catalog[t].region, reqs[s].camera_region)) return false;
        return achieved_fps(reqs[s], catalog[t].region, model) >= reqs[s].required_fps * floor;
    };
}

std::string unassigned_reason(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                              const Allowed& allowed, std::size_t s) {
    bool any_fit = false;
    for (std::size_t t = 0; t < catalog.size(); ++t) {
        if (reqs[s].demand().fits_in(catalog[t].capacity())) any_fit = true;
    }
    if (!any_fit) return "no instance type can host the stream";
    for (std::size_t t = 0; t < catalog.size(); ++t) {
        if (allowed(s, t)) return "no instance type in a permitted region can host the stream";
    }
    return "no region meets the quality floor";
}

// a is strictly better than b for hosting `demand` with binding dimension d.
bool better_ratio(const InstanceType& a, const InstanceType& b, Dimension d) {
    // cost_a / cap_a < cost_b / cap_b, compared by cross-multiplication.
    const long double lhs = static_cast<long double>(a.cost_micros) * b.capacity().get(d);
    const long double rhs = static_cast<long double>(b.cost_micros) * a.capacity().get(d);
    if (lhs != rhs) return lhs < rhs;
    if (a.cost_micros != b.cost_micros) return a.cost_micros < b.cost_micros;
    return a.name < b.name;
}

bool cheaper(const InstanceType& a, const InstanceType& b) {
    if (a.cost_micros != b.cost_micros) return a.cost_micros < b.cost_micros;
    return a.name < b.name;
}

// Cheapest allowed type hosting every stream in `members`.
std::optional<std::size_t> cheapest_host(const std::vector<StreamRequirement>& reqs,
                                         const std::vector<InstanceType>& catalog, const Allowed& allowed,
                                         const std::vector<std::size_t>& members) {
    Resources load;
    for (auto s : members) load += reqs[s].demand();
    std::optional<std::size_t> best;
    for (std::size_t t = 0; t < catalog.size(); ++t) {
        if (!load.fits_in(catalog[t].capacity())) continue;
        if (!std::all_of(members.begin(), members.end(), [&](std::size_t s) { return allowed(s, t); })) continue;
        if (!best || cheaper(catalog[t], catalog[*best])) best = t;
    }
    return best;
}

AllocationPlan finish(std::string name, double duration, const std::vector<StreamRequirement>& reqs,
                      const std::vector<InstanceType>& catalog,
                      const std::vector<std::pair<std::size_t, std::vector<std::size_t>>>& bins,
                      std::vector<Unassigned> unassigned) {
    AllocationPlan plan;
    plan.planner = std::move(name);
    plan.duration_hours = duration;
    Micros rate_sum = 0;
    for (const auto& [t, members] : bins) {
        PlanBin b;
        b.type = catalog[t];
        for (auto s : members) {
            b.stream_ids.push_back(reqs[s].stream_id);
            b.load += reqs[s].demand();
        }
        rate_sum += catalog[t].cost_micros;
        plan.bins.push_back(std::move(b));
    }
    plan.total_cost_micros = static_cast<Micros>(std::llround(static_cast<long double>(rate_sum) * duration));
    std::sort(unassigned.begin(), unassigned.end(),
              [](const Unassigned& a, const Unassigned& b) { return a.stream_id < b.stream_id; });
    plan.unassigned = std::move(unassigned);
    return plan;
}

AllocationPlan ffd(std::string name, const std::vector<StreamRequirement>& reqs,
                   const std::vector<InstanceType>& catalog, double duration, const Allowed& allowed) {
    const auto ref = reference_capacity(catalog);
    auto norm_key = [&](std::size_t s) {
        const auto d = reqs[s].demand();
        double m = 0.0;
        for (auto dim : kDimensions) {
            if (ref.get(dim) > 0.0) m = std::max(m, d.get(dim) / ref.get(dim));
        }
        return m;
    };
    std::vector<std::size_t> order(reqs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> keys(reqs.size());
    for (std::size_t s = 0; s < reqs.size(); ++s) keys[s] = norm_key(s);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) return keys[a] > keys[b];
        return reqs[a].stream_id < reqs[b].stream_id;
    });

    struct Bin {
        std::size_t type;
        std::vector<std::size_t> members;
        Resources load;
    };
    std::vector<Bin> bins;
    std::vector<Unassigned> unassigned;
    for (auto s : order) {
        const auto demand = reqs[s].demand();
        bool placed = false;
        for (auto& b : bins) {
            Resources next = b.load;
            next += demand;
            if (allowed(s, b.type) && next.fits_in(catalog[b.type].capacity())) {
                b.members.push_back(s);
                b.load = next;
                placed = true;
                break;
            }
        }
        if (placed) continue;
        const auto dim = binding_dimension(demand, ref);
        std::optional<std::size_t> pick;
        for (std::size_t t = 0; t < catalog.size(); ++t) {
            if (!allowed(s, t) || !demand.fits_in(catalog[t].capacity())) continue;
            if (!pick || better_ratio(catalog[t], catalog[*pick], dim)) pick = t;
        }
        if (!pick) {
            unassigned.push_back({reqs[s].stream_id, unassigned_reason(reqs, catalog, allowed, s)});
            continue;
        }
        bins.push_back({*pick, {s}, demand});
    }

    // Repair: downsize each bin, or split it when singles are cheaper.
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> out;
    for (const auto& b : bins) {
        const auto down = cheapest_host(reqs, catalog, allowed, b.members).value_or(b.type);
        Micros single_sum = 0;
        std::vector<std::size_t> singles;
        for (auto s : b.members) {
            const auto t = *cheapest_host(reqs, catalog, allowed, {s});
            singles.push_back(t);
            single_sum += catalog[t].cost_micros;
        }
        if (b.members.size() > 1 && single_sum < catalog[down].cost_micros) {
            for (std::size_t i = 0; i < b.members.size(); ++i) out.push_back({singles[i], {b.members[i]}});
        } else {
            out.push_back({down, b.members});
        }
    }
    return finish(std::move(name), duration, reqs, catalog, out, std::move(unassigned));
}

}  // namespace

nlohmann::json to_json(const AllocationPlan& plan) {
    auto bins = nlohmann::json::array();
    for (const auto& b : plan.bins) {
        bins.push_back({{"instance_type", b.type.name},
                        {"region", b.type.region},
                        {"cost_rate", b.type.cost_rate()},
                        {"stream_ids", b.stream_ids},
                        {"load", {{"cpu", b.load.cpu}, {"memory", b.load.memory}, {"gpu", b.load.gpu}}}});
    }
    auto un = nlohmann::json::array();
    for (const auto& u : plan.unassigned) un.push_back({{"stream_id", u.stream_id}, {"reason", u.reason}});
    return {{"planner", plan.planner},
            {"duration_hours", plan.duration_hours},
            {"bins", bins},
            {"unassigned", un},
            {"total_cost", plan.total_cost()},
            {"total_cost_micros", plan.total_cost_micros}};
}

Resources reference_capacity(const std::vector<InstanceType>& catalog) {
    Resources r;
    for (const auto& t : catalog) {
        r.cpu = std::max(r.cpu, t.cpu_capacity);
        r.memory = std::max(r.memory, t.memory_capacity);
        r.gpu = std::max(r.gpu, t.gpu_capacity);
    }
    return r;
}

Dimension binding_dimension(const Resources& demand, const Resources& reference) {
    Dimension best = Dimension::cpu;
    double best_ratio = -1.0;
    for (auto d : kDimensions) {
        const double cap = reference.get(d);
        const double ratio = cap > 0.0 ? demand.get(d) / cap
                                       : (demand.get(d) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > best_ratio) {
            best = d;
            best_ratio = ratio;
        }
    }
    return best;
}

const InstanceType& select_instance_type(const Resources& demand, const std::vector<InstanceType>& catalog) {
    if (catalog.empty()) throw Error(ErrorCode::planning, "empty instance catalog");
    const auto dim = binding_dimension(demand, reference_capacity(catalog));
    const InstanceType* best = nullptr;
    for (const auto& t : catalog) {
        if (!demand.fits_in(t.capacity()) || t.capacity().get(dim) <= 0.0) continue;
        if (!best || better_ratio(t, *best, dim)) best = &t;
    }
    if (!best) {
        throw Error(ErrorCode::planning, "no instance type can host the workload",
                    {{"cpu", demand.cpu}, {"memory", demand.memory}, {"gpu", demand.gpu}});
    }
    return *best;
}

const InstanceType& select_instance_type(const std::vector<StreamRequirement>& workload,
                                         const std::vector<InstanceType>& catalog) {
    Resources total;
    for (const auto& r : workload) total += r.demand();
    return select_instance_type(total, catalog);
}

AllocationPlan pack_streams(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                            double duration_hours, const PlanOptions& options) {
    check_inputs(reqs, catalog, duration_hours);
    return ffd(options.rtt ? "ffd_joint" : "ffd", reqs, catalog, duration_hours, quality_rule(reqs, catalog, options));
}

AllocationPlan naive_plan(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                          double duration_hours, const PlanOptions& options) {
    check_inputs(reqs, catalog, duration_hours);
    const auto allowed = quality_rule(reqs, catalog, options);
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> bins;
    std::vector<Unassigned> unassigned;
    for (std::size_t s = 0; s < reqs.size(); ++s) {
        if (auto t = cheapest_host(reqs, catalog, allowed, {s})) bins.push_back({*t, {s}});
        else unassigned.push_back({reqs[s].stream_id, unassigned_reason(reqs, catalog, allowed, s)});
    }
    return finish("naive", duration_hours, reqs, catalog, bins, std::move(unassigned));
}

AllocationPlan brute_force_plan(const std::vector<StreamRequirement>& reqs, const std::vector<InstanceType>& catalog,
                                double duration_hours, const PlanOptions& options) {
    if (reqs.size() > kBruteForceMaxStreams || catalog.size() > kBruteForceMaxTypes) {
        throw Error(ErrorCode::planning, "instance too large for exhaustive search",
                    {{"streams", reqs.size()},
                     {"types", catalog.size()},
                     {"max_streams", kBruteForceMaxStreams},
                     {"max_types", kBruteForceMaxTypes}});
    }
    check_inputs(reqs, catalog, duration_hours);
    const auto allowed = quality_rule(reqs, catalog, options);

    std::vector<std::size_t> live;
    std::vector<Unassigned> unassigned;
    for (std::size_t s = 0; s < reqs.size(); ++s) {
        if (cheapest_host(reqs, catalog, allowed, {s})) live.push_back(s);
        else unassigned.push_back({reqs[s].stream_id, unassigned_reason(reqs, catalog, allowed, s)});
    }
    const std::size_t n = live.size();
    const std::size_t full = (std::size_t{1} << n) - 1;
    auto members_of = [&](std::size_t mask) {
        std::vector<std::size_t> m;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1) m.push_back(live[i]);
        }
        return m;
    };
    // Best single bin for each subset.
    constexpr Micros kNone = std::numeric_limits<Micros>::max();
    std::vector<Micros> bin_cost(full + 1, kNone);
    std::vector<std::size_t> bin_type(full + 1, 0);
    for (std::size_t mask = 1; mask <= full; ++mask) {
        if (auto t = cheapest_host(reqs, catalog, allowed, members_of(mask))) {
            bin_cost[mask] = catalog[*t].cost_micros;
            bin_type[mask] = *t;
        }
    }
    // Exhaustive over partitions: each block contains the lowest remaining stream.
    std::vector<Micros> best(full + 1, kNone);
    std::vector<std::size_t> choice(full + 1, 0);
    best[0] = 0;
    for (std::size_t mask = 1; mask <= full; ++mask) {
        const std::size_t low = mask & (~mask + 1);
        const std::size_t rest = mask ^ low;
        for (std::size_t sub = rest;; sub = (sub - 1) & rest) {
            const std::size_t block = sub | low;
            if (bin_cost[block] != kNone && best[mask ^ block] != kNone) {
                const Micros c = bin_cost[block] + best[mask ^ block];
                if (c < best[mask]) {
                    best[mask] = c;
                    choice[mask] = block;
                }
            }
            if (sub == 0) break;
        }
    }
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> bins;
    for (std::size_t mask = full; mask != 0; mask ^= choice[mask]) {
        bins.push_back({bin_type[choice[mask]], members_of(choice[mask])});
    }
    return finish("brute_force", duration_hours, reqs, catalog, bins, std::move(unassigned));
}

AllocationPlan nearest_region_plan(const std::vector<StreamRequirement>& reqs,
                                   const std::vector<InstanceType>& catalog, double duration_hours,
                                   const RttModel& model) {
    check_inputs(reqs, catalog, duration_hours);
    validate(model);
    std::vector<std::string> regions;
    for (const auto& t : catalog) regions.push_back(t.region);
    std::sort(regions.begin(), regions.end());
    regions.erase(std::unique(regions.begin(), regions.end()), regions.end());
    std::vector<std::optional<std::string>> nearest(reqs.size());
    for (std::size_t s = 0; s < reqs.size(); ++s) {
        std::optional<double> best;
        for (const auto& r : regions) {
            const auto rtt = model.rtt(r, reqs[s].camera_region);
            if (rtt && (!best || *rtt < *best)) {
                best = rtt;
                nearest[s] = r;
            }
        }
    }
    const Allowed allowed = [&](std::size_t s, std::size_t t) { return nearest[s] == catalog[t].region; };
    return ffd("nearest_region", reqs, catalog, duration_hours, allowed);
}

}  // namespace camgrid::resman
