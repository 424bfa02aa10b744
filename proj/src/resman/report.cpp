#include "camgrid/resman/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "camgrid/core/error.hpp"

namespace camgrid::resman {

namespace {

std::set<std::string> streams_of(const AllocationPlan& p) {
    std::set<std::string> out;
    for (const auto& b : p.bins) out.insert(b.stream_ids.begin(), b.stream_ids.end());
    for (const auto& u : p.unassigned) out.insert(u.stream_id);
    return out;
}

}  // namespace

std::vector<ReportRow> plan_report(const std::vector<std::pair<std::string, AllocationPlan>>& plans,
                                   const std::string& baseline) {
    const auto base = std::find_if(plans.begin(), plans.end(), [&](const auto& p) { return p.first == baseline; });
    if (base == plans.end()) {
        throw Error(ErrorCode::validation, "baseline plan " + baseline + " not found", {{"field", "baseline"}});
    }
    const auto base_streams = streams_of(base->second);
    std::vector<ReportRow> rows;
    for (const auto& [name, plan] : plans) {
        if (streams_of(plan) != base_streams) {
            throw Error(ErrorCode::validation, "plan " + name + " covers a different stream set than " + baseline,
                        {{"plan", name}, {"baseline", baseline}});
        }
        if (plan.duration_hours != base->second.duration_hours) {
            throw Error(ErrorCode::validation, "plan " + name + " has a different duration than " + baseline,
                        {{"plan", name}, {"baseline", baseline}});
        }
        ReportRow row{name, plan.bins.size(), plan.total_cost_micros, std::nullopt};
        if (base->second.total_cost_micros > 0) {
            row.reduction = 1.0 - static_cast<double>(plan.total_cost_micros) /
                                      static_cast<double>(base->second.total_cost_micros);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json to_json(const std::vector<ReportRow>& rows) {
    auto out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({{"name", r.name},
                       {"bins", r.bins},
                       {"total_cost", from_micros(r.total_cost_micros)},
                       {"total_cost_micros", r.total_cost_micros},
                       {"reduction", r.reduction ? nlohmann::json(*r.reduction) : nlohmann::json(nullptr)},
                       {"pct_vs_baseline",
                        r.reduction ? nlohmann::json(-100.0 * *r.reduction + 0.0) : nlohmann::json(nullptr)}});
    }
    return out;
}

std::string format_report(const std::vector<ReportRow>& rows) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %6s %16s %10s\n", "plan", "bins", "total_cost", "vs_base");
    out += line;
    for (const auto& r : rows) {
        char pct[32] = "n/a";
        if (r.reduction) std::snprintf(pct, sizeof pct, "%+.2f%%", -100.0 * *r.reduction + 0.0);
        std::snprintf(line, sizeof line, "%-16s %6zu %16.6f %10s\n", r.name.c_str(), r.bins,
                      from_micros(r.total_cost_micros), pct);
        out += line;
    }
    return out;
}

}  // namespace camgrid::resman
