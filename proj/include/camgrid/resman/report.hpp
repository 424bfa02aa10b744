#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "camgrid/resman/planner.hpp"

namespace camgrid::resman {

struct ReportRow {
    std::string name;
    std::size_t bins = 0;
    Micros total_cost_micros = 0;
    // 1 - cost / baseline cost; nullopt when the baseline costs nothing.
    std::optional<double> reduction;
};

// Rows in input order. Throws Error(validation) when the plans do not cover
// the same stream set or duration, or the baseline name is absent.
std::vector<ReportRow> plan_report(const std::vector<std::pair<std::string, AllocationPlan>>& plans,
                                   const std::string& baseline);

nlohmann::json to_json(const std::vector<ReportRow>& rows);
// Fixed-width text table: name, bins, total cost, % vs baseline.
std::string format_report(const std::vector<ReportRow>& rows);

}  // namespace camgrid::resman
