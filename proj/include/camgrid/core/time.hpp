#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace camgrid {

// All timestamps are UTC with millisecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now_utc();

// ISO-8601, always "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_timestamp(Timestamp t);

// Accepts the format above, an optional fractional part of any length, or a
// bare integer number of milliseconds since the epoch.
std::optional<Timestamp> parse_timestamp(std::string_view text);

inline std::int64_t to_millis(Timestamp t) { return t.time_since_epoch().count(); }
inline Timestamp from_millis(std::int64_t ms) { return Timestamp{std::chrono::milliseconds{ms}}; }

}  // namespace camgrid
