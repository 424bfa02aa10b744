#pragma once

#include <string>
#include <vector>

#include "camgrid/core/types.hpp"

namespace camgrid {

struct Violation {
    std::string code;   // machine-readable, e.g. "lat_out_of_range"
    std::string field;  // dotted path into the record
    std::string message;

    bool operator==(const Violation&) const = default;
};

// Every invariant violation of the record; empty means valid. `now` bounds
// reliability.last_seen.
std::vector<Violation> validate_camera_record(const CameraRecord& rec, Timestamp now = now_utc());

}  // namespace camgrid
