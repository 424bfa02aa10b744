#include "camgrid/core/error.hpp"

namespace camgrid {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::validation: return "validation";
        case ErrorCode::config: return "config";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::capacity: return "capacity";
        case ErrorCode::storage: return "storage";
        case ErrorCode::network: return "network";
        case ErrorCode::http_status: return "http_status";
        case ErrorCode::timeout: return "timeout";
        case ErrorCode::too_large: return "too_large";
        case ErrorCode::unknown_format: return "unknown_format";
        case ErrorCode::parse: return "parse";
        case ErrorCode::stream: return "stream";
        case ErrorCode::estimation: return "estimation";
        case ErrorCode::planning: return "planning";
        case ErrorCode::upstream: return "upstream";
        case ErrorCode::cancelled: return "cancelled";
        case ErrorCode::internal: return "internal";
    }
    return "internal";
}

}  // namespace camgrid
