#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace camgrid {

enum class ErrorCode {
    invalid_argument,
    validation,
    config,
    not_found,
    capacity,
    storage,
    network,
    http_status,
    timeout,
    too_large,
    unknown_format,
    parse,
    stream,
    estimation,
    planning,
    upstream,
    cancelled,
    internal,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the project. `details` carries machine-readable
// context (violation lists, partial evidence, offsets) and is what the REST
// layer returns in the `details` member of an error body.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, nlohmann::json details = nullptr)
        : std::runtime_error(message), code_(code), details_(std::move(details)) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] const nlohmann::json& details() const noexcept { return details_; }

    // Storage failures and upstream hiccups are worth retrying; bad input is not.
    [[nodiscard]] bool retriable() const noexcept {
        return code_ == ErrorCode::storage || code_ == ErrorCode::network ||
               code_ == ErrorCode::timeout || code_ == ErrorCode::upstream ||
               code_ == ErrorCode::capacity;
    }

private:
    ErrorCode code_;
    nlohmann::json details_;
};

}  // namespace camgrid
