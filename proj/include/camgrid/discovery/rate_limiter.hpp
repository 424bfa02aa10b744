#pragma once

#include <chrono>
#include <cstddef>
#include <mutex>
#include <stop_token>

namespace camgrid::discovery {

// Token bucket with a burst of one: grants are spaced at least 1/rate apart
// across all callers.
class RateLimiter {
public:
    explicit RateLimiter(double per_second);

    // Blocks until the caller may issue one request. Returns false if the
    // stop token fired first.
    bool acquire(std::stop_token stop = {});

    [[nodiscard]] double rate() const noexcept { return rate_; }
    [[nodiscard]] std::size_t grants() const;

private:
    double rate_;
    std::chrono::steady_clock::duration interval_;
    mutable std::mutex mu_;
    std::chrono::steady_clock::time_point next_;
    std::size_t grants_ = 0;
};

}  // namespace camgrid::discovery
