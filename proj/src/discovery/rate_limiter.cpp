#include "camgrid/discovery/rate_limiter.hpp"

#include <condition_variable>

#include "camgrid/core/error.hpp"

namespace camgrid::discovery {

RateLimiter::RateLimiter(double per_second) : rate_(per_second) {
    if (!(per_second > 0.0)) {
        throw Error(ErrorCode::validation, "rate limit must be positive", {{"field", "rate"}});
    }
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / per_second));
    next_ = std::chrono::steady_clock::now();
}

bool RateLimiter::acquire(std::stop_token stop) {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mu_);
        slot = std::max(std::chrono::steady_clock::now(), next_);
        next_ = slot + interval_;
        ++grants_;
    }
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_until(lock, stop, slot, [] { return false; });
    return !stop.stop_requested();
}

std::size_t RateLimiter::grants() const {
    std::lock_guard lock(mu_);
    return grants_;
}

}  // namespace camgrid::discovery
