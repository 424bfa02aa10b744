#include "camgrid/runtime/raster.hpp"

#include <algorithm>

#include "camgrid/core/error.hpp"

namespace camgrid::runtime {

Raster::Raster(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw Error(ErrorCode::invalid_argument, "raster dimensions must be positive");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Raster::Raster(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) throw Error(ErrorCode::invalid_argument, "raster dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::invalid_argument, "pixel count must equal width * height");
    }
}

void Raster::fill_rect(int x0, int y0, int w, int h, std::uint8_t value) noexcept {
    const int x1 = std::min(width_, x0 + w);
    const int y1 = std::min(height_, y0 + h);
    for (int y = std::max(0, y0); y < y1; ++y) {
        for (int x = std::max(0, x0); x < x1; ++x) at(x, y) = value;
    }
}

}  // namespace camgrid::runtime
