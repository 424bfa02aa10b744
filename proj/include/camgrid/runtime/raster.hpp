#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace camgrid::runtime {

// 8-bit grayscale image, row-major.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, std::uint8_t fill = 0);
    Raster(int width, int height, std::vector<std::uint8_t> pixels);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t size() const noexcept { return pixels_.size(); }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

    [[nodiscard]] std::uint8_t at(int x, int y) const noexcept {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }
    std::uint8_t& at(int x, int y) noexcept {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }

    [[nodiscard]] std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    [[nodiscard]] std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    [[nodiscard]] bool same_shape(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    // Fills the axis-aligned rectangle [x0, x0+w) x [y0, y0+h), clipped.
    void fill_rect(int x0, int y0, int w, int h, std::uint8_t value) noexcept;

    bool operator==(const Raster&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

}  // namespace camgrid::runtime
