#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "camgrid/core/types.hpp"

namespace camgrid::ingestion {

struct Dimensions {
    int width = 0;
    int height = 0;
    bool operator==(const Dimensions&) const = default;
};

// jpeg iff the payload starts FF D8 FF; png iff it starts with the 8-byte PNG
// signature; pgm iff it starts "P5" followed by whitespace.
FrameFormat detect_format(std::span<const std::uint8_t> bytes) noexcept;

// Header-only dimension extraction. JPEG walks marker segments up to the
// first SOF0/SOF1/SOF2; PNG reads IHDR; PGM reads the text header. Throws
// Error(ErrorCode::parse) whose details carry the byte offset where parsing
// stopped.
Dimensions parse_image_dimensions(std::span<const std::uint8_t> bytes, FrameFormat format);

// Reads a binary PGM ("P5") header and returns the offset of the first
// raster byte. Throws like parse_image_dimensions.
std::size_t parse_pgm_header(std::span<const std::uint8_t> bytes, int& width, int& height, int& maxval);

// Best-effort MIME type for a detected format.
std::string_view content_type_for(FrameFormat format) noexcept;

inline std::span<const std::uint8_t> as_bytes(std::string_view s) noexcept {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace camgrid::ingestion
