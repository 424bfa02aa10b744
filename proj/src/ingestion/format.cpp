#include "camgrid/ingestion/format.hpp"

#include <array>
#include <string>

#include "camgrid/core/error.hpp"

namespace camgrid::ingestion {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A};

[[noreturn]] void parse_fail(const std::string& what, std::size_t offset) {
    throw Error(ErrorCode::parse, what + " at offset " + std::to_string(offset), nlohmann::json{{"offset", offset}});
}

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

Dimensions jpeg_dimensions(std::span<const std::uint8_t> b) {
    if (b.size() < 3 || b[0] != 0xFF || b[1] != 0xD8) parse_fail("missing JPEG SOI marker", 0);
    std::size_t pos = 2;
    while (true) {
        if (pos >= b.size()) parse_fail("JPEG truncated before SOF", pos);
        if (b[pos] != 0xFF) parse_fail("expected JPEG marker", pos);
        while (pos < b.size() && b[pos] == 0xFF) ++pos;  // fill bytes
        if (pos >= b.size()) parse_fail("JPEG truncated before SOF", pos);
        const std::uint8_t marker = b[pos];
        const std::size_t marker_at = pos - 1;
        ++pos;
        if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) continue;
        if (marker == 0xD9 || marker == 0xDA) parse_fail("JPEG reached scan data without SOF", marker_at);
        if (pos + 2 > b.size()) parse_fail("JPEG truncated in segment length", pos);
        const std::size_t len = (static_cast<std::size_t>(b[pos]) << 8) | b[pos + 1];
        if (len < 2) parse_fail("invalid JPEG segment length", pos);
        if (marker == 0xC0 || marker == 0xC1 || marker == 0xC2) {
            if (pos + 7 > b.size() || len < 7) parse_fail("JPEG truncated inside SOF", pos);
            const int height = (b[pos + 3] << 8) | b[pos + 4];
            const int width = (b[pos + 5] << 8) | b[pos + 6];
            if (width == 0 || height == 0) parse_fail("JPEG SOF declares zero dimension", pos);
            return {width, height};
        }
        pos += len;
    }
}

Dimensions png_dimensions(std::span<const std::uint8_t> b) {
    if (b.size() < 8 || !std::equal(kPngSignature.begin(), kPngSignature.end(), b.begin())) {
        parse_fail("missing PNG signature", 0);
    }
    if (b.size() < 24) parse_fail("PNG truncated before IHDR", b.size());
    if (b[12] != 'I' || b[13] != 'H' || b[14] != 'D' || b[15] != 'R') parse_fail("first PNG chunk is not IHDR", 12);
    auto be32 = [&](std::size_t p) {
        return (static_cast<std::uint32_t>(b[p]) << 24) | (static_cast<std::uint32_t>(b[p + 1]) << 16) |
               (static_cast<std::uint32_t>(b[p + 2]) << 8) | b[p + 3];
    };
    const auto w = be32(16);
    const auto h = be32(20);
    if (w == 0 || h == 0 || w > 0x7FFFFFFF || h > 0x7FFFFFFF) parse_fail("PNG IHDR declares invalid dimension", 16);
    return {static_cast<int>(w), static_cast<int>(h)};
}

}  // namespace

// Shared with the PGM decoder: reads the "P5 w h maxval" header and returns
// the offset of the first raster byte.
std::size_t parse_pgm_header(std::span<const std::uint8_t> b, int& width, int& height, int& maxval) {
    if (b.size() < 2 || b[0] != 'P' || b[1] != '5') parse_fail("missing PGM magic", 0);
    std::size_t pos = 2;
    auto next_number = [&]() -> int {
        while (true) {
            while (pos < b.size() && is_space(b[pos])) ++pos;
            if (pos < b.size() && b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        if (pos >= b.size()) parse_fail("PGM header truncated", pos);
        if (b[pos] < '0' || b[pos] > '9') parse_fail("expected digit in PGM header", pos);
        long v = 0;
        while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
            v = v * 10 + (b[pos] - '0');
            if (v > 1'000'000) parse_fail("PGM header value too large", pos);
            ++pos;
        }
        return static_cast<int>(v);
    };
    width = next_number();
    height = next_number();
    maxval = next_number();
    if (pos >= b.size() || !is_space(b[pos])) parse_fail("PGM header truncated", pos);
    ++pos;
    if (width <= 0 || height <= 0) parse_fail("PGM declares zero dimension", pos);
    if (maxval <= 0 || maxval > 255) parse_fail("only 8-bit PGM is supported", pos);
    return pos;
}

FrameFormat detect_format(std::span<const std::uint8_t> b) noexcept {
    if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF) return FrameFormat::jpeg;
    if (b.size() >= 8 && std::equal(kPngSignature.begin(), kPngSignature.end(), b.begin())) return FrameFormat::png;
    if (b.size() >= 3 && b[0] == 'P' && b[1] == '5' && is_space(b[2])) return FrameFormat::pgm;
    return FrameFormat::unknown;
}

Dimensions parse_image_dimensions(std::span<const std::uint8_t> bytes, FrameFormat format) {
    switch (format) {
        case FrameFormat::jpeg: return jpeg_dimensions(bytes);
        case FrameFormat::png: return png_dimensions(bytes);
        case FrameFormat::pgm: {
            Dimensions d;
            int maxval = 0;
            parse_pgm_header(bytes, d.width, d.height, maxval);
            return d;
        }
        case FrameFormat::unknown: break;
    }
    throw Error(ErrorCode::invalid_argument, "dimension parsing needs a known image format");
}

std::string_view content_type_for(FrameFormat format) noexcept {
    switch (format) {
        case FrameFormat::jpeg: return "image/jpeg";
        case FrameFormat::png: return "image/png";
        case FrameFormat::pgm: return "image/x-portable-graymap";
        case FrameFormat::unknown: break;
    }
    return "application/octet-stream";
}

}  // namespace camgrid::ingestion
