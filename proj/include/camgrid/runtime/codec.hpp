#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "camgrid/core/types.hpp"
#include "camgrid/runtime/raster.hpp"

namespace camgrid::runtime {

// Binary PGM with an optional single comment line in the header.
std::vector<std::uint8_t> encode_pgm(const Raster& raster, std::string_view comment = {});
Raster decode_pgm(std::span<const std::uint8_t> bytes);

// Baseline grayscale JPEG through libjpeg. decode_jpeg converts colour input
// to luminance.
std::vector<std::uint8_t> encode_jpeg(const Raster& raster, int quality = 90, bool progressive = false);
Raster decode_jpeg(std::span<const std::uint8_t> bytes);

using FrameDecoder = std::function<Raster(std::span<const std::uint8_t>)>;

// Decoder port: maps a detected frame format to a decoder. The default set
// handles pgm and jpeg.
class DecoderSet {
public:
    static DecoderSet builtin();

    void plug(FrameFormat format, FrameDecoder decoder);
    [[nodiscard]] bool supports(FrameFormat format) const;

    // Throws Error(unknown_format) when no decoder is plugged for the frame.
    [[nodiscard]] Raster decode(const Frame& frame) const;

private:
    std::map<FrameFormat, FrameDecoder> decoders_;
};

}  // namespace camgrid::runtime
