#include "camgrid/runtime/codec.hpp"

#include <csetjmp>
#include <cstdio>
#include <string>

#include <jpeglib.h>

#include "camgrid/core/error.hpp"
#include "camgrid/ingestion/format.hpp"

namespace camgrid::runtime {

std::vector<std::uint8_t> encode_pgm(const Raster& raster, std::string_view comment) {
    std::string header = "P5\n";
    if (!comment.empty()) {
        header += "# ";
        for (char c : comment) header.push_back(c == '\n' || c == '\r' ? ' ' : c);
        header += "\n";
    }
    header += std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), raster.pixels().begin(), raster.pixels().end());
    return out;
}

Raster decode_pgm(std::span<const std::uint8_t> bytes) {
    int width = 0, height = 0, maxval = 0;
    const auto offset = ingestion::parse_pgm_header(bytes, width, height, maxval);
    const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - offset < count) {
        throw Error(ErrorCode::parse, "PGM raster truncated", nlohmann::json{{"offset", bytes.size()}});
    }
    std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
    if (maxval != 255) {
        for (auto& p : pixels) p = static_cast<std::uint8_t>(std::min(255, p * 255 / maxval));
    }
    return Raster(width, height, std::move(pixels));
}

namespace {

struct JpegErrorManager {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr, int) {}

// The setjmp frames below hold only trivially destructible locals; the
// C++ objects they fill are owned by the callers.
bool encode_impl(const Raster& raster, int quality, bool progressive, unsigned char** out, unsigned long* out_len,
                 char* message) {
    jpeg_compress_struct cinfo;
    JpegErrorManager jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        std::snprintf(message, JMSG_LENGTH_MAX, "%s", jerr.message);
        jpeg_destroy_compress(&cinfo);
        return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, out, out_len);
    cinfo.image_width = static_cast<JDIMENSION>(raster.width());
    cinfo.image_height = static_cast<JDIMENSION>(raster.height());
    cinfo.input_components = 1;
    cinfo.in_color_space = JCS_GRAYSCALE;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    if (progressive) jpeg_simple_progression(&cinfo);
    jpeg_start_compress(&cinfo, TRUE);
    const auto* base = raster.pixels().data();
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(base + static_cast<std::size_t>(cinfo.next_scanline) *
                                                       static_cast<std::size_t>(raster.width()));
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    return true;
}

bool decode_impl(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>& pixels, int& width, int& height,
                 char* message) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    jerr.pub.emit_message = jpeg_silence;
    if (setjmp(jerr.jump)) {
        std::snprintf(message, JMSG_LENGTH_MAX, "%s", jerr.message);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_GRAYSCALE;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * static_cast<std::size_t>(width);
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const Raster& raster, int quality, bool progressive) {
    if (raster.empty()) throw Error(ErrorCode::invalid_argument, "cannot encode an empty raster");
    unsigned char* buf = nullptr;
    unsigned long len = 0;
    char message[JMSG_LENGTH_MAX] = {};
    const bool ok = encode_impl(raster, quality, progressive, &buf, &len, message);
    std::vector<std::uint8_t> out;
    if (ok) out.assign(buf, buf + len);
    std::free(buf);
    if (!ok) throw Error(ErrorCode::internal, std::string("JPEG encode failed: ") + message);
    return out;
}

Raster decode_jpeg(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> pixels;
    int width = 0, height = 0;
    char message[JMSG_LENGTH_MAX] = {};
    if (bytes.empty() || !decode_impl(bytes, pixels, width, height, message)) {
        throw Error(ErrorCode::parse, std::string("JPEG decode failed: ") + message);
    }
    return Raster(width, height, std::move(pixels));
}

DecoderSet DecoderSet::builtin() {
    DecoderSet set;
    set.plug(FrameFormat::pgm, [](std::span<const std::uint8_t> b) { return decode_pgm(b); });
    set.plug(FrameFormat::jpeg, [](std::span<const std::uint8_t> b) { return decode_jpeg(b); });
    return set;
}

void DecoderSet::plug(FrameFormat format, FrameDecoder decoder) { decoders_[format] = std::move(decoder); }

bool DecoderSet::supports(FrameFormat format) const { return decoders_.contains(format); }

Raster DecoderSet::decode(const Frame& frame) const {
    auto format = frame.format;
    if (format == FrameFormat::unknown) format = ingestion::detect_format(frame.bytes);
    auto it = decoders_.find(format);
    if (it == decoders_.end()) {
        throw Error(ErrorCode::unknown_format, "no decoder plugged for format " + std::string(to_string(format)));
    }
    return it->second(frame.bytes);
}

}  // namespace camgrid::runtime
