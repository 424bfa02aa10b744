#include <doctest.h>

#include <random>

#include "camgrid/core/error.hpp"
#include "camgrid/ingestion/format.hpp"
#include "camgrid/runtime/codec.hpp"
#include "support/image_oracle.hpp"

using namespace camgrid;
using namespace camgrid::ingestion;

TEST_CASE("detect_format by magic bytes") {
    const std::vector<std::uint8_t> jpeg{0xFF, 0xD8, 0xFF, 0xE0, 0x00};
    const std::vector<std::uint8_t> png{0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00};
    CHECK(detect_format(jpeg) == FrameFormat::jpeg);
    CHECK(detect_format(png) == FrameFormat::png);
    CHECK(detect_format({}) == FrameFormat::unknown);
    CHECK(detect_format(as_bytes("<html>")) == FrameFormat::unknown);
    CHECK(detect_format(as_bytes("P5\n1 1\n255\n\x01")) == FrameFormat::pgm);
    CHECK(detect_format(std::vector<std::uint8_t>{0xFF, 0xD8}) == FrameFormat::unknown);
    CHECK(detect_format(std::vector<std::uint8_t>{0x89, 0x50, 0x4E, 0x47}) == FrameFormat::unknown);
}

TEST_CASE("dimensions of reference-encoded images") {
    const auto jpeg = test_oracle::jpeg_rgb(640, 480);
    CHECK(parse_image_dimensions(jpeg, FrameFormat::jpeg) == Dimensions{640, 480});
    const auto png = test_oracle::png_gray(1, 1);
    CHECK(detect_format(png) == FrameFormat::png);
    CHECK(parse_image_dimensions(png, FrameFormat::png) == Dimensions{1, 1});
    const auto prog = test_oracle::jpeg_rgb(333, 77, true);
    CHECK(parse_image_dimensions(prog, FrameFormat::jpeg) == Dimensions{333, 77});
}

TEST_CASE("dimensions agree with the encoder on randomized sizes") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> side(1, 1500);
    for (int i = 0; i < 100; ++i) {
        const int w = side(rng), h = side(rng);
        CHECK(parse_image_dimensions(test_oracle::jpeg_rgb(w, h, i % 4 == 0), FrameFormat::jpeg) == Dimensions{w, h});
        CHECK(parse_image_dimensions(test_oracle::png_gray(w, h), FrameFormat::png) == Dimensions{w, h});
    }
}

TEST_CASE("truncated or markerless payloads report the offset") {
    const auto jpeg = test_oracle::jpeg_rgb(64, 48);
    // Locate the SOF0 marker and cut just before it.
    std::size_t sof = 0;
    for (std::size_t i = 2; i + 1 < jpeg.size(); ++i) {
        if (jpeg[i] == 0xFF && jpeg[i + 1] == 0xC0) {
            sof = i;
            break;
        }
    }
    REQUIRE(sof > 0);
    const std::vector<std::uint8_t> cut(jpeg.begin(), jpeg.begin() + static_cast<std::ptrdiff_t>(sof));
    try {
        (void)parse_image_dimensions(cut, FrameFormat::jpeg);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
        CHECK(e.details()["offset"].get<std::size_t>() == sof);
    }
    const std::vector<std::uint8_t> sos_first{0xFF, 0xD8, 0xFF, 0xDA, 0x00, 0x02};
    CHECK_THROWS_AS((void)parse_image_dimensions(sos_first, FrameFormat::jpeg), Error);
    const auto png = test_oracle::png_gray(5, 5);
    const std::vector<std::uint8_t> short_png(png.begin(), png.begin() + 20);
    CHECK_THROWS_AS((void)parse_image_dimensions(short_png, FrameFormat::png), Error);
    CHECK_THROWS_AS((void)parse_image_dimensions(as_bytes("P5\n"), FrameFormat::pgm), Error);
    CHECK_THROWS_AS((void)parse_image_dimensions(jpeg, FrameFormat::unknown), Error);
}

TEST_CASE("pgm and jpeg codecs") {
    runtime::Raster r(7, 5, 10);
    r.fill_rect(2, 1, 3, 3, 200);
    const auto pgm = runtime::encode_pgm(r, "seq 12");
    CHECK(detect_format(pgm) == FrameFormat::pgm);
    CHECK(parse_image_dimensions(pgm, FrameFormat::pgm) == Dimensions{7, 5});
    CHECK(runtime::decode_pgm(pgm) == r);

    runtime::Raster big(96, 64, 40);
    big.fill_rect(30, 20, 16, 16, 220);
    const auto jpeg = runtime::encode_jpeg(big, 95);
    CHECK(detect_format(jpeg) == FrameFormat::jpeg);
    CHECK(parse_image_dimensions(jpeg, FrameFormat::jpeg) == Dimensions{96, 64});
    const auto back = runtime::decode_jpeg(jpeg);
    REQUIRE(back.same_shape(big));
    int worst = 0;
    for (std::size_t i = 0; i < big.size(); ++i) {
        worst = std::max(worst, std::abs(int(back.pixels()[i]) - int(big.pixels()[i])));
    }
    CHECK(worst < 25);
    CHECK_THROWS_AS((void)runtime::decode_jpeg(as_bytes("not a jpeg")), Error);

    // colour input decodes to luminance
    const auto rgb = test_oracle::jpeg_rgb(31, 17);
    CHECK(runtime::decode_jpeg(rgb).width() == 31);
}

TEST_CASE("decoder port") {
    auto set = runtime::DecoderSet::builtin();
    CHECK(set.supports(FrameFormat::pgm));
    CHECK_FALSE(set.supports(FrameFormat::png));
    Frame f;
    f.format = FrameFormat::png;
    f.bytes = test_oracle::png_gray(2, 2);
    CHECK_THROWS_AS((void)set.decode(f), Error);
    set.plug(FrameFormat::png, [](std::span<const std::uint8_t>) { return runtime::Raster(2, 2, 128); });
    CHECK(set.decode(f).width() == 2);
}
