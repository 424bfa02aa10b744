#include "camgrid/core/types.hpp"

#include <array>
#include <utility>

#include "camgrid/core/hash.hpp"

namespace camgrid {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<CameraKind, 2> kKinds{{{CameraKind::ip_camera, "ip_camera"},
                                           {CameraKind::non_ip_camera, "non_ip_camera"}}};
constexpr NameTable<LocationProvenance, 4> kProvenances{{{LocationProvenance::owner_provided, "owner_provided"},
                                                         {LocationProvenance::geocoded_address, "geocoded_address"},
                                                         {LocationProvenance::ip_derived, "ip_derived"},
                                                         {LocationProvenance::unknown, "unknown"}}};
constexpr NameTable<RetrievalMode, 2> kModes{{{RetrievalMode::snapshot_poll, "snapshot_poll"},
                                              {RetrievalMode::mjpeg_stream, "mjpeg_stream"}}};
constexpr NameTable<MediaFormat, 5> kMediaFormats{{{MediaFormat::jpeg, "jpeg"},
                                                   {MediaFormat::png, "png"},
                                                   {MediaFormat::mjpeg, "mjpeg"},
                                                   {MediaFormat::mp4, "mp4"},
                                                   {MediaFormat::flash, "flash"}}};
constexpr NameTable<FrameFormat, 4> kFrameFormats{{{FrameFormat::jpeg, "jpeg"},
                                                   {FrameFormat::png, "png"},
                                                   {FrameFormat::pgm, "pgm"},
                                                   {FrameFormat::unknown, "unknown"}}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value) {
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const NameTable<E, N>& table, std::string_view name) {
    for (const auto& [v, n] : table) {
        if (n == name) return v;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(CameraKind v) { return name_of(kKinds, v); }
std::string_view to_string(LocationProvenance v) { return name_of(kProvenances, v); }
std::string_view to_string(RetrievalMode v) { return name_of(kModes, v); }
std::string_view to_string(MediaFormat v) { return name_of(kMediaFormats, v); }
std::string_view to_string(FrameFormat v) { return name_of(kFrameFormats, v); }

std::optional<CameraKind> parse_camera_kind(std::string_view s) { return value_of(kKinds, s); }
std::optional<LocationProvenance> parse_provenance(std::string_view s) { return value_of(kProvenances, s); }
std::optional<RetrievalMode> parse_retrieval_mode(std::string_view s) { return value_of(kModes, s); }
std::optional<MediaFormat> parse_media_format(std::string_view s) { return value_of(kMediaFormats, s); }
std::optional<FrameFormat> parse_frame_format(std::string_view s) { return value_of(kFrameFormats, s); }

std::string camera_id_for(std::string_view url, RetrievalMode mode) {
    auto h = fnv1a64(url);
    h = fnv1a64(std::string_view{"\x1f"}, h);
    h = fnv1a64(to_string(mode), h);
    return to_hex(h);
}

}  // namespace camgrid
