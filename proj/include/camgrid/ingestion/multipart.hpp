#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace camgrid::ingestion {

inline constexpr std::size_t kDefaultMultipartBufferCap = 16u << 20;

// Incremental multipart/x-mixed-replace parser state. Bytes accumulate in
// `buffer` from `head` onwards; everything before `head` has been consumed.
struct MultipartParserState {
    enum class Phase { seeking_boundary, reading_headers, reading_body };

    std::string boundary;  // the token without leading dashes
    std::vector<std::uint8_t> buffer;
    std::size_t head = 0;
    std::size_t scan_from = 0;  // resume point for boundary search inside a body
    Phase phase = Phase::seeking_boundary;
    std::optional<std::size_t> expected_len;
    std::string part_content_type;
    std::uint64_t frames_emitted = 0;
    std::size_t buffer_cap = kDefaultMultipartBufferCap;
    bool poisoned = false;
    bool at_line_start = true;  // whether the byte before buffer[0] was '\n'

    [[nodiscard]] std::size_t pending() const noexcept { return buffer.size() - head; }
};

struct MultipartPart {
    std::string content_type;  // from the part headers, may be empty
    std::vector<std::uint8_t> payload;
};

// Extracts the boundary parameter of a multipart Content-Type header.
std::optional<std::string> boundary_from_content_type(std::string_view content_type);

MultipartParserState make_multipart_state(std::string_view boundary,
                                          std::size_t buffer_cap = kDefaultMultipartBufferCap);

// Feeds one chunk and returns every part body completed by it, in order.
// Output does not depend on how the stream is split into chunks. Part
// Content-Length is honoured when present; otherwise the body runs to the
// next boundary line. Boundary lines may omit the leading "--" and may be
// preceded by a bare LF instead of CRLF.
//
// Throws Error(ErrorCode::stream) once the pending bytes exceed buffer_cap;
// the state is then poisoned and every later call throws as well.
std::vector<MultipartPart> feed_multipart(MultipartParserState& state, std::span<const std::uint8_t> chunk);

}  // namespace camgrid::ingestion
