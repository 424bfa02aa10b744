#include "camgrid/ingestion/multipart.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>

#include "camgrid/core/error.hpp"

namespace camgrid::ingestion {

namespace {

using Phase = MultipartParserState::Phase;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Finds `token` in [from, end) of the buffer.
std::size_t find_token(const std::vector<std::uint8_t>& buf, std::size_t from, std::string_view token) {
    if (from >= buf.size() || buf.size() - from < token.size()) return std::string_view::npos;
    auto first = buf.begin() + static_cast<std::ptrdiff_t>(from);
    auto it = std::search(first, buf.end(),
                          std::boyer_moore_horspool_searcher(token.begin(), token.end()));
    if (it == buf.end()) return std::string_view::npos;
    return static_cast<std::size_t>(it - buf.begin());
}

// Start of the boundary line containing the token at `at`: back over any run
// of dashes. Returns npos when the token is not at the start of a line.
std::size_t boundary_line_start(const MultipartParserState& st, std::size_t at) {
    std::size_t p = at;
    while (p > st.head && st.buffer[p - 1] == '-') --p;
    const bool line_start = p == 0 ? st.at_line_start : st.buffer[p - 1] == '\n';
    return line_start ? p : std::string_view::npos;
}

void compact(MultipartParserState& st) {
    if (st.head == 0) return;
    if (st.head == st.buffer.size()) {
        st.at_line_start = st.buffer[st.head - 1] == '\n';
        st.buffer.clear();
        st.scan_from = 0;
        st.head = 0;
        return;
    }
    if (st.head > (1u << 16) && st.head * 2 > st.buffer.size()) {
        st.at_line_start = st.buffer[st.head - 1] == '\n';
        st.buffer.erase(st.buffer.begin(), st.buffer.begin() + static_cast<std::ptrdiff_t>(st.head));
        st.scan_from = st.scan_from > st.head ? st.scan_from - st.head : 0;
        st.head = 0;
    }
}

void parse_part_headers(MultipartParserState& st, std::string_view block) {
    st.expected_len.reset();
    st.part_content_type.clear();
    while (!block.empty()) {
        const auto nl = block.find('\n');
        auto line = trim(block.substr(0, nl));
        block = nl == std::string_view::npos ? std::string_view{} : block.substr(nl + 1);
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        const auto name = lower(trim(line.substr(0, colon)));
        const auto value = trim(line.substr(colon + 1));
        if (name == "content-length") {
            std::size_t len = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), len);
            if (ec == std::errc{} && ptr == value.data() + value.size()) st.expected_len = len;
        } else if (name == "content-type") {
            st.part_content_type = std::string(value);
        }
    }
}

// One parsing step. Returns false when more input is needed.
bool step(MultipartParserState& st, std::vector<MultipartPart>& out) {
    const std::string_view token = st.boundary;
    auto& buf = st.buffer;
    switch (st.phase) {
        case Phase::seeking_boundary: {
            std::size_t from = st.head;
            while (true) {
                const auto at = find_token(buf, from, token);
                if (at == std::string_view::npos) {
                    // Keep a tail long enough to hold a split boundary line start.
                    const std::size_t keep = token.size() + 8;
                    if (buf.size() - st.head > keep) {
                        std::size_t new_head = buf.size() - keep;
                        // Never drop dashes that may belong to the next boundary.
                        while (new_head > st.head && buf[new_head - 1] == '-') --new_head;
                        st.head = new_head;
                    }
                    return false;
                }
                if (boundary_line_start(st, at) == std::string_view::npos) {
                    from = at + 1;
                    continue;
                }
                const auto after = at + token.size();
                auto nl = std::find(buf.begin() + static_cast<std::ptrdiff_t>(after), buf.end(), '\n');
                if (nl == buf.end()) {
                    st.head = boundary_line_start(st, at);
                    return false;
                }
                const bool closing = after + 1 < buf.size() && buf[after] == '-' && buf[after + 1] == '-';
                st.head = static_cast<std::size_t>(nl - buf.begin()) + 1;
                st.phase = closing ? Phase::seeking_boundary : Phase::reading_headers;
                return true;
            }
        }
        case Phase::reading_headers: {
            // A blank line right away means a part without headers.
            if (st.pending() >= 1 && buf[st.head] == '\n') {
                ++st.head;
                parse_part_headers(st, {});
            } else if (st.pending() >= 2 && buf[st.head] == '\r' && buf[st.head + 1] == '\n') {
                st.head += 2;
                parse_part_headers(st, {});
            } else {
                const std::string_view view(reinterpret_cast<const char*>(buf.data() + st.head), st.pending());
                auto end = view.find("\n\r\n");
                std::size_t skip = 3;
                const auto lf_end = view.find("\n\n");
                if (lf_end != std::string_view::npos && (end == std::string_view::npos || lf_end < end)) {
                    end = lf_end;
                    skip = 2;
                }
                if (end == std::string_view::npos) return false;
                parse_part_headers(st, view.substr(0, end + 1));
                st.head += end + skip;
            }
            if (st.expected_len && *st.expected_len > st.buffer_cap) {
                st.poisoned = true;
                throw Error(ErrorCode::stream, "multipart part length exceeds buffer cap");
            }
            st.phase = Phase::reading_body;
            st.scan_from = st.head;
            return true;
        }
        case Phase::reading_body: {
            if (st.expected_len) {
                if (st.pending() < *st.expected_len) return false;
                const auto first = buf.begin() + static_cast<std::ptrdiff_t>(st.head);
                out.push_back({st.part_content_type,
                               std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(*st.expected_len))});
                st.head += *st.expected_len;
            } else {
                std::size_t from = std::max(st.scan_from, st.head);
                std::size_t body_end = std::string_view::npos;
                std::size_t line_start = 0;
                while (true) {
                    const auto at = find_token(buf, from, token);
                    if (at == std::string_view::npos) break;
                    const auto ls = boundary_line_start(st, at);
                    if (ls != std::string_view::npos) {
                        line_start = ls;
                        body_end = ls;
                        if (body_end > st.head) --body_end;  // the '\n' ending the body
                        if (body_end > st.head && buf[body_end - 1] == '\r') --body_end;
                        break;
                    }
                    from = at + 1;
                }
                if (body_end == std::string_view::npos) {
                    // Resume where a split boundary could still begin.
                    const std::size_t back = token.size() + 8;
                    st.scan_from = buf.size() > back ? std::max(st.head, buf.size() - back) : st.head;
                    return false;
                }
                const auto first = buf.begin() + static_cast<std::ptrdiff_t>(st.head);
                out.push_back({st.part_content_type,
                               std::vector<std::uint8_t>(first, buf.begin() + static_cast<std::ptrdiff_t>(body_end))});
                st.head = line_start;
            }
            ++st.frames_emitted;
            st.phase = Phase::seeking_boundary;
            st.expected_len.reset();
            return true;
        }
    }
    return false;
}

}  // namespace

std::optional<std::string> boundary_from_content_type(std::string_view content_type) {
    const auto low = lower(content_type);
    auto pos = low.find("boundary=");
    if (pos == std::string::npos) return std::nullopt;
    auto value = content_type.substr(pos + 9);
    value = value.substr(0, value.find(';'));
    value = trim(value);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    while (!value.empty() && value.front() == '-') value.remove_prefix(1);
    if (value.empty()) return std::nullopt;
    return std::string(value);
}

MultipartParserState make_multipart_state(std::string_view boundary, std::size_t buffer_cap) {
    while (!boundary.empty() && boundary.front() == '-') boundary.remove_prefix(1);
    if (boundary.empty()) throw Error(ErrorCode::invalid_argument, "multipart boundary must be non-empty");
    MultipartParserState st;
    st.boundary = std::string(boundary);
    st.buffer_cap = buffer_cap;
    return st;
}

std::vector<MultipartPart> feed_multipart(MultipartParserState& st, std::span<const std::uint8_t> chunk) {
    if (st.poisoned) throw Error(ErrorCode::stream, "multipart parser is poisoned");
    std::vector<MultipartPart> out;
    if (chunk.empty()) return out;
    st.buffer.insert(st.buffer.end(), chunk.begin(), chunk.end());
    while (step(st, out)) {
    }
    compact(st);
    if (st.pending() > st.buffer_cap) {
        st.poisoned = true;
        throw Error(ErrorCode::stream, "multipart buffer cap exceeded without a boundary",
                    nlohmann::json{{"pending", st.pending()}, {"cap", st.buffer_cap}});
    }
    return out;
}

}  // namespace camgrid::ingestion
