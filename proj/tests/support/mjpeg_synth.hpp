#pragma once

// Synthesizes multipart/x-mixed-replace streams with known part payloads.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace test_synth {

struct SyntheticStream {
    std::string boundary;
    std::vector<std::vector<std::uint8_t>> payloads;
    std::vector<std::uint8_t> bytes;
};

// Payloads look like JPEGs (FF D8 FF ... FF D9) with random interiors that
// include CR, LF and '-' bytes. Parts alternate between carrying a
// Content-Length and relying on the next boundary.
inline SyntheticStream make_stream(std::uint64_t seed, int frames, std::size_t max_payload = 4096,
                                   bool leading_crlf = true) {
    std::mt19937_64 rng(seed);
    SyntheticStream s;
    s.boundary = "camgridframe" + std::to_string(seed % 1000);
    auto push = [&](std::string_view text) { s.bytes.insert(s.bytes.end(), text.begin(), text.end()); };
    if (leading_crlf) push("\r\n");
    std::uniform_int_distribution<std::size_t> len_dist(16, max_payload);
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<int> special(0, 9);
    for (int i = 0; i < frames; ++i) {
        std::vector<std::uint8_t> p{0xFF, 0xD8, 0xFF, 0xE0};
        const auto len = len_dist(rng);
        while (p.size() + 2 < len) {
            switch (special(rng)) {
                case 0: p.push_back('\r'); break;
                case 1: p.push_back('\n'); break;
                case 2: p.push_back('-'); break;
                default: p.push_back(static_cast<std::uint8_t>(byte(rng)));
            }
        }
        p.push_back(0xFF);
        p.push_back(0xD9);
        push("--" + s.boundary + "\r\nContent-Type: image/jpeg\r\n");
        if (i % 2 == 0) push("Content-Length: " + std::to_string(p.size()) + "\r\n");
        push("\r\n");
        s.bytes.insert(s.bytes.end(), p.begin(), p.end());
        push("\r\n");
        s.payloads.push_back(std::move(p));
    }
    push("--" + s.boundary + "--\r\n");
    return s;
}

}  // namespace test_synth
