#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace camgrid {

// 64-bit FNV-1a. Not cryptographic; used for content identity and liveness
// evidence, where accidental collisions are the only concern.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string to_hex(std::uint64_t value);
std::string to_hex(std::span<const std::uint8_t> bytes);

std::string payload_hash(std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::string base64_decode(std::string_view text);

}  // namespace camgrid
