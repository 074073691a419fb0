#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace protvec {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a; `state` allows incremental hashing.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffset) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::uint32_t crc32(std::span<const unsigned char> bytes);

/// Lower-case 16-digit hex rendering.
std::string hex64(std::uint64_t value);

}  // namespace protvec
