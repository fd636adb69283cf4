#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace slatejudge {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// First 8 bytes of SHA-256(data) read big-endian. Stable across platforms.
uint64_t sha256_u64(std::string_view data);

// 64-bit FNV-1a.
constexpr uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// True for a 64-character lowercase hex string.
bool is_hex_digest(std::string_view key);

}  // namespace slatejudge
