#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace imbf {

// FNV-1a, 64-bit. This is the one hash the library uses everywhere a stable,
// documented value is needed: token identity, n-gram feature buckets, and
// file fingerprints.
inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

// Hash of a token-id tuple: each id contributes its 8 bytes little-endian.
inline uint64_t fnv1a64_ids(const uint64_t* ids, size_t count) {
  uint64_t h = kFnvOffset;
  for (size_t i = 0; i < count; ++i) {
    uint64_t v = ids[i];
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<unsigned char>(v >> (8 * b));
      h *= kFnvPrime;
    }
  }
  return h;
}

}  // namespace imbf
