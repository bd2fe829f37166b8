#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace stopwise::detail {

/// Rounds to a 1e-12 lattice; large magnitudes fall back to the bit pattern.
inline std::int64_t quantize(double v) {
  if (std::abs(v) < 9.0e6) return std::llround(v * 1e12);
  return std::bit_cast<std::int64_t>(v);
}

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::int64_t v : key) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

inline std::string fmt12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace stopwise::detail
