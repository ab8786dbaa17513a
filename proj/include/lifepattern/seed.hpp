#pragma once

#include <cstdint>
#include <string_view>

namespace lifepattern {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Per-module seed: mix64(mix64(global ^ fnv1a64(module)) + index).
constexpr std::uint64_t derive_seed(std::uint64_t global, std::string_view module,
                                    std::uint64_t index = 0) {
  return mix64(mix64(global ^ fnv1a64(module)) + index);
}

}  // namespace lifepattern
