#pragma once

#include <cstdint>
#include <initializer_list>

namespace ambipose {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Child seed for a (parent, stream index...) path. Distinct paths give
/// statistically independent seeds.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(parent);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ull));
  return s;
}

// Streams fanned out from a single global seed.
namespace seed_stream {
inline constexpr std::uint64_t kDataset = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kSampling = 3;
inline constexpr std::uint64_t kShuffle = 4;
inline constexpr std::uint64_t kEval = 5;
}  // namespace seed_stream

}  // namespace ambipose
