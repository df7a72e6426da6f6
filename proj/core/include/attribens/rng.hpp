#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

namespace attribens {

// Counter-based generator (Philox-2x64, 10 rounds). Every 128-bit output block
// is a pure function of (seed, stream_id, counter), so any position in any
// stream can be regenerated without replaying earlier draws. That property is
// what lets noise records address per-step sampling noise by counter offset.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter = 0;
};

inline constexpr std::string_view kRngAlgorithmId = "philox2x64-10";

struct Block128 {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
};

// One Philox block at an absolute position; does not touch any state.
Block128 philox_block(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter) noexcept;

// Sequential draws. The stream is a value; callers own their copy.
std::uint64_t next_u64(RngStream& s) noexcept;

// Uniform in [0, 1), 53-bit resolution.
double next_unit(RngStream& s) noexcept;

// Unbiased uniform integer in [0, bound); bound must be positive.
std::uint64_t next_below(RngStream& s, std::uint64_t bound);

// Standard normals via Box-Muller, two per block. Consumes (count+1)/2 blocks
// so the counter advance is predictable for random access.
void fill_gaussian(RngStream& s, double* out, std::size_t count) noexcept;

// Number of counter blocks fill_gaussian(count) consumes.
constexpr std::uint64_t gaussian_blocks(std::size_t count) noexcept {
  return (static_cast<std::uint64_t>(count) + 1) / 2;
}

// Derives an unrelated seed for a sub-purpose (splitmix64 finalizer mix).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

}  // namespace attribens
