#include "attribens/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace attribens {
namespace {

constexpr std::uint64_t kPhiloxMul = 0xD2B74407B1CE6E93ULL;
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) noexcept {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

Block128 philox_block(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter) noexcept {
  // Counter block: x0 = counter, x1 = stream id. Key = seed.
  std::uint64_t x0 = counter;
  std::uint64_t x1 = stream_id;
  std::uint64_t key = seed;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi, lo;
    mulhilo(kPhiloxMul, x0, hi, lo);
    x0 = hi ^ key ^ x1;
    x1 = lo;
    key += kWeyl;
  }
  return Block128{x0, x1};
}

std::uint64_t next_u64(RngStream& s) noexcept {
  // Half a block per draw would waste nothing at our scale, but keeping one
  // draw == one block keeps counter accounting trivial.
  Block128 b = philox_block(s.seed, s.stream_id, s.counter++);
  return b.lo ^ (b.hi << 1 | b.hi >> 63);
}

double next_unit(RngStream& s) noexcept {
  return static_cast<double>(next_u64(s) >> 11) * 0x1.0p-53;
}

std::uint64_t next_below(RngStream& s, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
  // Rejection on the top of the range keeps the draw exactly uniform.
  const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
  for (;;) {
    std::uint64_t r = next_u64(s);
    if (r < limit) return r % bound;
  }
}

void fill_gaussian(RngStream& s, double* out, std::size_t count) noexcept {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::size_t i = 0;
  while (i < count) {
    Block128 b = philox_block(s.seed, s.stream_id, s.counter++);
    // u1 in (0,1] so the log is finite; u2 in [0,1).
    const double u1 = (static_cast<double>(b.lo >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b.hi >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i++] = r * std::cos(kTwoPi * u2);
    if (i < count) out[i++] = r * std::sin(kTwoPi * u2);
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t z = seed + kWeyl * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace attribens
