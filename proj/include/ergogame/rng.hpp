// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (counter, key), so streams can be split across threads without coordination.
#ifndef ERGOGAME_RNG_HPP_
#define ERGOGAME_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>

namespace ergogame {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// Uniform in [0, 1) from 53 bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

// Draws for one stream (e.g. one trajectory), addressed by (step, sub).
// Counter layout: (step, sub, stream_lo, stream_hi); key: (seed_lo, seed_hi).
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        lo_(static_cast<std::uint32_t>(stream)),
        hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  // Two independent uniforms for (step, sub).
  std::array<double, 2> uniforms(std::uint32_t step, std::uint32_t sub) const {
    const PhiloxCounter out = philox4x32_10({step, sub, lo_, hi_}, key_);
    return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
  }

 private:
  PhiloxKey key_;
  std::uint32_t lo_, hi_;
};

// Exponential with the given rate from a uniform in [0, 1).
inline double exponential(double u, double rate) {
  return -std::log1p(-u) / rate;
}

}  // namespace ergogame

#endif  // ERGOGAME_RNG_HPP_
