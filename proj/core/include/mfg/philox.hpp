#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Every draw is a pure function of (key, counter), so simulations can be
// addressed as (seed, path, step, draw) and stay bit-reproducible no matter
// how work is split across threads.

namespace mfg::rng {

struct Philox4x32 {
  static constexpr std::uint32_t mult_a = 0xD2511F53u;
  static constexpr std::uint32_t mult_b = 0xCD9E8D57u;
  static constexpr std::uint32_t weyl_a = 0x9E3779B9u;
  static constexpr std::uint32_t weyl_b = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += weyl_a;
        key[1] += weyl_b;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(mult_a) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(mult_b) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// One addressed draw: 4 words of Philox output for (seed; c0..c3).
inline std::array<std::uint32_t, 4> philox4(std::uint64_t seed, std::uint32_t c0,
                                            std::uint32_t c1, std::uint32_t c2,
                                            std::uint32_t c3) {
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  return Philox4x32::block({c0, c1, c2, c3}, key);
}

/// Uniform double in [0, 1) with 53 random bits from one Philox block.
inline double uniform01(std::uint64_t seed, std::uint32_t c0, std::uint32_t c1,
                        std::uint32_t c2, std::uint32_t c3) {
  const auto w = philox4(seed, c0, c1, c2, c3);
  const std::uint64_t hi = static_cast<std::uint64_t>(w[0]) << 32 | w[1];
  return static_cast<double>(hi >> 11) * 0x1.0p-53;
}

/// Samples an index from a probability row by CDF inversion.
inline int sample_discrete(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

/// Sequential convenience stream over (seed, stream, step): step advances per draw.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint32_t stream_hi, std::uint32_t stream_lo)
      : seed_(seed), hi_(stream_hi), lo_(stream_lo) {}

  double next_uniform() { return uniform01(seed_, counter_++, 0, lo_, hi_); }

  int next_discrete(std::span<const double> probs) {
    return sample_discrete(probs, next_uniform());
  }

 private:
  std::uint64_t seed_;
  std::uint32_t hi_, lo_;
  std::uint32_t counter_ = 0;
};

}  // namespace mfg::rng
