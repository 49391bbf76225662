#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace birkhoff {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// Stateless: the output is a pure function of (key, counter).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                 std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Counter-based generator. Every draw is addressed by (sample index, word
// index); the experiment seed and a stream id select the key. Two workers that
// draw the same address always see the same bits, so partitioning samples
// across threads cannot change any result.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint64_t bits64(std::uint64_t index, std::uint64_t word) const {
    const std::uint64_t block = word >> 1;
    const auto out = philox4x32_10({static_cast<std::uint32_t>(block),
                                    static_cast<std::uint32_t>(block >> 32),
                                    static_cast<std::uint32_t>(index),
                                    static_cast<std::uint32_t>(index >> 32)},
                                   key_);
    const std::size_t h = (word & 1u) * 2;
    return (static_cast<std::uint64_t>(out[h + 1]) << 32) | out[h];
  }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform(std::uint64_t index, std::uint64_t word) const {
    return (static_cast<double>(bits64(index, word) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller from words 2w and 2w+1.
  double normal(std::uint64_t index, std::uint64_t word) const {
    const double u1 = uniform(index, 2 * word);
    const double u2 = uniform(index, 2 * word + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::array<std::uint32_t, 2> key_{};
};

}  // namespace birkhoff
