#pragma once

// Counter-based generation: Philox4x32-10 (Salmon et al., SC'11). Every draw
// is a pure function of (seed, purpose, agent, group, step), so draws can be
// evaluated in any order or in parallel and still reproduce exactly.

#include <array>
#include <cstdint>

namespace lfdyn {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round != 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Separates independent streams that share (agent, group, step).
enum class DrawPurpose : std::uint32_t {
  degree = 1,
  initial_opinion = 2,
  test_support = 0xFF,
};

struct RngKey {
  std::uint64_t seed{0};

  bool operator==(const RngKey&) const = default;
};

/// Uniform double in [0, 1) with 53 random bits.
///
/// Counter words: (agent, group, low 32 bits of step, purpose << 24 | bits
/// 32..55 of step); key words: the two halves of the seed.
constexpr double uniform01(RngKey key, DrawPurpose purpose, std::uint32_t agent,
                           std::uint32_t group, std::uint64_t step) {
  const Philox4x32::Counter ctr{
      agent, group, static_cast<std::uint32_t>(step),
      (static_cast<std::uint32_t>(purpose) << 24) |
          static_cast<std::uint32_t>((step >> 32) & 0xFFFFFFu)};
  const Philox4x32::Key k{static_cast<std::uint32_t>(key.seed),
                          static_cast<std::uint32_t>(key.seed >> 32)};
  const auto out = Philox4x32::generate(ctr, k);
  const std::uint64_t bits = (std::uint64_t{out[0]} << 32 | out[1]) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace lfdyn
