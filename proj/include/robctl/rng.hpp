#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace robctl {

// Philox4x32-10 (Salmon et al. counter-based generator).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * ctr[2];
      ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
             std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
    }
    return ctr;
  }
};

// Two standard normals for (seed, stream, path, step). Each tuple maps to one
// Philox block, so a path's draws never depend on how many paths or threads run.
struct NormalPair {
  double z1, z2;
};

inline NormalPair normal_pair(std::uint64_t seed, std::uint32_t stream, std::uint64_t path,
                              std::uint32_t step) {
  const auto out = Philox4x32::generate(
      {step, stream, std::uint32_t(path), std::uint32_t(path >> 32)},
      {std::uint32_t(seed), std::uint32_t(seed >> 32)});
  const std::uint64_t a = (std::uint64_t(out[0]) << 32) | out[1];
  const std::uint64_t b = (std::uint64_t(out[2]) << 32) | out[3];
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = (double(a >> 11) + 0.5) * scale;  // (0,1)
  const double u2 = double(b >> 11) * scale;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double ang = 6.283185307179586476925 * u2;
  return {r * std::cos(ang), r * std::sin(ang)};
}

// Uniform on [0, 1) indexed by (seed, stream, index); for parameter sampling.
inline double uniform01(std::uint64_t seed, std::uint32_t stream, std::uint64_t index) {
  const auto out = Philox4x32::generate(
      {0xFFFFFFFFu, stream, std::uint32_t(index), std::uint32_t(index >> 32)},
      {std::uint32_t(seed), std::uint32_t(seed >> 32)});
  const std::uint64_t a = (std::uint64_t(out[0]) << 32) | out[1];
  return double(a >> 11) / 9007199254740992.0;
}

}  // namespace robctl
