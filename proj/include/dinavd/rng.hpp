#pragma once

#include <array>
#include <cstdint>

namespace dinavd {

/// xoshiro256** seeded through splitmix64.
///
/// The catalog generators are defined in terms of this stream, so the exact
/// bit sequence matters: see docs/catalog.txt for the reference definition.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform in [0, 1): top 53 bits of next() times 2^-53.
  double uniform();

  /// Standard normal via the cosine branch of Box-Muller; consumes two
  /// uniforms per draw.
  double normal();

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace dinavd
