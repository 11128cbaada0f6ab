#pragma once

// Counter-based random numbers (Philox4x32-10). Every draw is a pure function
// of (seed, counter), so results do not depend on scheduling.

#include <array>
#include <cstdint>

namespace sdiff {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

/// Independent streams sharing one seed.
enum class Stream : std::uint32_t {
  noise = 1,
  initial_positions = 2,
  test = 3,
};

struct RngAddress {
  Stream stream = Stream::noise;
  std::uint64_t path = 0;
  std::uint32_t step = 0;
  std::uint32_t index = 0;
};

/// Two independent standard normals (Box-Muller on one Philox block).
std::array<double, 2> normal_pair(std::uint64_t seed, const RngAddress& at);
/// Two independent uniforms on (0, 1).
std::array<double, 2> uniform_pair(std::uint64_t seed, const RngAddress& at);

}  // namespace sdiff
