#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdiff/rng.hpp"
#include "sdiff/stats.hpp"

using namespace sdiff;

TEST_CASE("Philox4x32-10 known answers") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
}

TEST_CASE("draws are pure functions of seed and address") {
  const RngAddress a{Stream::noise, 12345, 7, 3};
  CHECK(normal_pair(9, a) == normal_pair(9, a));
  CHECK(normal_pair(9, a) != normal_pair(10, a));
  RngAddress b = a;
  b.stream = Stream::test;
  CHECK(normal_pair(9, a) != normal_pair(9, b));
}

TEST_CASE("uniforms in (0, 1), normals standardised") {
  std::vector<double> z;
  for (std::uint32_t i = 0; i < 20000; ++i) {
    const auto u = uniform_pair(1, {Stream::test, 0, 0, i});
    CHECK(u[0] > 0.0);
    CHECK(u[1] < 1.0);
    const auto n = normal_pair(1, {Stream::test, 0, 0, i});
    z.push_back(n[0]);
    z.push_back(n[1]);
  }
  const Estimate e = estimate_mean(z);
  CHECK(std::abs(e.mean) < 4.0 * e.se);
  std::vector<double> sq;
  for (double v : z) sq.push_back(v * v - 1.0);
  const Estimate v = estimate_mean(sq);
  CHECK(std::abs(v.mean) < 4.0 * v.se);
}
