#include <doctest.h>

#include <cmath>

#include "sdiff/error.hpp"
#include "sdiff/lattice.hpp"

using namespace sdiff;

TEST_CASE("canonical folding") {
  const CanonicalResult r = canonical({-1, 0});
  CHECK(r.mode == Mode(1, 0));
  CHECK(r.sign_a == -1);
  CHECK(r.sign_b == 1);
  const CanonicalResult q = canonical({0, -2});
  CHECK(q.mode == Mode(0, 2));
  CHECK(q.sign_a == -1);
  CHECK(canonical({2, -3}).mode == Mode(2, -3));
  CHECK(canonical({2, -3}).sign_a == 1);
  CHECK_THROWS_AS(canonical({0, 0}), Error);
}

TEST_CASE("modes are half-lattice representatives") {
  CHECK_NOTHROW(Mode(0, 1));
  CHECK_NOTHROW(Mode(1, -5));
  CHECK_THROWS_AS(Mode(0, -1), Error);
  CHECK_THROWS_AS(Mode(-1, 3), Error);
  CHECK_THROWS_AS(Mode(0, 0), Error);
}

TEST_CASE("truncation balls") {
  CHECK(modes_in_ball(1).size() == 2);
  const TruncationBall b2 = modes_in_ball(2);
  REQUIRE(b2.size() == 6);
  CHECK(b2.modes().front() == Mode(0, 1));
  CHECK(b2.modes().back() == Mode(2, 0));
  CHECK(b2.contains({-1, 1}));
  CHECK_FALSE(b2.contains({2, 1}));
  CHECK(modes_in_ball(3).size() == 14);
  CHECK(modes_in_ball(0.5).empty());
}

TEST_CASE("c_N frozen values") {
  const double s0[] = {1, 3, 7, 12, 20};
  const double s1[] = {1, 1.75, 2.3861111111111, 2.8024572649573, 3.1956598793};
  const double s2[] = {1, 1.3125, 1.4204706790123, 1.4562112485, 1.4760180835};
  for (int n = 1; n <= 5; ++n) {
    CHECK(c_constant(SobolevIndex(0), n) == doctest::Approx(s0[n - 1]).epsilon(1e-14));
    CHECK(c_constant(SobolevIndex(1), n) == doctest::Approx(s1[n - 1]).epsilon(1e-10));
    CHECK(c_constant(SobolevIndex(2), n) == doctest::Approx(s2[n - 1]).epsilon(1e-10));
  }
  CHECK(c_constant_component(SobolevIndex(0.5), 4.0, 1) ==
        doctest::Approx(c_constant_component(SobolevIndex(0.5), 4.0, 2)).epsilon(1e-12));
}

TEST_CASE("alpha and beta pair sums") {
  const SobolevIndex s(1.0);
  const LatticePoint k{1, 2}, l{-3, 1};
  const double pr = std::pow(k.norm() * l.norm(), 2.0);
  CHECK(alpha(s, k, l) + alpha(s, l, k) == doctest::Approx((k + l).norm_sq() / (2.0 * pr)));
  CHECK(beta(s, k, l) + beta(s, l, k) == doctest::Approx((k - l).norm_sq() / (2.0 * pr)));
  CHECK(beta(s, k, k) == 0.0);
  CHECK(area_form({1, 0}, {0, 1}) == 1);
}

TEST_CASE("negative Sobolev index rejected") {
  CHECK_THROWS_AS(SobolevIndex(-0.5), Error);
}
