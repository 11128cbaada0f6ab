#include <doctest.h>

#include <cmath>

#include "sdiff/algebra.hpp"
#include "sdiff/error.hpp"
#include "sdiff/json_io.hpp"

using namespace sdiff;

namespace {
const SobolevIndex s0(0.0);
FieldCoeffs A(int k1, int k2, SobolevIndex s = s0) { return FieldCoeffs::basis(BasisKind::A, Mode(k1, k2), s); }
FieldCoeffs B(int k1, int k2, SobolevIndex s = s0) { return FieldCoeffs::basis(BasisKind::B, Mode(k1, k2), s); }
}  // namespace

TEST_CASE("basis evaluation") {
  const TangentVec2 v = synth(A(1, 0), {0.4, 1.3});
  CHECK(v.v1 == doctest::Approx(0.0));
  CHECK(v.v2 == doctest::Approx(-std::cos(0.4)));
  const TangentVec2 w = synth(B(1, 1, SobolevIndex(1.0)), {0.2, 0.5});
  CHECK(w.v1 == doctest::Approx(std::sin(0.7) / 2.0));
  CHECK(w.v2 == doctest::Approx(-std::sin(0.7) / 2.0));
}

TEST_CASE("bracket of A(1,0) and A(0,1)") {
  const FieldCoeffs b = bracket(A(1, 0), A(0, 1));
  CHECK(b.coeff(BasisKind::B, Mode(1, 1)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(b.coeff(BasisKind::B, Mode(1, -1)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(b.coeff(BasisKind::A, Mode(1, 1)) == 0.0);
}

TEST_CASE("bracket with a constant field") {
  const FieldCoeffs b = bracket(FieldCoeffs::constant(1.0, 0.0, s0), A(1, 0));
  CHECK(b.coeff(BasisKind::B, Mode(1, 0)) == -1.0);
  CHECK(bracket(A(2, 1), A(2, 1)).max_abs() == 0.0);
}

TEST_CASE("brackets need equal Sobolev indices") {
  CHECK_THROWS_AS(bracket(A(1, 0), A(0, 1, SobolevIndex(1.0))), Error);
}

TEST_CASE("inner product orthonormality") {
  CHECK(inner_product(A(1, 2), A(1, 2)) == 1.0);
  CHECK(inner_product(A(1, 2), B(1, 2)) == 0.0);
  CHECK(norm(A(1, 0) + B(0, 1)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("divergence vanishes") {
  FieldCoeffs u = A(1, 2) + 0.3 * B(2, -1);
  u.add(BasisKind::A, Mode(3, 0), 0.7);
  CHECK(std::abs(divergence(u, {0.3, 2.2})) < 1e-14);
}

TEST_CASE("curl and analyze round trip") {
  FieldCoeffs u(SobolevIndex(1.0));
  u.add(BasisKind::A, Mode(1, 1), 0.3);
  u.add(BasisKind::B, Mode(0, 2), -1.2);
  u.add(BasisKind::A, Mode(2, -1), 0.5);
  const FieldCoeffs back = analyze(curl(u), SobolevIndex(1.0), 3.0);
  CHECK((back - u).max_abs() < 1e-14);
  CHECK_THROWS_AS(analyze(curl(u), SobolevIndex(1.0), 1.5), Error);
  CHECK(analyze(curl(u), SobolevIndex(1.0), 1.5, BandPolicy::truncate).max_mode_norm() <= 1.5);
}

TEST_CASE("trig polynomial derivatives") {
  const TrigPolynomial f = TrigPolynomial::cos_mode({1, 1});
  CHECK(f.laplacian({0.3, 0.4}) == doctest::Approx(-2.0 * std::cos(0.7)));
  CHECK(f.gradient({0.3, 0.4})[0] == doctest::Approx(-std::sin(0.7)));
}

TEST_CASE("JSON serialisation") {
  FieldCoeffs u(SobolevIndex(0.5));
  u.add(BasisKind::B, Mode(2, -1), 0.25);
  u.add(BasisKind::A, Mode(0, 1), -1.5);
  u.set_const(0.1, 0.0);
  const std::string text = to_json(u);
  CHECK(text == R"({"const":[0.1,0.0],"modes":[[0,1,-1.5,0.0],[2,-1,0.0,0.25]],"s":0.5})");
  const FieldCoeffs v = field_from_json(text);
  CHECK((v - u).max_abs() == 0.0);
  CHECK(v.s() == u.s());
  CHECK_THROWS_AS(field_from_json(R"({"s":0,"const":[0,0],"modes":[[0,-1,1,0]]})"), Error);
}
