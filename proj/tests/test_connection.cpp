#include <doctest.h>

#include <cmath>

#include "sdiff/connection.hpp"
#include "sdiff/error.hpp"

using namespace sdiff;

namespace {
FieldCoeffs A(int k1, int k2, double s = 0.0) {
  return FieldCoeffs::basis(BasisKind::A, Mode(k1, k2), SobolevIndex(s));
}
FieldCoeffs B(int k1, int k2, double s = 0.0) {
  return FieldCoeffs::basis(BasisKind::B, Mode(k1, k2), SobolevIndex(s));
}
}  // namespace

TEST_CASE("christoffel examples at s = 0") {
  const double v = 1.0 / (2.0 * std::sqrt(2.0));
  const FieldCoeffs g = covariant_derivative(A(1, 0), A(0, 1));
  CHECK(g.coeff(BasisKind::B, Mode(1, 1)) == doctest::Approx(v).epsilon(1e-15));
  CHECK(g.coeff(BasisKind::B, Mode(1, -1)) == doctest::Approx(v).epsilon(1e-15));
  const FieldCoeffs h = covariant_derivative(B(1, 0), A(0, 1));
  CHECK(h.coeff(BasisKind::A, Mode(1, 1)) == doctest::Approx(-v).epsilon(1e-15));
  CHECK(h.coeff(BasisKind::A, Mode(1, -1)) == doctest::Approx(-v).epsilon(1e-15));
  CHECK(christoffel(SobolevIndex(0.0), BasisKind::A, Mode(1, 0), BasisKind::A, Mode(1, 0)).empty());
}

TEST_CASE("connection rejects constants") {
  CHECK_THROWS_AS(christoffel(SobolevIndex(0.0), BasisKind::Const1, Mode(1, 0), BasisKind::A,
                              Mode(1, 0)),
                  Error);
  CHECK_THROWS_AS(covariant_derivative(FieldCoeffs::constant(1, 0, SobolevIndex(0.0)), A(1, 0)),
                  Error);
}

TEST_CASE("torsion-free and metric compatible on a sample") {
  for (double s : {0.0, 1.0, 2.0}) {
    const FieldCoeffs x = A(1, 2, s) + 0.5 * B(2, -1, s);
    const FieldCoeffs y = B(0, 1, s) - 0.3 * A(1, 1, s);
    const FieldCoeffs z = A(1, -1, s) + B(1, 2, s);
    CHECK((covariant_derivative(x, y) - covariant_derivative(y, x) - bracket(x, y)).max_abs() <
          1e-14);
    CHECK(std::abs(inner_product(covariant_derivative(x, y), z) +
                   inner_product(y, covariant_derivative(x, z))) < 1e-14);
  }
}

TEST_CASE("Koszul formula holds with the left convention") {
  const FieldCoeffs x = A(1, 0, 1.0), y = B(1, 1, 1.0), z = A(0, 2, 1.0) + B(2, 1, 1.0);
  const double lhs = 2.0 * inner_product(covariant_derivative(x, y), z);
  CHECK(lhs == doctest::Approx(koszul_rhs(x, y, z, KoszulConvention::left)).epsilon(1e-13));
}

TEST_CASE("christoffel table CSV") {
  const ChristoffelTable t(SobolevIndex(0.0), 1.0);
  const std::string csv = t.to_csv();
  CHECK(csv.rfind("kind_k,k1,k2,kind_l,l1,l2,kind_t,t1,t2,coeff\n", 0) == 0);
  CHECK(t.lookup({BasisKind::A, Mode(1, 0)}, {BasisKind::A, Mode(0, 1)}).size() == 2);
  CHECK(t.lookup({BasisKind::A, Mode(1, 0)}, {BasisKind::A, Mode(1, 0)}).empty());
}

TEST_CASE("Ricci closed form at s = 0") {
  CHECK(ricci_closed_form_s0(Mode(1, 0), 2.0) == doctest::Approx(-1.9).epsilon(1e-15));
  CHECK(ricci_closed_form_s0(Mode(1, 0), 1.0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(ricci_closed_form_s0(Mode(1, 0), 4.0) == doctest::Approx(-8.348597285068).epsilon(1e-12));
  CHECK(ricci_closed_form_s0(Mode(1, 1), 4.0) == doctest::Approx(-15.212460842325).epsilon(1e-12));
}

TEST_CASE("truncated Ricci is the negative closed form") {
  for (const Mode& j : {Mode(1, 0), Mode(0, 1), Mode(1, 1)}) {
    for (double n : {2.0, 4.0}) {
      const FieldCoeffs r = ricci_truncated(n, FieldCoeffs::basis(BasisKind::A, j, SobolevIndex(0.0)));
      CHECK(r.coeff(BasisKind::A, j) ==
            doctest::Approx(-ricci_closed_form_s0(j, n)).epsilon(1e-12));
      CHECK((r - r.coeff(BasisKind::A, j) * FieldCoeffs::basis(BasisKind::A, j, SobolevIndex(0.0)))
                .max_abs() < 1e-14);
    }
  }
}

TEST_CASE("s = 1 frozen values on A(1,1), N = 3") {
  const FieldCoeffs u = A(1, 1, 1.0);
  CHECK(laplace_beltrami_truncated(3.0, u).coeff(BasisKind::A, Mode(1, 1)) ==
        doctest::Approx(-4.919752011174580).epsilon(1e-12));
  CHECK(ricci_truncated(3.0, u).coeff(BasisKind::A, Mode(1, 1)) ==
        doctest::Approx(-5.067281800126942).epsilon(1e-12));
}

TEST_CASE("diagonal operator eigenvalue") {
  for (double s : {0.0, 1.0}) {
    for (double n : {2.0, 3.0, 5.0}) {
      const DiagonalReport d = diagonal_eigenvalue(SobolevIndex(s), n, BasisKind::B, Mode(2, 1));
      const double cn = c_constant(SobolevIndex(s), n);
      CHECK(d.diag_coeff == doctest::Approx(-cn * 5.0).epsilon(1e-12));
      CHECK(d.max_offdiag < 1e-12);
      CHECK(d.raw_sum == doctest::Approx(cn * 5.0).epsilon(1e-12));
    }
  }
  CHECK(bracket_square_sum(SobolevIndex(0.0), 2.0, {1, 1}) == doctest::Approx(6.0));
}
