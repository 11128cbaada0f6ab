#pragma once

// The Lie algebra of divergence-free vector fields on the torus, realised on
// the H^s-normalised basis
//   A^s_k = |k|^{-(s+1)} (k2, -k1) cos(k.theta),
//   B^s_k = |k|^{-(s+1)} (k2, -k1) sin(k.theta),
// plus the two constant fields. Fields are finite coefficient maps.

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdiff/lattice.hpp"

namespace sdiff {

enum class BasisKind { A, B, Const1, Const2 };

const char* to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& s);

struct TangentVec2 {
  double v1 = 0.0;
  double v2 = 0.0;
};

/// Point of the torus, components taken mod 2 pi by the evaluators.
struct Point2 {
  double t1 = 0.0;
  double t2 = 0.0;
};

/// Row-major 2x2 matrix; J[i][j] = d v_i / d theta_j.
using Mat2 = std::array<std::array<double, 2>, 2>;

constexpr Mat2 identity2() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }
inline double det(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

struct ModeCoeffs {
  double a = 0.0;
  double b = 0.0;
};

/// A/B basis element at a half-lattice mode.
struct BasisElement {
  BasisKind kind;
  Mode mode;
  auto operator<=>(const BasisElement&) const = default;
};

/// u = c1 d1 + c2 d2 + sum_k (a_k A^s_k + b_k B^s_k).
class FieldCoeffs {
 public:
  using Map = std::map<Mode, ModeCoeffs>;

  FieldCoeffs() = default;
  explicit FieldCoeffs(SobolevIndex s) : s_(s) {}

  static FieldCoeffs basis(BasisKind kind, Mode k, SobolevIndex s);
  static FieldCoeffs constant(double c1, double c2, SobolevIndex s);

  SobolevIndex s() const { return s_; }
  const Map& modes() const { return modes_; }
  std::array<double, 2> const_part() const { return const_; }
  bool has_const() const { return const_[0] != 0.0 || const_[1] != 0.0; }
  bool empty() const { return modes_.empty() && !has_const(); }

  double coeff(BasisKind kind, const Mode& k) const;
  double coeff(const BasisElement& e) const { return coeff(e.kind, e.mode); }

  /// Adds `value` to the coefficient of the basis element; entries whose two
  /// coefficients become exactly zero are erased.
  void add(BasisKind kind, const Mode& k, double value);
  void add(const BasisElement& e, double value) { add(e.kind, e.mode, value); }
  /// Adds value * (A or B)_q for an arbitrary nonzero lattice point q, folded
  /// with the reflection signs.
  void add_folded(BasisKind kind, LatticePoint q, double value);
  void set_const(double c1, double c2) { const_ = {c1, c2}; }

  /// Visit every A/B coefficient (nonzero ones) in lexicographic order.
  template <class F>
  void for_each(F&& f) const {
    for (const auto& [k, c] : modes_) {
      if (c.a != 0.0) f(BasisElement{BasisKind::A, k}, c.a);
      if (c.b != 0.0) f(BasisElement{BasisKind::B, k}, c.b);
    }
  }

  FieldCoeffs& operator+=(const FieldCoeffs& o);
  FieldCoeffs& operator-=(const FieldCoeffs& o);
  FieldCoeffs& operator*=(double c);
  friend FieldCoeffs operator+(FieldCoeffs a, const FieldCoeffs& b) { return a += b; }
  friend FieldCoeffs operator-(FieldCoeffs a, const FieldCoeffs& b) { return a -= b; }
  friend FieldCoeffs operator*(double c, FieldCoeffs a) { return a *= c; }

  /// The same vector field expressed in the H^{s'} basis.
  FieldCoeffs with_index(SobolevIndex target) const;
  /// Drops entries with both |a|, |b| <= tol.
  FieldCoeffs pruned(double tol) const;
  /// Keeps only modes inside the ball of radius n (constant part kept).
  FieldCoeffs truncated(double n) const;

  double max_abs() const;
  /// Largest |k| in the support (0 for empty / constant-only fields).
  double max_mode_norm() const;

 private:
  SobolevIndex s_{};
  Map modes_;
  std::array<double, 2> const_{0.0, 0.0};
};

TangentVec2 basis_eval(BasisKind kind, const Mode& k, SobolevIndex s, Point2 theta);
TangentVec2 synth(const FieldCoeffs& u, Point2 theta);
Mat2 synth_jacobian(const FieldCoeffs& u, Point2 theta);
double divergence(const FieldCoeffs& u, Point2 theta);

double inner_product(const FieldCoeffs& u, const FieldCoeffs& v);
double norm(const FieldCoeffs& u);
/// Normalised L2 energy mean_theta |u|^2 (constants count with weight 1,
/// each oscillating coefficient with weight |k|^{-2s}/2).
double l2_energy(const FieldCoeffs& u);

/// Structure constants: [X, Y] = (X.grad) Y - (Y.grad) X, never truncated.
FieldCoeffs bracket(const FieldCoeffs& u, const FieldCoeffs& v);

/// Scalar trigonometric polynomial
///   f = c0 + sum_{k in half-lattice} (C_k cos k.theta + S_k sin k.theta).
class TrigPolynomial {
 public:
  struct CosSin {
    double c = 0.0;
    double s = 0.0;
  };

  TrigPolynomial() = default;

  static TrigPolynomial cos_mode(LatticePoint q, double coef = 1.0);
  static TrigPolynomial sin_mode(LatticePoint q, double coef = 1.0);
  static TrigPolynomial constant(double c0);

  void add_cos(LatticePoint q, double coef);
  void add_sin(LatticePoint q, double coef);
  double mean() const { return c0_; }
  const std::map<Mode, CosSin>& terms() const { return terms_; }

  double eval(Point2 theta) const;
  std::array<double, 2> gradient(Point2 theta) const;
  Mat2 hessian(Point2 theta) const;
  double laplacian(Point2 theta) const;

  TrigPolynomial& operator+=(const TrigPolynomial& o);

 private:
  double c0_ = 0.0;
  std::map<Mode, CosSin> terms_;
};

/// curl u = d1 u2 - d2 u1 as a trigonometric polynomial.
TrigPolynomial curl(const FieldCoeffs& u);

enum class BandPolicy { strict, truncate };

/// Zero-constant-part field in the ball whose vorticity is omega.
FieldCoeffs analyze(const TrigPolynomial& omega, SobolevIndex s, double n,
                    BandPolicy policy = BandPolicy::strict);
/// Same, from samples omega(2 pi i / g, 2 pi j / g), row-major in i.
FieldCoeffs analyze_samples(std::span<const double> omega, int grid,
                            SobolevIndex s, double n,
                            BandPolicy policy = BandPolicy::strict);

/// Precompiled evaluator for repeated point evaluation of a field.
class FieldEvaluator {
 public:
  FieldEvaluator() = default;
  explicit FieldEvaluator(const FieldCoeffs& u);

  TangentVec2 value(Point2 theta) const;
  TangentVec2 value(Point2 theta, Mat2& jac) const;
  bool empty() const { return terms_.empty() && c_[0] == 0.0 && c_[1] == 0.0; }

 private:
  struct Term {
    int k1, k2;
    double cx, cy;  // multiplies cos(k.theta)
    double sx, sy;  // multiplies sin(k.theta)
  };
  std::vector<Term> terms_;
  std::array<double, 2> c_{0.0, 0.0};
  int kmax1_ = 0;
  int kmax2_ = 0;
};

/// Serialisation: {"s": s, "const": [c1, c2], "modes": [[k1, k2, a, b], ...]}.
std::string to_json(const FieldCoeffs& u);
FieldCoeffs field_from_json(const std::string& text);

}  // namespace sdiff
