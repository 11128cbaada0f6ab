#pragma once

// Levi-Civita connection of the H^s metric in the A/B frame, the truncated
// Ricci operator and the truncated Laplace-Beltrami operator.

#include <map>
#include <string>
#include <vector>

#include "sdiff/algebra.hpp"

namespace sdiff {

struct ExpansionTerm {
  BasisKind kind;
  Mode target;
  double coeff;
};

/// At most two terms.
using Expansion = std::vector<ExpansionTerm>;

/// Gamma(X, Y) = nabla_X Y for basis elements X = kind_k(k), Y = kind_l(l).
/// Throws for constant fields.
Expansion christoffel(SobolevIndex s, BasisKind kind_k, const Mode& k,
                      BasisKind kind_l, const Mode& l);

class ChristoffelTable {
 public:
  using Key = std::pair<BasisElement, BasisElement>;

  /// All nonzero symbols for ordered pairs of basis elements in the ball.
  ChristoffelTable(SobolevIndex s, double n);

  SobolevIndex s() const { return s_; }
  const std::map<Key, Expansion>& entries() const { return entries_; }
  /// Empty expansion when the symbol vanishes or the pair is outside the ball.
  const Expansion& lookup(const BasisElement& x, const BasisElement& y) const;
  /// kind_k,k1,k2,kind_l,l1,l2,kind_t,t1,t2,coeff
  std::string to_csv() const;

 private:
  SobolevIndex s_;
  std::map<Key, Expansion> entries_;
};

/// sum_{i,j} X^i Y^j Gamma(e_i, e_j). Constant-coefficient fields, so there is
/// no directional-derivative term. Both fields need a zero constant part.
FieldCoeffs covariant_derivative(const FieldCoeffs& x, const FieldCoeffs& y);

/// Truncated Ricci operator
///   R^N(u) = sum_{e_k, |k| <= N} Gamma(e_k, Gamma(u, e_k)) - Gamma([u, e_k], e_k).
FieldCoeffs ricci_truncated(double n, const FieldCoeffs& u);

/// The same contraction with the bracket order [e_k, u] in the second term.
/// Coincides with ricci_truncated at s = 0; kept for diagnostics.
FieldCoeffs ricci_contraction_literal(double n, const FieldCoeffs& u);

/// -sum_i [i,j]^4 (|i|^2+|j|^2) / (|i|^2 |j|^2 |i-j|^2 |i+j|^2), i over the
/// ball, skipping i = j.
double ricci_closed_form_s0(const Mode& j, double n);

/// Coefficient of the simplified alpha/beta expression for R^N on mode m.
/// Cross-check only.
double ricci_alpha_beta_printed(SobolevIndex s, double n, const Mode& m);

/// (1/2) sum_{e_k, |k| <= N} nabla_{e_k} nabla_{e_k} u.
FieldCoeffs laplace_beltrami_truncated(double n, const FieldCoeffs& u);

/// sum_{e_k} nabla_{e_k} nabla_{e_k} u - R^N(u)
FieldCoeffs diagonal_operator(double n, const FieldCoeffs& u);

/// sum over the ball of [k,m]^2 / |k|^{2(s+1)}.
double bracket_square_sum(SobolevIndex s, double n, LatticePoint m);

struct DiagonalReport {
  BasisKind kind;
  Mode m;
  double diag_coeff;
  double max_offdiag;
  double raw_sum;      // sum [k,m]^2 / |k|^{2(s+1)}
  double c_n_m2;       // c_N |m|^2
};

/// Applies diagonal_operator to kind_m(m). Throws if the raw sum differs from
/// c_N |m|^2 by more than 1e-12 (relative).
DiagonalReport diagonal_eigenvalue(SobolevIndex s, double n, BasisKind kind,
                                   const Mode& m);

enum class KoszulConvention { left, right };

/// Right-hand side of 2 <Gamma(X,Y), Z> under the given sign convention:
/// left:  <[X,Y],Z> - <[Y,Z],X> + <[Z,X],Y>
/// right: <[X,Y],Z> + <[Y,Z],X> - <[Z,X],Y>
double koszul_rhs(const FieldCoeffs& x, const FieldCoeffs& y,
                  const FieldCoeffs& z, KoszulConvention conv);

}  // namespace sdiff
