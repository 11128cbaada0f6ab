#pragma once

// Lattice bookkeeping for the cosine/sine basis of divergence-free fields on
// the 2-torus: representatives of Z^2 / {k ~ -k}, truncation balls and the
// scalar coefficient functions entering the structure constants.

#include <compare>
#include <cstddef>
#include <optional>
#include <vector>

namespace sdiff {

/// Any integer pair. Used for intermediate indices such as k+l, k-l.
struct LatticePoint {
  int k1 = 0;
  int k2 = 0;

  constexpr auto operator<=>(const LatticePoint&) const = default;
  constexpr bool is_zero() const { return k1 == 0 && k2 == 0; }
  constexpr LatticePoint operator-() const { return {-k1, -k2}; }
  friend constexpr LatticePoint operator+(LatticePoint a, LatticePoint b) {
    return {a.k1 + b.k1, a.k2 + b.k2};
  }
  friend constexpr LatticePoint operator-(LatticePoint a, LatticePoint b) {
    return {a.k1 - b.k1, a.k2 - b.k2};
  }
  constexpr long norm_sq() const {
    return static_cast<long>(k1) * k1 + static_cast<long>(k2) * k2;
  }
  double norm() const;
};

constexpr bool is_representative(LatticePoint q) {
  return q.k1 > 0 || (q.k1 == 0 && q.k2 > 0);
}

/// A point of the half-lattice: k1 > 0, or k1 == 0 and k2 > 0.
class Mode {
 public:
  /// Throws if (k1, k2) is not a representative.
  Mode(int k1, int k2);
  explicit Mode(LatticePoint q) : Mode(q.k1, q.k2) {}

  int k1() const { return p_.k1; }
  int k2() const { return p_.k2; }
  LatticePoint point() const { return p_; }
  long norm_sq() const { return p_.norm_sq(); }
  double norm() const { return p_.norm(); }

  auto operator<=>(const Mode&) const = default;

 private:
  LatticePoint p_;
};

/// Result of folding an arbitrary nonzero lattice point onto the
/// half-lattice. A_{-k} = -A_k and B_{-k} = B_k, hence the two signs.
struct CanonicalResult {
  Mode mode;
  int sign_a;
  int sign_b;
};

CanonicalResult canonical(LatticePoint q);

/// Sobolev exponent s >= 0 (may be fractional).
class SobolevIndex {
 public:
  SobolevIndex() = default;
  explicit SobolevIndex(double s);
  double value() const { return s_; }
  bool operator==(const SobolevIndex&) const = default;

 private:
  double s_ = 0.0;
};

/// |q|^{2p}, computed as (|q|^2)^p.
double pow_norm(LatticePoint q, double p);

class TruncationBall {
 public:
  TruncationBall() = default;
  TruncationBall(double n, std::vector<Mode> modes);

  double radius() const { return n_; }
  const std::vector<Mode>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  bool empty() const { return modes_.empty(); }
  bool contains(LatticePoint q) const;
  std::optional<std::size_t> index_of(const Mode& m) const;

 private:
  double n_ = 0.0;
  std::vector<Mode> modes_;  // lexicographic
};

/// Representatives with 0 < |k| <= n, lexicographic in (k1, k2).
TruncationBall modes_in_ball(double n);

/// [k, l] = k1 l2 - k2 l1.
constexpr long area_form(LatticePoint k, LatticePoint l) {
  return static_cast<long>(k.k1) * l.k2 - static_cast<long>(k.k2) * l.k1;
}

double alpha(SobolevIndex s, LatticePoint k, LatticePoint l);
/// Returns 0 for k == l; the symbol only ever appears multiplied by [k,k] = 0.
double beta(SobolevIndex s, LatticePoint k, LatticePoint l);

/// c_N = sum over the ball of k1^2 / |k|^{2(s+1)}. Verifies that the k2^2
/// variant agrees to 1e-12.
double c_constant(SobolevIndex s, double n);
/// Same sum with component `i` (1 or 2) in the numerator.
double c_constant_component(SobolevIndex s, double n, int i);

}  // namespace sdiff
