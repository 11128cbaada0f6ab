#include "sdiff/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdiff/error.hpp"

namespace sdiff {

double LatticePoint::norm() const {
  return std::sqrt(static_cast<double>(norm_sq()));
}

Mode::Mode(int k1, int k2) : p_{k1, k2} {
  if (!is_representative(p_)) {
    fail(ErrorCode::domain, "(" + std::to_string(k1) + ", " +
                                std::to_string(k2) +
                                ") is not a half-lattice representative");
  }
}

CanonicalResult canonical(LatticePoint q) {
  if (q.is_zero()) fail(ErrorCode::domain, "zero mode has no basis element");
  if (is_representative(q)) return {Mode(q), +1, +1};
  return {Mode(-q), -1, +1};
}

SobolevIndex::SobolevIndex(double s) : s_(s) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    fail(ErrorCode::invalid_argument, "Sobolev index must be finite and >= 0");
  }
}

double pow_norm(LatticePoint q, double p) {
  const double r2 = static_cast<double>(q.norm_sq());
  if (p == 1.0) return r2;
  if (p == 2.0) return r2 * r2;
  return std::pow(r2, p);
}

TruncationBall::TruncationBall(double n, std::vector<Mode> modes)
    : n_(n), modes_(std::move(modes)) {
  std::sort(modes_.begin(), modes_.end());
}

bool TruncationBall::contains(LatticePoint q) const {
  if (q.is_zero()) return false;
  return static_cast<double>(q.norm_sq()) <= n_ * n_;
}

std::optional<std::size_t> TruncationBall::index_of(const Mode& m) const {
  auto it = std::lower_bound(modes_.begin(), modes_.end(), m);
  if (it == modes_.end() || *it != m) return std::nullopt;
  return static_cast<std::size_t>(it - modes_.begin());
}

TruncationBall modes_in_ball(double n) {
  if (!(n >= 0.0)) fail(ErrorCode::invalid_argument, "ball radius must be >= 0");
  const int r = static_cast<int>(std::floor(n));
  const double n2 = n * n;
  std::vector<Mode> modes;
  for (int k1 = 0; k1 <= r; ++k1) {
    for (int k2 = -r; k2 <= r; ++k2) {
      LatticePoint q{k1, k2};
      if (!is_representative(q)) continue;
      if (static_cast<double>(q.norm_sq()) <= n2) modes.emplace_back(q);
    }
  }
  return TruncationBall(n, std::move(modes));
}

namespace {

double alpha_beta_impl(double s, LatticePoint k, LatticePoint l,
                       LatticePoint shifted) {
  const double p = s + 1.0;
  const double num = pow_norm(shifted, p) - pow_norm(k, p) + pow_norm(l, p);
  const double den =
      4.0 * std::pow(k.norm() * l.norm() * shifted.norm(), p);
  return num / den;
}

}  // namespace

double alpha(SobolevIndex s, LatticePoint k, LatticePoint l) {
  require(!k.is_zero() && !l.is_zero(), "alpha: zero index", ErrorCode::domain);
  const LatticePoint sum = k + l;
  if (sum.is_zero()) fail(ErrorCode::domain, "alpha undefined at antipodal pair");
  return alpha_beta_impl(s.value(), k, l, sum);
}

double beta(SobolevIndex s, LatticePoint k, LatticePoint l) {
  require(!k.is_zero() && !l.is_zero(), "beta: zero index", ErrorCode::domain);
  const LatticePoint diff = k - l;
  if (diff.is_zero()) return 0.0;
  return alpha_beta_impl(s.value(), k, l, diff);
}

double c_constant_component(SobolevIndex s, double n, int i) {
  require(i == 1 || i == 2, "component must be 1 or 2");
  const TruncationBall ball = modes_in_ball(n);
  if (ball.empty()) fail(ErrorCode::domain, "c_N undefined on an empty ball");
  double sum = 0.0;
  double comp = 0.0;
  for (const Mode& k : ball.modes()) {
    const double ki = i == 1 ? k.k1() : k.k2();
    const double term = ki * ki / pow_norm(k.point(), s.value() + 1.0);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double c_constant(SobolevIndex s, double n) {
  const double c1 = c_constant_component(s, n, 1);
  const double c2 = c_constant_component(s, n, 2);
  if (std::abs(c1 - c2) > 1e-12 * std::max(1.0, std::abs(c1))) {
    fail(ErrorCode::numerical, "c_N depends on the component index");
  }
  return c1;
}

}  // namespace sdiff
