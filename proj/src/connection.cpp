#include "sdiff/connection.hpp"

#include <cmath>
#include <sstream>

#include "sdiff/error.hpp"

namespace sdiff {

namespace {

bool is_constant(BasisKind k) {
  return k == BasisKind::Const1 || k == BasisKind::Const2;
}

void push_folded(Expansion& out, BasisKind kind, LatticePoint q, double coeff) {
  if (q.is_zero() || coeff == 0.0) return;
  const CanonicalResult c = canonical(q);
  const int sign = kind == BasisKind::A ? c.sign_a : c.sign_b;
  out.push_back({kind, c.mode, sign * coeff});
}

// Neumaier-compensated accumulation of fields, keyed in lexicographic order.
class FieldAccumulator {
 public:
  explicit FieldAccumulator(SobolevIndex s) : s_(s) {}

  void add(const BasisElement& e, double v) {
    Cell& c = cells_[e];
    const double t = c.sum + v;
    if (std::abs(c.sum) >= std::abs(v)) {
      c.comp += (c.sum - t) + v;
    } else {
      c.comp += (v - t) + c.sum;
    }
    c.sum = t;
  }

  void add(const FieldCoeffs& u, double w = 1.0) {
    u.for_each([&](const BasisElement& e, double v) { add(e, w * v); });
  }

  FieldCoeffs result() const {
    FieldCoeffs out(s_);
    for (const auto& [e, c] : cells_) out.add(e, c.sum + c.comp);
    return out;
  }

 private:
  struct Cell {
    double sum = 0.0;
    double comp = 0.0;
  };
  SobolevIndex s_;
  std::map<BasisElement, Cell> cells_;
};

void require_no_constants(const FieldCoeffs& u) {
  if (u.has_const()) {
    fail(ErrorCode::domain, "connection undefined on constants");
  }
}

std::vector<BasisElement> ball_elements(double n) {
  const TruncationBall ball = modes_in_ball(n);
  if (ball.empty()) fail(ErrorCode::domain, "empty truncation ball");
  std::vector<BasisElement> out;
  out.reserve(2 * ball.size());
  for (const Mode& k : ball.modes()) {
    out.push_back({BasisKind::A, k});
    out.push_back({BasisKind::B, k});
  }
  return out;
}

FieldCoeffs ricci_impl(double n, const FieldCoeffs& u, bool literal) {
  require_no_constants(u);
  const SobolevIndex s = u.s();
  FieldAccumulator acc(s);
  for (const BasisElement& ek : ball_elements(n)) {
    const FieldCoeffs e = FieldCoeffs::basis(ek.kind, ek.mode, s);
    acc.add(covariant_derivative(e, covariant_derivative(u, e)));
    const FieldCoeffs br = literal ? bracket(e, u) : bracket(u, e);
    acc.add(covariant_derivative(br, e), -1.0);
  }
  return acc.result();
}

}  // namespace

Expansion christoffel(SobolevIndex s, BasisKind kind_k, const Mode& k,
                      BasisKind kind_l, const Mode& l) {
  if (is_constant(kind_k) || is_constant(kind_l)) {
    fail(ErrorCode::domain, "connection undefined on constants");
  }
  Expansion out;
  const long c = area_form(k.point(), l.point());
  if (c == 0) return out;
  const double al = alpha(s, k.point(), l.point());
  const double be = beta(s, k.point(), l.point());
  const LatticePoint sum = k.point() + l.point();
  const LatticePoint diff = k.point() - l.point();
  const double cc = static_cast<double>(c);
  using enum BasisKind;
  if (kind_k == A && kind_l == A) {
    push_folded(out, B, sum, cc * al);
    push_folded(out, B, diff, cc * be);
  } else if (kind_k == B && kind_l == B) {
    push_folded(out, B, sum, -cc * al);
    push_folded(out, B, diff, cc * be);
  } else if (kind_k == A && kind_l == B) {
    push_folded(out, A, sum, -cc * al);
    push_folded(out, A, diff, cc * be);
  } else {
    push_folded(out, A, sum, -cc * al);
    push_folded(out, A, diff, -cc * be);
  }
  return out;
}

ChristoffelTable::ChristoffelTable(SobolevIndex s, double n) : s_(s) {
  const TruncationBall ball = modes_in_ball(n);
  for (const Mode& k : ball.modes()) {
    for (BasisKind kk : {BasisKind::A, BasisKind::B}) {
      for (const Mode& l : ball.modes()) {
        for (BasisKind kl : {BasisKind::A, BasisKind::B}) {
          Expansion e = christoffel(s, kk, k, kl, l);
          if (!e.empty()) entries_.emplace(Key{{kk, k}, {kl, l}}, std::move(e));
        }
      }
    }
  }
}

const Expansion& ChristoffelTable::lookup(const BasisElement& x,
                                          const BasisElement& y) const {
  static const Expansion kEmpty;
  auto it = entries_.find(Key{x, y});
  return it == entries_.end() ? kEmpty : it->second;
}

std::string ChristoffelTable::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind_k,k1,k2,kind_l,l1,l2,kind_t,t1,t2,coeff\n";
  for (const auto& [key, exp] : entries_) {
    for (const ExpansionTerm& t : exp) {
      os << to_string(key.first.kind) << ',' << key.first.mode.k1() << ','
         << key.first.mode.k2() << ',' << to_string(key.second.kind) << ','
         << key.second.mode.k1() << ',' << key.second.mode.k2() << ','
         << to_string(t.kind) << ',' << t.target.k1() << ',' << t.target.k2()
         << ',' << t.coeff << '\n';
    }
  }
  return os.str();
}

FieldCoeffs covariant_derivative(const FieldCoeffs& x, const FieldCoeffs& y) {
  require(x.s() == y.s(), "covariant derivative of fields with different Sobolev index");
  require_no_constants(x);
  require_no_constants(y);
  const SobolevIndex s = x.s();
  FieldAccumulator acc(s);
  x.for_each([&](const BasisElement& ex, double cx) {
    y.for_each([&](const BasisElement& ey, double cy) {
      for (const ExpansionTerm& t : christoffel(s, ex.kind, ex.mode, ey.kind, ey.mode)) {
        acc.add(BasisElement{t.kind, t.target}, cx * cy * t.coeff);
      }
    });
  });
  return acc.result();
}

FieldCoeffs ricci_truncated(double n, const FieldCoeffs& u) {
  return ricci_impl(n, u, false);
}

FieldCoeffs ricci_contraction_literal(double n, const FieldCoeffs& u) {
  return ricci_impl(n, u, true);
}

double ricci_closed_form_s0(const Mode& j, double n) {
  const TruncationBall ball = modes_in_ball(n);
  const LatticePoint jp = j.point();
  const double j2 = static_cast<double>(j.norm_sq());
  double sum = 0.0;
  double comp = 0.0;
  for (const Mode& i : ball.modes()) {
    const long c = area_form(i.point(), jp);
    if (c == 0) continue;
    const double c2 = static_cast<double>(c) * static_cast<double>(c);
    const double i2 = static_cast<double>(i.norm_sq());
    const double term = c2 * c2 * (i2 + j2) /
                        (i2 * j2 * static_cast<double>((i.point() - jp).norm_sq()) *
                         static_cast<double>((i.point() + jp).norm_sq()));
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return -sum;
}

double ricci_alpha_beta_printed(SobolevIndex s, double n, const Mode& m) {
  const TruncationBall ball = modes_in_ball(n);
  const LatticePoint mp = m.point();
  const double p = s.value() + 1.0;
  double total = 0.0;
  for (const Mode& k : ball.modes()) {
    const LatticePoint kp = k.point();
    const long c = area_form(kp, mp);
    if (c == 0) continue;
    const double c2 = static_cast<double>(c) * static_cast<double>(c);
    total += -2.0 * c2 *
             (alpha(s, kp, mp) * alpha(s, mp, kp) + beta(s, kp, mp) * beta(s, mp, kp));
    const LatticePoint sum = kp + mp;
    total += -4.0 * c2 * std::pow(sum.norm(), p) / std::pow(k.norm() * m.norm(), p) *
             beta(s, sum, kp);
  }
  return total;
}

FieldCoeffs laplace_beltrami_truncated(double n, const FieldCoeffs& u) {
  require_no_constants(u);
  const SobolevIndex s = u.s();
  FieldAccumulator acc(s);
  for (const BasisElement& ek : ball_elements(n)) {
    const FieldCoeffs e = FieldCoeffs::basis(ek.kind, ek.mode, s);
    acc.add(covariant_derivative(e, covariant_derivative(e, u)), 0.5);
  }
  return acc.result();
}

FieldCoeffs diagonal_operator(double n, const FieldCoeffs& u) {
  FieldCoeffs out = laplace_beltrami_truncated(n, u);
  out *= 2.0;
  out -= ricci_truncated(n, u);
  return out;
}

double bracket_square_sum(SobolevIndex s, double n, LatticePoint m) {
  const TruncationBall ball = modes_in_ball(n);
  double sum = 0.0;
  for (const Mode& k : ball.modes()) {
    const double c = static_cast<double>(area_form(k.point(), m));
    sum += c * c / pow_norm(k.point(), s.value() + 1.0);
  }
  return sum;
}

DiagonalReport diagonal_eigenvalue(SobolevIndex s, double n, BasisKind kind,
                                   const Mode& m) {
  const FieldCoeffs u = FieldCoeffs::basis(kind, m, s);
  const FieldCoeffs out = diagonal_operator(n, u);
  DiagonalReport r{kind, m, out.coeff(kind, m), 0.0, 0.0, 0.0};
  out.for_each([&](const BasisElement& e, double v) {
    if (e.kind == kind && e.mode == m) return;
    r.max_offdiag = std::max(r.max_offdiag, std::abs(v));
  });
  r.raw_sum = bracket_square_sum(s, n, m.point());
  r.c_n_m2 = c_constant(s, n) * static_cast<double>(m.norm_sq());
  if (std::abs(r.raw_sum - r.c_n_m2) > 1e-12 * std::max(1.0, std::abs(r.c_n_m2))) {
    fail(ErrorCode::numerical, "bracket square sum differs from c_N |m|^2");
  }
  return r;
}

double koszul_rhs(const FieldCoeffs& x, const FieldCoeffs& y,
                  const FieldCoeffs& z, KoszulConvention conv) {
  const double sign = conv == KoszulConvention::left ? 1.0 : -1.0;
  return inner_product(bracket(x, y), z) -
         sign * inner_product(bracket(y, z), x) +
         sign * inner_product(bracket(z, x), y);
}

}  // namespace sdiff
