#include "sdiff/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdiff/error.hpp"
#include "sdiff/json_io.hpp"
#include "sdiff/trig_table.hpp"

namespace sdiff {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// |q|^{s+1}
double norm_pow(LatticePoint q, double s) { return pow_norm(q, 0.5 * (s + 1.0)); }

struct Direction {
  double x, y;
};

// (k2, -k1) / |k|^{s+1}
Direction basis_direction(LatticePoint k, double s) {
  const double scale = 1.0 / norm_pow(k, s);
  return {k.k2 * scale, -k.k1 * scale};
}

void add_basis_bracket(FieldCoeffs& out, SobolevIndex sidx, BasisKind kx,
                       const Mode& km, BasisKind ky, const Mode& lm,
                       double weight) {
  const double s = sidx.value();
  const LatticePoint k = km.point();
  const LatticePoint l = lm.point();
  const long c = area_form(k, l);
  if (c == 0) return;
  const double pre = weight * static_cast<double>(c) /
                     (2.0 * norm_pow(k, s) * norm_pow(l, s));
  const LatticePoint sum = k + l;
  const LatticePoint diff = k - l;
  const double p = norm_pow(sum, s);
  const double m = norm_pow(diff, s);
  using enum BasisKind;
  if (kx == A && ky == A) {
    out.add_folded(B, sum, pre * p);
    out.add_folded(B, diff, pre * m);
  } else if (kx == B && ky == B) {
    out.add_folded(B, sum, -pre * p);
    out.add_folded(B, diff, pre * m);
  } else if (kx == A && ky == B) {
    out.add_folded(A, sum, -pre * p);
    out.add_folded(A, diff, pre * m);
  } else {
    // [B_k, A_l] = -[A_l, B_k]
    add_basis_bracket(out, sidx, A, lm, B, km, -weight);
  }
}

}  // namespace

const char* to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::A: return "A";
    case BasisKind::B: return "B";
    case BasisKind::Const1: return "C1";
    case BasisKind::Const2: return "C2";
  }
  return "?";
}

BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "A") return BasisKind::A;
  if (s == "B") return BasisKind::B;
  if (s == "C1") return BasisKind::Const1;
  if (s == "C2") return BasisKind::Const2;
  fail(ErrorCode::invalid_argument, "unknown basis kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// FieldCoeffs

FieldCoeffs FieldCoeffs::basis(BasisKind kind, Mode k, SobolevIndex s) {
  FieldCoeffs u(s);
  u.add(kind, k, 1.0);
  return u;
}

FieldCoeffs FieldCoeffs::constant(double c1, double c2, SobolevIndex s) {
  FieldCoeffs u(s);
  u.set_const(c1, c2);
  return u;
}

double FieldCoeffs::coeff(BasisKind kind, const Mode& k) const {
  switch (kind) {
    case BasisKind::Const1: return const_[0];
    case BasisKind::Const2: return const_[1];
    default: break;
  }
  auto it = modes_.find(k);
  if (it == modes_.end()) return 0.0;
  return kind == BasisKind::A ? it->second.a : it->second.b;
}

void FieldCoeffs::add(BasisKind kind, const Mode& k, double value) {
  if (kind == BasisKind::Const1) {
    const_[0] += value;
    return;
  }
  if (kind == BasisKind::Const2) {
    const_[1] += value;
    return;
  }
  if (value == 0.0) return;
  auto [it, inserted] = modes_.try_emplace(k);
  (kind == BasisKind::A ? it->second.a : it->second.b) += value;
  if (it->second.a == 0.0 && it->second.b == 0.0) modes_.erase(it);
}

void FieldCoeffs::add_folded(BasisKind kind, LatticePoint q, double value) {
  if (q.is_zero() || value == 0.0) return;
  const CanonicalResult c = canonical(q);
  const int sign = kind == BasisKind::A ? c.sign_a : c.sign_b;
  add(kind, c.mode, sign * value);
}

FieldCoeffs& FieldCoeffs::operator+=(const FieldCoeffs& o) {
  require(s_ == o.s_, "field addition with mismatched Sobolev index");
  o.for_each([&](const BasisElement& e, double v) { add(e, v); });
  const_[0] += o.const_[0];
  const_[1] += o.const_[1];
  return *this;
}

FieldCoeffs& FieldCoeffs::operator-=(const FieldCoeffs& o) {
  require(s_ == o.s_, "field subtraction with mismatched Sobolev index");
  o.for_each([&](const BasisElement& e, double v) { add(e, -v); });
  const_[0] -= o.const_[0];
  const_[1] -= o.const_[1];
  return *this;
}

FieldCoeffs& FieldCoeffs::operator*=(double c) {
  if (c == 0.0) {
    modes_.clear();
    const_ = {0.0, 0.0};
    return *this;
  }
  for (auto& [k, v] : modes_) {
    v.a *= c;
    v.b *= c;
  }
  const_[0] *= c;
  const_[1] *= c;
  return *this;
}

FieldCoeffs FieldCoeffs::with_index(SobolevIndex target) const {
  FieldCoeffs out(target);
  const double ds = target.value() - s_.value();
  for (const auto& [k, v] : modes_) {
    const double f = ds == 0.0 ? 1.0 : pow_norm(k.point(), 0.5 * ds);
    out.modes_[k] = {v.a * f, v.b * f};
  }
  out.const_ = const_;
  return out;
}

FieldCoeffs FieldCoeffs::pruned(double tol) const {
  FieldCoeffs out(s_);
  for (const auto& [k, v] : modes_) {
    if (std::abs(v.a) > tol || std::abs(v.b) > tol) out.modes_[k] = v;
  }
  out.const_ = const_;
  return out;
}

FieldCoeffs FieldCoeffs::truncated(double n) const {
  FieldCoeffs out(s_);
  for (const auto& [k, v] : modes_) {
    if (static_cast<double>(k.norm_sq()) <= n * n) out.modes_[k] = v;
  }
  out.const_ = const_;
  return out;
}

double FieldCoeffs::max_abs() const {
  double m = std::max(std::abs(const_[0]), std::abs(const_[1]));
  for (const auto& [k, v] : modes_) m = std::max({m, std::abs(v.a), std::abs(v.b)});
  return m;
}

double FieldCoeffs::max_mode_norm() const {
  double m = 0.0;
  for (const auto& [k, v] : modes_) m = std::max(m, k.norm());
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

TangentVec2 basis_eval(BasisKind kind, const Mode& k, SobolevIndex s, Point2 theta) {
  switch (kind) {
    case BasisKind::Const1: return {1.0, 0.0};
    case BasisKind::Const2: return {0.0, 1.0};
    default: break;
  }
  const Direction d = basis_direction(k.point(), s.value());
  const double phase = k.k1() * theta.t1 + k.k2() * theta.t2;
  const double w = kind == BasisKind::A ? std::cos(phase) : std::sin(phase);
  return {d.x * w, d.y * w};
}

FieldEvaluator::FieldEvaluator(const FieldCoeffs& u) : c_(u.const_part()) {
  const double s = u.s().value();
  terms_.reserve(u.modes().size());
  for (const auto& [k, v] : u.modes()) {
    const Direction d = basis_direction(k.point(), s);
    terms_.push_back({k.k1(), k.k2(), d.x * v.a, d.y * v.a, d.x * v.b, d.y * v.b});
    kmax1_ = std::max(kmax1_, k.k1());
    kmax2_ = std::max(kmax2_, std::abs(k.k2()));
  }
}

TangentVec2 FieldEvaluator::value(Point2 theta) const {
  thread_local TrigTable table;
  table.fill(theta.t1, theta.t2, kmax1_, kmax2_);
  double x = c_[0];
  double y = c_[1];
  for (const Term& t : terms_) {
    const auto z = table.phase(t.k1, t.k2);
    x += t.cx * z.real() + t.sx * z.imag();
    y += t.cy * z.real() + t.sy * z.imag();
  }
  return {x, y};
}

TangentVec2 FieldEvaluator::value(Point2 theta, Mat2& jac) const {
  thread_local TrigTable table;
  table.fill(theta.t1, theta.t2, kmax1_, kmax2_);
  double x = c_[0];
  double y = c_[1];
  jac = {{{0.0, 0.0}, {0.0, 0.0}}};
  for (const Term& t : terms_) {
    const auto z = table.phase(t.k1, t.k2);
    const double c = z.real();
    const double sn = z.imag();
    x += t.cx * c + t.sx * sn;
    y += t.cy * c + t.sy * sn;
    // d/d theta_j of (cos, sin) = k_j (-sin, cos)
    const double gx = -t.cx * sn + t.sx * c;
    const double gy = -t.cy * sn + t.sy * c;
    jac[0][0] += gx * t.k1;
    jac[0][1] += gx * t.k2;
    jac[1][0] += gy * t.k1;
    jac[1][1] += gy * t.k2;
  }
  return {x, y};
}

TangentVec2 synth(const FieldCoeffs& u, Point2 theta) {
  TangentVec2 out{u.const_part()[0], u.const_part()[1]};
  const double s = u.s().value();
  for (const auto& [k, v] : u.modes()) {
    const Direction d = basis_direction(k.point(), s);
    const double phase = k.k1() * theta.t1 + k.k2() * theta.t2;
    const double w = v.a * std::cos(phase) + v.b * std::sin(phase);
    out.v1 += d.x * w;
    out.v2 += d.y * w;
  }
  return out;
}

Mat2 synth_jacobian(const FieldCoeffs& u, Point2 theta) {
  Mat2 j{{{0.0, 0.0}, {0.0, 0.0}}};
  const double s = u.s().value();
  for (const auto& [k, v] : u.modes()) {
    const Direction d = basis_direction(k.point(), s);
    const double phase = k.k1() * theta.t1 + k.k2() * theta.t2;
    const double dw = -v.a * std::sin(phase) + v.b * std::cos(phase);
    j[0][0] += d.x * dw * k.k1();
    j[0][1] += d.x * dw * k.k2();
    j[1][0] += d.y * dw * k.k1();
    j[1][1] += d.y * dw * k.k2();
  }
  return j;
}

double divergence(const FieldCoeffs& u, Point2 theta) {
  const Mat2 j = synth_jacobian(u, theta);
  return j[0][0] + j[1][1];
}

// ---------------------------------------------------------------------------
// Metric and bracket

double inner_product(const FieldCoeffs& u, const FieldCoeffs& v) {
  require(u.s() == v.s(), "inner product of fields with different Sobolev index");
  double sum = u.const_part()[0] * v.const_part()[0] +
               u.const_part()[1] * v.const_part()[1];
  const auto& a = u.modes();
  const auto& b = v.modes();
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second.a * ib->second.a + ia->second.b * ib->second.b;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

double norm(const FieldCoeffs& u) { return std::sqrt(inner_product(u, u)); }

double l2_energy(const FieldCoeffs& u) {
  const auto c = u.const_part();
  double e = c[0] * c[0] + c[1] * c[1];
  const double s = u.s().value();
  for (const auto& [k, v] : u.modes()) {
    const double w = s == 0.0 ? 1.0 : 1.0 / pow_norm(k.point(), s);
    e += 0.5 * w * (v.a * v.a + v.b * v.b);
  }
  return e;
}

FieldCoeffs bracket(const FieldCoeffs& u, const FieldCoeffs& v) {
  require(u.s() == v.s(), "bracket of fields with different Sobolev index");
  const SobolevIndex s = u.s();
  FieldCoeffs out(s);
  u.for_each([&](const BasisElement& x, double cx) {
    v.for_each([&](const BasisElement& y, double cy) {
      add_basis_bracket(out, s, x.kind, x.mode, y.kind, y.mode, cx * cy);
    });
  });
  // [d_i, A_k] = -k_i B_k,  [d_i, B_k] = k_i A_k
  auto const_with = [&](const std::array<double, 2>& c, const FieldCoeffs& w,
                        double sign) {
    if (c[0] == 0.0 && c[1] == 0.0) return;
    w.for_each([&](const BasisElement& e, double cw) {
      const double kc = c[0] * e.mode.k1() + c[1] * e.mode.k2();
      if (e.kind == BasisKind::A) {
        out.add(BasisKind::B, e.mode, -sign * kc * cw);
      } else {
        out.add(BasisKind::A, e.mode, sign * kc * cw);
      }
    });
  };
  const_with(u.const_part(), v, 1.0);
  const_with(v.const_part(), u, -1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Trigonometric polynomials

TrigPolynomial TrigPolynomial::cos_mode(LatticePoint q, double coef) {
  TrigPolynomial p;
  p.add_cos(q, coef);
  return p;
}

TrigPolynomial TrigPolynomial::sin_mode(LatticePoint q, double coef) {
  TrigPolynomial p;
  p.add_sin(q, coef);
  return p;
}

TrigPolynomial TrigPolynomial::constant(double c0) {
  TrigPolynomial p;
  p.c0_ = c0;
  return p;
}

void TrigPolynomial::add_cos(LatticePoint q, double coef) {
  if (q.is_zero()) {
    c0_ += coef;
    return;
  }
  const CanonicalResult c = canonical(q);
  terms_[c.mode].c += coef;
}

void TrigPolynomial::add_sin(LatticePoint q, double coef) {
  if (q.is_zero()) return;
  const CanonicalResult c = canonical(q);
  terms_[c.mode].s += c.sign_a * coef;
}

TrigPolynomial& TrigPolynomial::operator+=(const TrigPolynomial& o) {
  c0_ += o.c0_;
  for (const auto& [k, v] : o.terms_) {
    auto& t = terms_[k];
    t.c += v.c;
    t.s += v.s;
  }
  return *this;
}

double TrigPolynomial::eval(Point2 theta) const {
  double f = c0_;
  for (const auto& [k, v] : terms_) {
    const double ph = k.k1() * theta.t1 + k.k2() * theta.t2;
    f += v.c * std::cos(ph) + v.s * std::sin(ph);
  }
  return f;
}

std::array<double, 2> TrigPolynomial::gradient(Point2 theta) const {
  std::array<double, 2> g{0.0, 0.0};
  for (const auto& [k, v] : terms_) {
    const double ph = k.k1() * theta.t1 + k.k2() * theta.t2;
    const double d = -v.c * std::sin(ph) + v.s * std::cos(ph);
    g[0] += d * k.k1();
    g[1] += d * k.k2();
  }
  return g;
}

Mat2 TrigPolynomial::hessian(Point2 theta) const {
  Mat2 h{{{0.0, 0.0}, {0.0, 0.0}}};
  for (const auto& [k, v] : terms_) {
    const double ph = k.k1() * theta.t1 + k.k2() * theta.t2;
    const double d2 = -(v.c * std::cos(ph) + v.s * std::sin(ph));
    const double kk[2] = {static_cast<double>(k.k1()), static_cast<double>(k.k2())};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) h[i][j] += d2 * kk[i] * kk[j];
  }
  return h;
}

double TrigPolynomial::laplacian(Point2 theta) const {
  const Mat2 h = hessian(theta);
  return h[0][0] + h[1][1];
}

TrigPolynomial curl(const FieldCoeffs& u) {
  // curl A^s_k = |k|^{1-s} sin, curl B^s_k = -|k|^{1-s} cos
  TrigPolynomial w;
  const double s = u.s().value();
  for (const auto& [k, v] : u.modes()) {
    const double f = pow_norm(k.point(), 0.5 * (1.0 - s));
    if (v.a != 0.0) w.add_sin(k.point(), f * v.a);
    if (v.b != 0.0) w.add_cos(k.point(), -f * v.b);
  }
  return w;
}

FieldCoeffs analyze(const TrigPolynomial& omega, SobolevIndex s, double n,
                    BandPolicy policy) {
  if (std::abs(omega.mean()) > 1e-14) {
    fail(ErrorCode::domain, "vorticity has nonzero mean; no divergence-free field has it");
  }
  FieldCoeffs u(s);
  for (const auto& [k, v] : omega.terms()) {
    if (v.c == 0.0 && v.s == 0.0) continue;
    if (static_cast<double>(k.norm_sq()) > n * n) {
      if (policy == BandPolicy::strict) fail(ErrorCode::domain, "band limit exceeded");
      continue;
    }
    const double f = pow_norm(k.point(), 0.5 * (s.value() - 1.0));
    u.add(BasisKind::A, k, f * v.s);
    u.add(BasisKind::B, k, -f * v.c);
  }
  return u;
}

FieldCoeffs analyze_samples(std::span<const double> omega, int grid,
                            SobolevIndex s, double n, BandPolicy policy) {
  require(grid >= 2, "analyze_samples: grid must be >= 2");
  const std::size_t g = static_cast<std::size_t>(grid);
  require(omega.size() == g * g, "analyze_samples: sample count != grid^2");
  const double inv = 1.0 / static_cast<double>(g * g);
  double mean = 0.0;
  for (double v : omega) mean += v;
  mean *= inv;
  double scale = 0.0;
  for (double v : omega) scale = std::max(scale, std::abs(v));
  const double tol = 1e-10 * std::max(1.0, scale);
  if (std::abs(mean) > tol) {
    fail(ErrorCode::domain, "vorticity has nonzero mean; no divergence-free field has it");
  }
  // Direct DFT over the half-lattice inside the Nyquist box.
  const int kmax = (grid - 1) / 2;
  TrigPolynomial poly;
  for (int k1 = 0; k1 <= kmax; ++k1) {
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      const LatticePoint q{k1, k2};
      if (!is_representative(q)) continue;
      double re = 0.0;
      double im = 0.0;
      for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < g; ++j) {
          const double ph = kTwoPi * (k1 * static_cast<double>(i) +
                                      k2 * static_cast<double>(j)) /
                            static_cast<double>(grid);
          const double w = omega[i * g + j];
          re += w * std::cos(ph);
          im -= w * std::sin(ph);
        }
      }
      re *= inv;
      im *= inv;
      // f = 2 Re f^ cos - 2 Im f^ sin
      const double c = 2.0 * re;
      const double sn = -2.0 * im;
      if (std::abs(c) <= tol && std::abs(sn) <= tol) continue;
      poly.add_cos(q, c);
      poly.add_sin(q, sn);
    }
  }
  return analyze(poly, s, n, policy);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json field_to_json_value(const FieldCoeffs& u) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& [k, v] : u.modes()) {
    modes.push_back({k.k1(), k.k2(), v.a, v.b});
  }
  return {{"s", u.s().value()},
          {"const", {u.const_part()[0], u.const_part()[1]}},
          {"modes", modes}};
}

FieldCoeffs field_from_json_value(const nlohmann::json& j) {
  try {
    FieldCoeffs u(SobolevIndex(j.value("s", 0.0)));
    if (j.contains("const")) {
      const auto& c = j.at("const");
      require(c.is_array() && c.size() == 2, "field json: 'const' must be [c1, c2]");
      u.set_const(c[0].get<double>(), c[1].get<double>());
    }
    if (j.contains("modes")) {
      for (const auto& m : j.at("modes")) {
        require(m.is_array() && m.size() == 4, "field json: mode entries are [k1, k2, a, b]");
        const Mode k(m[0].get<int>(), m[1].get<int>());
        u.add(BasisKind::A, k, m[2].get<double>());
        u.add(BasisKind::B, k, m[3].get<double>());
      }
    }
    return u;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("field json: ") + e.what());
  }
}

std::string to_json(const FieldCoeffs& u) { return field_to_json_value(u).dump(); }

FieldCoeffs field_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("field json: ") + e.what());
  }
  return field_from_json_value(j);
}

}  // namespace sdiff
