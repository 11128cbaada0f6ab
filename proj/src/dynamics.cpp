#include "sdiff/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "sdiff/connection.hpp"
#include "sdiff/error.hpp"
#include "sdiff/ns_oracle.hpp"
#include "sdiff/parallel.hpp"
#include "sdiff/rng.hpp"
#include "sdiff/trig_table.hpp"

namespace sdiff {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double wrap(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

Mat2 matmul(const Mat2& a, const Mat2& b) {
  Mat2 c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
  return c;
}

class ZeroDrift final : public DriftSource {
 public:
  std::string kind() const override { return "zero"; }
  TangentVec2 value(double, Point2, Mat2* jac) const override {
    if (jac) *jac = Mat2{};
    return {};
  }
  FieldCoeffs coeffs(double, SobolevIndex s) const override { return FieldCoeffs(s); }
};

class ConstantDrift final : public DriftSource {
 public:
  ConstantDrift(double c1, double c2) : c1_(c1), c2_(c2) {}
  std::string kind() const override { return "constant"; }
  TangentVec2 value(double, Point2, Mat2* jac) const override {
    if (jac) *jac = Mat2{};
    return {c1_, c2_};
  }
  FieldCoeffs coeffs(double, SobolevIndex s) const override {
    return FieldCoeffs::constant(c1_, c2_, s);
  }

 private:
  double c1_, c2_;
};

class StaticDrift final : public DriftSource {
 public:
  explicit StaticDrift(FieldCoeffs u) : u_(std::move(u)), eval_(u_) {}
  std::string kind() const override { return "static"; }
  TangentVec2 value(double, Point2 x, Mat2* jac) const override {
    return jac ? eval_.value(x, *jac) : eval_.value(x);
  }
  FieldCoeffs coeffs(double, SobolevIndex s) const override { return u_.with_index(s); }

 private:
  FieldCoeffs u_;
  FieldEvaluator eval_;
};

class TaylorGreenDrift final : public DriftSource {
 public:
  TaylorGreenDrift(double nu, bool decaying) : nu_(nu), decaying_(decaying) {}
  std::string kind() const override { return decaying_ ? "taylor-green" : "taylor-green-steady"; }
  TangentVec2 value(double t, Point2 x, Mat2* jac) const override {
    const double a = decay(t);
    const double s1 = std::sin(x.t1), c1 = std::cos(x.t1);
    const double s2 = std::sin(x.t2), c2 = std::cos(x.t2);
    if (jac) {
      *jac = {{{a * c1 * c2, -a * s1 * s2}, {a * s1 * s2, -a * c1 * c2}}};
    }
    return {a * s1 * c2, -a * c1 * s2};
  }
  FieldCoeffs coeffs(double t, SobolevIndex s) const override {
    return taylor_green_coeffs(decaying_ ? t : 0.0, nu_, s);
  }

 private:
  double decay(double t) const { return decaying_ ? std::exp(-2.0 * nu_ * t) : 1.0; }
  double nu_;
  bool decaying_;
};

class TimeReversedDrift final : public DriftSource {
 public:
  TimeReversedDrift(DriftPtr inner, double horizon)
      : inner_(std::move(inner)), horizon_(horizon) {}
  std::string kind() const override { return "time-reversed(" + inner_->kind() + ")"; }
  TangentVec2 value(double t, Point2 x, Mat2* jac) const override {
    TangentVec2 v = inner_->value(horizon_ - t, x, jac);
    if (jac) {
      for (auto& row : *jac)
        for (double& e : row) e = -e;
    }
    return {-v.v1, -v.v2};
  }
  FieldCoeffs coeffs(double t, SobolevIndex s) const override {
    return -1.0 * inner_->coeffs(horizon_ - t, s);
  }

 private:
  DriftPtr inner_;
  double horizon_;
};

class SnapshotDrift final : public DriftSource {
 public:
  SnapshotDrift(std::vector<double> times, std::vector<FieldCoeffs> fields)
      : times_(std::move(times)), fields_(std::move(fields)) {
    require(!times_.empty() && times_.size() == fields_.size(),
            "snapshot drift needs matching, nonempty time and field lists");
    require(std::is_sorted(times_.begin(), times_.end()),
            "snapshot times must be increasing");
    evals_.reserve(fields_.size());
    for (const auto& f : fields_) evals_.emplace_back(f);
  }
  std::string kind() const override { return "ns-spectral"; }
  TangentVec2 value(double t, Point2 x, Mat2* jac) const override {
    const auto [i, w] = locate(t);
    Mat2 j0{}, j1{};
    const TangentVec2 v0 = jac ? evals_[i].value(x, j0) : evals_[i].value(x);
    if (w == 0.0) {
      if (jac) *jac = j0;
      return v0;
    }
    const TangentVec2 v1 = jac ? evals_[i + 1].value(x, j1) : evals_[i + 1].value(x);
    if (jac) {
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) (*jac)[a][b] = (1 - w) * j0[a][b] + w * j1[a][b];
    }
    return {(1 - w) * v0.v1 + w * v1.v1, (1 - w) * v0.v2 + w * v1.v2};
  }
  FieldCoeffs coeffs(double t, SobolevIndex s) const override {
    const auto [i, w] = locate(t);
    FieldCoeffs out = (1.0 - w) * fields_[i];
    if (w != 0.0) out += w * fields_[i + 1];
    return out.with_index(s);
  }

 private:
  std::pair<std::size_t, double> locate(double t) const {
    if (t <= times_.front() || times_.size() == 1) return {0, 0.0};
    if (t >= times_.back()) return {times_.size() - 1, 0.0};
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    return {i, (t - times_[i]) / (times_[i + 1] - times_[i])};
  }
  std::vector<double> times_;
  std::vector<FieldCoeffs> fields_;
  std::vector<FieldEvaluator> evals_;
};

struct PathState {
  std::span<Point2> pos;
  std::span<Point2> disp;
  std::span<Mat2> def;  // may be empty
};

// Advances every particle of one path by n_steps Heun steps. `on_step` is
// called after each step with the new time.
template <class OnStep>
void run_path(PathState st, const DriftSource& drift, const NoiseSpec& spec,
              NoiseField& noise, std::uint64_t rng_path, double sign,
              std::uint32_t step0, double t0, double dt, int n_steps,
              std::uint64_t seed, OnStep&& on_step) {
  const double amp = spec.amplitude() * sign;
  const bool track = !st.def.empty();
  for (int i = 0; i < n_steps; ++i) {
    const double t = t0 + i * dt;
    const bool noisy = spec.nu > 0.0 && !spec.ball.empty();
    if (noisy) {
      noise.set(sample_increments(spec, dt, rng_path, step0 + static_cast<std::uint32_t>(i), seed),
                amp);
    }
    for (std::size_t q = 0; q < st.pos.size(); ++q) {
      const Point2 x = st.pos[q];
      Mat2 ju0{}, jn0{}, ju1{}, jn1{};
      Mat2* pju = track ? &ju0 : nullptr;
      TangentVec2 u0 = drift.value(t, x, pju);
      TangentVec2 n0 = noisy ? noise.value(x, track ? &jn0 : nullptr) : TangentVec2{};
      const double d1 = u0.v1 * dt + n0.v1;
      const double d2 = u0.v2 * dt + n0.v2;
      const Point2 xp{wrap(x.t1 + d1), wrap(x.t2 + d2)};
      TangentVec2 u1 = drift.value(t + dt, xp, track ? &ju1 : nullptr);
      TangentVec2 n1 = noisy ? noise.value(xp, track ? &jn1 : nullptr) : TangentVec2{};
      const double e1 = 0.5 * (d1 + u1.v1 * dt + n1.v1);
      const double e2 = 0.5 * (d2 + u1.v2 * dt + n1.v2);
      if (!std::isfinite(e1) || !std::isfinite(e2)) {
        std::ostringstream os;
        os << "non-finite particle position at step " << (step0 + i) << " (t=" << t
           << "), path " << rng_path << ", particle " << q;
        fail(ErrorCode::numerical, os.str());
      }
      st.pos[q] = {wrap(x.t1 + e1), wrap(x.t2 + e2)};
      st.disp[q].t1 += e1;
      st.disp[q].t2 += e2;
      if (track) {
        Mat2 g0{}, g1{};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            g0[a][b] = ju0[a][b] * dt + jn0[a][b];
            g1[a][b] = ju1[a][b] * dt + jn1[a][b];
          }
        const Mat2& d = st.def[q];
        const Mat2 gd0 = matmul(g0, d);
        Mat2 dp = d;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) dp[a][b] += gd0[a][b];
        const Mat2 gd1 = matmul(g1, dp);
        Mat2 nd = d;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) nd[a][b] += 0.5 * (gd0[a][b] + gd1[a][b]);
        st.def[q] = nd;
      }
    }
    on_step(i + 1, t + dt);
  }
}

std::pair<std::uint64_t, double> antithetic_path(std::uint64_t base, std::size_t p,
                                                 bool antithetic) {
  if (!antithetic) return {base + p, 1.0};
  return {base + (p & ~std::size_t{1}), (p & 1) ? -1.0 : 1.0};
}

}  // namespace

NoiseSpec::NoiseSpec(SobolevIndex s_, double n, double nu_)
    : s(s_), ball(modes_in_ball(n)), nu(nu_), c_n(0.0) {
  require(nu >= 0.0, "nu must be non-negative");
  require(std::isfinite(n) && n >= 0.0, "ball radius must be non-negative");
  if (!ball.empty()) c_n = c_constant(s, n);
}

double NoiseSpec::amplitude() const {
  if (c_n <= 0.0) return 0.0;
  return std::sqrt(2.0 * nu / c_n);
}

Increments sample_increments(const NoiseSpec& spec, double dt, std::uint64_t path_id,
                             std::uint32_t step_id, std::uint64_t seed) {
  require(dt > 0.0, "dt must be positive");
  require(spec.refine >= 0 && spec.refine < 16, "refine must be in [0, 16)");
  const std::uint32_t sub = 1u << spec.refine;
  const double scale = std::sqrt(dt / sub);
  Increments out(spec.ball.size(), {0.0, 0.0});
  for (std::uint32_t j = 0; j < sub; ++j) {
    const std::uint32_t step = step_id * sub + j;
    for (std::size_t m = 0; m < out.size(); ++m) {
      const auto z = normal_pair(
          seed, RngAddress{Stream::noise, path_id, step, static_cast<std::uint32_t>(m)});
      out[m][0] += scale * z[0];
      out[m][1] += scale * z[1];
    }
  }
  return out;
}

NoiseField::NoiseField(const NoiseSpec& spec) {
  const double p = spec.s.value() + 1.0;
  for (const Mode& k : spec.ball.modes()) {
    const double w = 1.0 / std::pow(static_cast<double>(k.norm_sq()), 0.5 * p);
    modes_.push_back({k.k1(), k.k2(), k.k2() * w, -k.k1() * w});
    kmax1_ = std::max(kmax1_, k.k1());
    kmax2_ = std::max(kmax2_, std::abs(k.k2()));
  }
  w_.assign(modes_.size(), {0.0, 0.0});
}

void NoiseField::set(const Increments& inc, double scale) {
  require(inc.size() == modes_.size(), "increment count does not match the ball");
  for (std::size_t m = 0; m < inc.size(); ++m) {
    w_[m] = {scale * inc[m][0], scale * inc[m][1]};
  }
}

TangentVec2 NoiseField::value(Point2 x, Mat2* jac) const {
  thread_local TrigTable table;
  table.fill(x.t1, x.t2, kmax1_, kmax2_);
  double a = 0.0, b = 0.0;
  Mat2 j{};
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    const Mode2& md = modes_[m];
    const auto z = table.phase(md.k1, md.k2);
    const double f = w_[m][0] * z.real() + w_[m][1] * z.imag();
    a += md.v1 * f;
    b += md.v2 * f;
    if (jac) {
      const double g = -w_[m][0] * z.imag() + w_[m][1] * z.real();
      j[0][0] += md.v1 * g * md.k1;
      j[0][1] += md.v1 * g * md.k2;
      j[1][0] += md.v2 * g * md.k1;
      j[1][1] += md.v2 * g * md.k2;
    }
  }
  if (jac) *jac = j;
  return {a, b};
}

DriftPtr zero_drift() { return std::make_shared<ZeroDrift>(); }
DriftPtr constant_drift(double c1, double c2) {
  return std::make_shared<ConstantDrift>(c1, c2);
}
DriftPtr static_drift(const FieldCoeffs& u) { return std::make_shared<StaticDrift>(u); }
DriftPtr taylor_green_drift(double nu, bool decaying) {
  return std::make_shared<TaylorGreenDrift>(nu, decaying);
}
DriftPtr time_reversed(DriftPtr inner, double horizon) {
  require(inner != nullptr, "time reversal of a null drift");
  return std::make_shared<TimeReversedDrift>(std::move(inner), horizon);
}
DriftPtr snapshot_drift(std::vector<double> times, std::vector<FieldCoeffs> fields) {
  return std::make_shared<SnapshotDrift>(std::move(times), std::move(fields));
}

ParticleEnsemble make_ensemble(const std::vector<Point2>& points, std::size_t n_paths,
                               bool track_deformation) {
  ParticleEnsemble e;
  e.n_paths = n_paths;
  e.n_particles = points.size();
  e.positions.reserve(n_paths * points.size());
  for (std::size_t p = 0; p < n_paths; ++p)
    for (const Point2& x : points) e.positions.push_back({wrap(x.t1), wrap(x.t2)});
  e.displacement.assign(e.positions.size(), Point2{});
  if (track_deformation) e.deformation.assign(e.positions.size(), identity2());
  return e;
}

ParticleEnsemble uniform_ensemble(std::size_t n_paths, std::size_t n_particles,
                                  std::uint64_t seed, bool track_deformation) {
  ParticleEnsemble e;
  e.n_paths = n_paths;
  e.n_particles = n_particles;
  e.positions.resize(n_paths * n_particles);
  for (std::size_t p = 0; p < n_paths; ++p) {
    for (std::size_t q = 0; q < n_particles; ++q) {
      const auto u = uniform_pair(seed, RngAddress{Stream::initial_positions, p, 0,
                                                   static_cast<std::uint32_t>(q)});
      e.positions[e.index(p, q)] = {kTwoPi * u[0], kTwoPi * u[1]};
    }
  }
  e.displacement.assign(e.positions.size(), Point2{});
  if (track_deformation) e.deformation.assign(e.positions.size(), identity2());
  return e;
}

std::vector<Point2> grid_points(int g) {
  require(g > 0, "grid size must be positive");
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(g) * g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) out.push_back({kTwoPi * i / g, kTwoPi * j / g});
  return out;
}

ParticleEnsemble advect(ParticleEnsemble ens, const DriftSource& drift,
                        const NoiseSpec& spec, const AdvectOptions& opt) {
  require(opt.dt > 0.0, "dt must be positive");
  require(opt.n_steps >= 0, "n_steps must be non-negative");
  if (opt.n_steps == 0 || ens.positions.empty()) return ens;
  const bool track = ens.tracks_deformation();
  parallel_chunks(ens.n_paths, opt.workers, [&](std::size_t b, std::size_t e) {
    NoiseField noise(spec);
    for (std::size_t p = b; p < e; ++p) {
      const std::size_t off = p * ens.n_particles;
      PathState st{std::span(ens.positions).subspan(off, ens.n_particles),
                   std::span(ens.displacement).subspan(off, ens.n_particles),
                   track ? std::span(ens.deformation).subspan(off, ens.n_particles)
                         : std::span<Mat2>()};
      const auto [rng_path, sign] = antithetic_path(ens.path_base, p, opt.antithetic);
      run_path(st, drift, spec, noise, rng_path, sign, ens.steps_taken, ens.time, opt.dt,
               opt.n_steps, opt.seed, [](int, double) {});
    }
  });
  ens.time += opt.dt * opt.n_steps;
  ens.steps_taken += static_cast<std::uint32_t>(opt.n_steps);
  return ens;
}

double volume_defect(const ParticleEnsemble& ens) {
  require(ens.tracks_deformation() || ens.positions.empty(),
          "volume defect needs tracked deformation matrices");
  double worst = 0.0;
  for (const Mat2& m : ens.deformation) worst = std::max(worst, std::abs(det(m) - 1.0));
  return worst;
}

Estimate estimate_generator(const TrigPolynomial& f, Point2 theta, const DriftSource& drift,
                            const NoiseSpec& spec, const GeneratorOptions& opt) {
  require(opt.t_small > 0.0, "t_small must be positive");
  require(opt.n_steps >= 1, "n_steps must be at least 1");
  std::size_t n_paths = opt.n_paths;
  if (opt.antithetic) n_paths += n_paths % 2;
  require(n_paths >= 2, "need at least two paths");
  ParticleEnsemble ens = make_ensemble({theta}, n_paths, false);
  ens = advect(std::move(ens), drift, spec,
               AdvectOptions{opt.t_small / opt.n_steps, opt.n_steps, opt.seed, opt.workers,
                             opt.antithetic});
  const double f0 = f.eval(theta);
  std::vector<double> samples;
  if (opt.antithetic) {
    samples.resize(n_paths / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = 0.5 * (f.eval(ens.positions[2 * i]) + f.eval(ens.positions[2 * i + 1])) - f0;
    }
  } else {
    samples.resize(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) samples[i] = f.eval(ens.positions[i]) - f0;
  }
  Estimate e = estimate_mean(samples);
  e.mean /= opt.t_small;
  e.se /= opt.t_small;
  return e;
}

double cylinder_generator(const TrigPolynomial& f, Point2 theta, SobolevIndex s, double n) {
  const TruncationBall ball = modes_in_ball(n);
  const auto g = f.gradient(theta);
  const Mat2 h = f.hessian(theta);
  double total = 0.0;
  for (const Mode& k : ball.modes()) {
    for (BasisKind kind : {BasisKind::A, BasisKind::B}) {
      const FieldCoeffs e = FieldCoeffs::basis(kind, k, s);
      const TangentVec2 x = synth(e, theta);
      const Mat2 j = synth_jacobian(e, theta);
      const double xv[2] = {x.v1, x.v2};
      double xhx = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) xhx += xv[a] * h[a][b] * xv[b];
      double jxg = 0.0;
      for (int a = 0; a < 2; ++a) jxg += (j[a][0] * xv[0] + j[a][1] * xv[1]) * g[a];
      total += xhx + jxg;
    }
  }
  return total;
}

TransportFrame::TransportFrame(std::vector<BasisElement> basis)
    : basis_(std::move(basis)), m_(basis_.size() * basis_.size(), 0.0) {
  for (std::size_t i = 0; i < basis_.size(); ++i) at(i, i) = 1.0;
}

double TransportFrame::orthogonality_defect() const {
  const auto d = static_cast<Eigen::Index>(dim());
  if (d == 0) return 0.0;
  Eigen::Map<const RowMatrix> m(m_.data(), d, d);
  const Eigen::MatrixXd s = m.transpose() * m - Eigen::MatrixXd::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

FieldCoeffs TransportFrame::apply(const FieldCoeffs& u) const {
  const std::size_t d = dim();
  std::vector<double> x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = u.coeff(basis_[j]);
  FieldCoeffs out(u.s());
  for (std::size_t i = 0; i < d; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < d; ++j) v += at(i, j) * x[j];
    if (v != 0.0) out.add(basis_[i], v);
  }
  return out;
}

std::vector<std::vector<std::tuple<int, int, double>>> christoffel_matrices(
    SobolevIndex s, const TruncationBall& ball) {
  std::vector<BasisElement> basis;
  for (const Mode& k : ball.modes()) {
    basis.push_back({BasisKind::A, k});
    basis.push_back({BasisKind::B, k});
  }
  auto index_of = [&](const BasisElement& e) -> int {
    const auto idx = ball.index_of(e.mode);
    if (!idx) return -1;
    return static_cast<int>(2 * *idx + (e.kind == BasisKind::B ? 1 : 0));
  };
  std::vector<std::vector<std::tuple<int, int, double>>> out(basis.size());
  for (std::size_t d = 0; d < basis.size(); ++d) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      for (const ExpansionTerm& t :
           christoffel(s, basis[d].kind, basis[d].mode, basis[j].kind, basis[j].mode)) {
        const int row = index_of({t.kind, t.target});
        if (row >= 0) out[d].emplace_back(row, static_cast<int>(j), t.coeff);
      }
    }
  }
  return out;
}

TransportFrame parallel_transport(const std::vector<Increments>& path, const NoiseSpec& spec,
                                  double tol) {
  std::vector<BasisElement> basis;
  for (const Mode& k : spec.ball.modes()) {
    basis.push_back({BasisKind::A, k});
    basis.push_back({BasisKind::B, k});
  }
  TransportFrame frame(basis);
  const std::size_t d = basis.size();
  if (d == 0) return frame;
  const auto gam = christoffel_matrices(spec.s, spec.ball);
  const double amp = spec.amplitude();
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::Map<RowMatrix> t(frame.data().data(), n, n);
  RowMatrix g(n, n);
  for (const Increments& inc : path) {
    require(inc.size() == spec.ball.size(), "increment count does not match the ball");
    g.setZero();
    for (std::size_t m = 0; m < inc.size(); ++m) {
      for (int ab = 0; ab < 2; ++ab) {
        const double w = amp * inc[m][ab];
        if (w == 0.0) continue;
        for (const auto& [row, col, c] : gam[2 * m + ab]) g(row, col) += w * c;
      }
    }
    const RowMatrix gt = g * t;
    t += -gt + 0.5 * (g * gt);
  }
  const double defect = frame.orthogonality_defect();
  if (defect > 10.0 * tol) {
    std::ostringstream os;
    os << "transport drift, reduce dt (orthogonality defect " << defect << ")";
    fail(ErrorCode::numerical, os.str());
  }
  return frame;
}

GeodesicResidual geodesic_residual(const Trajectory& traj, const NoiseSpec& spec, double t,
                                   double gamma, double ricci_sign) {
  require(static_cast<bool>(traj.value), "trajectory has no value function");
  require(gamma > 0.0, "gamma must be positive");
  const FieldCoeffs u = traj.value(t);
  require(!u.has_const(), "geodesic residual needs a zero constant part");
  require(u.s() == spec.s, "trajectory and noise use different Sobolev indices");
  FieldCoeffs du;
  if (traj.derivative) {
    du = traj.derivative(t);
  } else {
    require(traj.fd_step > 0.0, "fd_step must be positive");
    du = traj.value(t + traj.fd_step) - traj.value(t - traj.fd_step);
    du *= 1.0 / (2.0 * traj.fd_step);
  }
  const FieldCoeffs u0 = u.with_index(SobolevIndex(0.0));
  FieldCoeffs res = du + covariant_derivative(u0, u0).with_index(spec.s);
  GeodesicResidual out;
  if (spec.nu > 0.0 && !u.empty()) {
    require(!spec.ball.empty(), "geodesic residual with viscosity needs a nonempty ball");
    const double sigma = 2.0 * spec.nu / (gamma * spec.c_n);
    FieldCoeffs op = laplace_beltrami_truncated(spec.ball.radius(), u);
    op += (0.5 * ricci_sign) * ricci_truncated(spec.ball.radius(), u);
    res -= sigma * op;
  }
  for (const auto& [m, c] : u.modes()) {
    if (static_cast<double>(m.norm_sq()) > spec.ball.radius() * spec.ball.radius()) {
      out.boundary_modes.push_back(m);
    }
  }
  out.norm = norm(res);
  out.residual = std::move(res);
  return out;
}

ActionResult action_estimate(const DriftSource& drift, const NoiseSpec& spec,
                             const ActionOptions& opt) {
  require(opt.T > 0.0 && opt.dt > 0.0 && opt.dt <= opt.T, "need 0 < dt <= T");
  require(opt.n_paths >= 2 && opt.n_particles >= 1, "need at least two paths and one particle");
  const int n_steps = static_cast<int>(std::llround(opt.T / opt.dt));
  const double dt = opt.T / n_steps;
  ParticleEnsemble ens = uniform_ensemble(opt.n_paths, opt.n_particles, opt.seed, false);
  std::vector<double> per_path(opt.n_paths, 0.0);
  parallel_chunks(opt.n_paths, opt.workers, [&](std::size_t b, std::size_t e) {
    NoiseField noise(spec);
    for (std::size_t p = b; p < e; ++p) {
      const std::size_t off = p * ens.n_particles;
      PathState st{std::span(ens.positions).subspan(off, ens.n_particles),
                   std::span(ens.displacement).subspan(off, ens.n_particles),
                   std::span<Mat2>()};
      auto energy = [&](double t) {
        double acc = 0.0;
        for (const Point2& x : st.pos) {
          const TangentVec2 v = drift.value(t, x, nullptr);
          acc += v.v1 * v.v1 + v.v2 * v.v2;
        }
        return acc / static_cast<double>(st.pos.size());
      };
      double integral = 0.5 * energy(0.0);
      run_path(st, drift, spec, noise, p, 1.0, 0, 0.0, dt, n_steps, opt.seed,
               [&](int i, double t) { integral += (i == n_steps ? 0.5 : 1.0) * energy(t); });
      per_path[p] = 0.5 * integral * dt;
    }
  });
  ActionResult r;
  r.estimate = estimate_mean(per_path);
  r.deterministic = deterministic_action(drift, opt.T);
  return r;
}

double deterministic_action(const DriftSource& drift, double T, int intervals) {
  require(T >= 0.0, "T must be non-negative");
  if (intervals % 2) ++intervals;
  const double h = T / intervals;
  auto g = [&](double t) { return l2_energy(drift.coeffs(t, SobolevIndex(0.0))); };
  double acc = g(0.0) + g(T);
  for (int i = 1; i < intervals; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(i * h);
  return 0.5 * acc * h / 3.0;
}

}  // namespace sdiff
