// Acceptance criteria 1-11: one PASS/FAIL line each. Monte Carlo uses seed 1.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "sdiff/connection.hpp"
#include "sdiff/dynamics.hpp"
#include "sdiff/martingale.hpp"
#include "sdiff/ns_oracle.hpp"
#include "sdiff/parallel.hpp"
#include "sdiff/rng.hpp"

using namespace sdiff;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::vector<FieldCoeffs> basis_fields(double n, double s) {
  std::vector<FieldCoeffs> out;
  const TruncationBall ball = modes_in_ball(n);
  for (const Mode& k : ball.modes()) {
    out.push_back(FieldCoeffs::basis(BasisKind::A, k, SobolevIndex(s)));
    out.push_back(FieldCoeffs::basis(BasisKind::B, k, SobolevIndex(s)));
  }
  return out;
}

Point2 random_point(std::uint32_t i) {
  const auto u = uniform_pair(kSeed, RngAddress{Stream::test, 9, 0, i});
  return {2 * std::numbers::pi * u[0], 2 * std::numbers::pi * u[1]};
}

Outcome criterion1() {
  Outcome o;
  double tors = 0, skew = 0, anti = 0, jac = 0;
  for (double s : {0.0, 1.0, 2.0}) {
    const auto f = basis_fields(3.0, s);
    const std::size_t d = f.size();
    std::vector<FieldCoeffs> br(d * d), cov(d * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        br[i * d + j] = bracket(f[i], f[j]);
        cov[i * d + j] = covariant_derivative(f[i], f[j]);
      }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        anti = std::max(anti, (br[i * d + j] + br[j * d + i]).max_abs());
        tors = std::max(tors, (cov[i * d + j] - cov[j * d + i] - br[i * d + j]).max_abs());
        for (std::size_t k = 0; k < d; ++k) {
          skew = std::max(skew, std::abs(inner_product(cov[i * d + j], f[k]) +
                                         inner_product(f[j], cov[i * d + k])));
          jac = std::max(jac, (bracket(br[i * d + j], f[k]) + bracket(br[j * d + k], f[i]) +
                               bracket(br[k * d + i], f[j]))
                                  .max_abs());
        }
      }
  }
  o.require(tors < 1e-10, "torsion " + num(tors));
  o.require(skew < 1e-10, "metric " + num(skew));
  o.require(anti < 1e-10, "antisymmetry " + num(anti));
  o.require(jac < 1e-10, "Jacobi " + num(jac));
  o.note("max defects torsion " + num(tors) + ", metric " + num(skew) + ", Jacobi " + num(jac));
  return o;
}

Outcome criterion2() {
  Outcome o;
  double worst = 0;
  for (double s : {0.0, 1.0, 2.0}) {
    const auto f = basis_fields(3.0, s);
    for (const auto& x : f)
      for (const auto& y : f) {
        const FieldCoeffs xy = bracket(x, y);
        for (std::uint32_t q = 0; q < 50; ++q) {
          const Point2 th = random_point(q);
          const TangentVec2 vx = synth(x, th), vy = synth(y, th), vb = synth(xy, th);
          const Mat2 jx = synth_jacobian(x, th), jy = synth_jacobian(y, th);
          for (int i = 0; i < 2; ++i) {
            const double com = jy[i][0] * vx.v1 + jy[i][1] * vx.v2 -
                               (jx[i][0] * vy.v1 + jx[i][1] * vy.v2);
            worst = std::max(worst, std::abs(com - (i == 0 ? vb.v1 : vb.v2)));
          }
        }
      }
  }
  o.require(worst < 1e-10, "bracket mismatch " + num(worst));
  o.note("max mismatch " + num(worst));
  return o;
}

const std::vector<std::pair<std::string, TrigPolynomial>>& test_functions() {
  static const std::vector<std::pair<std::string, TrigPolynomial>> f{
      {"cos(t1)", TrigPolynomial::cos_mode({1, 0})},
      {"sin(t2)", TrigPolynomial::sin_mode({0, 1})},
      {"cos(t1+t2)", TrigPolynomial::cos_mode({1, 1})}};
  return f;
}

Outcome criterion3() {
  Outcome o;
  double worst = 0;
  for (double s : {0.0, 1.0, 2.0})
    for (double n : {1.0, 2.0, 3.0, 5.0}) {
      const double cn = c_constant(SobolevIndex(s), n);
      for (const auto& [name, f] : test_functions())
        for (std::uint32_t q = 0; q < 10; ++q) {
          const Point2 th = random_point(100 + q);
          worst = std::max(worst, std::abs(cylinder_generator(f, th, SobolevIndex(s), n) -
                                           cn * f.laplacian(th)));
        }
    }
  o.require(worst < 1e-10, "generator identity " + num(worst));
  o.note("max deviation from c_N Laplacian " + num(worst));
  return o;
}

Outcome criterion4() {
  Outcome o;
  double off = 0, raw = 0, gmin = INFINITY, gmax = -INFINITY;
  const TruncationBall mb = modes_in_ball(3.0);
  for (double s : {0.0, 1.0})
    for (double n : {2.0, 3.0, 5.0})
      for (const Mode& m : mb.modes())
        for (BasisKind kind : {BasisKind::A, BasisKind::B}) {
          const DiagonalReport d = diagonal_eigenvalue(SobolevIndex(s), n, kind, m);
          off = std::max(off, d.max_offdiag);
          raw = std::max(raw, std::abs(d.raw_sum - d.c_n_m2));
          const double g = -d.diag_coeff / d.c_n_m2;
          gmin = std::min(gmin, g);
          gmax = std::max(gmax, g);
        }
  o.require(off < 1e-12, "off-diagonal " + num(off));
  o.require(raw < 1e-12 * 100, "raw sum " + num(raw));
  o.require(gmax - gmin < 1e-12, "gamma spread " + num(gmax - gmin));
  o.note("gamma = " + num(gmin) + ", off-diagonal " + num(off));
  return o;
}

Outcome criterion5() {
  Outcome o;
  const double c = ricci_closed_form_s0(Mode(1, 0), 2.0);
  o.require(c == -1.9 || std::abs(c + 1.9) < 1e-15, "closed form N=2 gives " + num(c));
  std::vector<double> ratios;
  for (const Mode& j : {Mode(1, 0), Mode(0, 1), Mode(1, 1)})
    for (double n : {2.0, 4.0}) {
      const double r = ricci_truncated(n, FieldCoeffs::basis(BasisKind::A, j, SobolevIndex(0.0)))
                           .coeff(BasisKind::A, j);
      ratios.push_back(r / ricci_closed_form_s0(j, n));
    }
  const double rho = std::abs(ratios.front());
  const bool rho_ok = std::abs(rho - 1.0) < 1e-10 || std::abs(rho - 2.0) < 1e-10;
  double spread = 0;
  for (double q : ratios) spread = std::max(spread, std::abs(q - ratios.front()));
  o.require(rho_ok, "rho = " + num(rho));
  o.require(spread < 1e-10, "ratio spread " + num(spread));
  o.note("rho = " + num(rho) + ", orientation " + (ratios.front() < 0 ? "-1" : "+1"));
  return o;
}

Outcome criterion6() {
  Outcome o;
  const Point2 th = random_point(500);
  GeneratorOptions go;
  go.t_small = 1e-3;
  go.n_paths = 100000;
  go.seed = kSeed;
  go.workers = default_workers();
  double zmax = 0, imax = 0;
  for (double nu : {0.1, 1.0}) {
    const std::vector<std::pair<std::string, DriftPtr>> drifts{
        {"0", zero_drift()},
        {"d1", constant_drift(1.0, 0.0)},
        {"TG(0)", static_drift(taylor_green_coeffs(0.0, nu, SobolevIndex(0.0)))}};
    for (const auto& [dname, drift] : drifts)
      for (const auto& [fname, f] : test_functions()) {
        const TangentVec2 u = drift->value(0.0, th, nullptr);
        const auto g = f.gradient(th);
        const double expect = nu * f.laplacian(th) + u.v1 * g[0] + u.v2 * g[1];
        const Estimate a =
            estimate_generator(f, th, *drift, NoiseSpec(SobolevIndex(0.0), 3.0, nu), go);
        GeneratorOptions go2 = go;
        go2.seed = kSeed + 1;
        const Estimate b =
            estimate_generator(f, th, *drift, NoiseSpec(SobolevIndex(1.0), 5.0, nu), go2);
        const double za = std::abs(a.mean - expect) / a.se;
        const double zb = std::abs(b.mean - expect) / b.se;
        const double zi = std::abs(a.mean - b.mean) / std::hypot(a.se, b.se);
        const std::string tag = "nu=" + num(nu) + " " + dname + " " + fname;
        o.require(za < 3 && zb < 3, tag + " z=" + num(std::max(za, zb)));
        o.require(zi < 3, tag + " (N,s) difference z=" + num(zi));
        zmax = std::max({zmax, za, zb});
        imax = std::max(imax, zi);
      }
  }
  o.note("max |z| " + num(zmax) + ", max (N,s) |z| " + num(imax));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const double nu = 0.1;
  double worst = 0;
  for (double s : {0.0, 1.0})
    for (double n : {3.0, 4.0, 5.0}) {
      const SobolevIndex si(s);
      Trajectory tr{[&](double t) { return taylor_green_coeffs(t, nu, si); },
                    [&](double t) { return -2 * nu * taylor_green_coeffs(t, nu, si); }, 0.0};
      worst = std::max(worst, geodesic_residual(tr, NoiseSpec(si, n, nu), 0.3).norm);
    }
  o.require(worst < 1e-8, "Taylor-Green residual " + num(worst));
  double steady = 0;
  for (const Mode& m : {Mode(1, 0), Mode(1, 1), Mode(2, 1), Mode(0, 3)}) {
    const SobolevIndex si(0.0);
    const FieldCoeffs u = 0.7 * FieldCoeffs::basis(BasisKind::B, m, si);
    Trajectory tr{[&](double) { return u; }, [&](double) { return FieldCoeffs(si); }, 0.0};
    const GeodesicResidual r = geodesic_residual(tr, NoiseSpec(si, 3.0, nu), 0.0);
    const FieldCoeffs want = (nu * static_cast<double>(m.norm_sq()) * 0.7) *
                             FieldCoeffs::basis(BasisKind::B, m, si);
    steady = std::max(steady, (r.residual - want).max_abs());
  }
  o.require(steady < 1e-12, "steady residual mismatch " + num(steady));
  o.note("Taylor-Green residual " + num(worst) + ", steady mismatch " + num(steady));
  return o;
}

Outcome criterion8() {
  Outcome o;
  const double nu = 0.1;
  const NoiseSpec spec(SobolevIndex(0.0), 4.0, nu);
  MartingaleOptions mo;
  mo.n_paths = 10000;
  mo.n_paths_transported = 1000;
  mo.seed = kSeed;
  mo.workers = default_workers();
  const MartingaleReport ns =
      martingale_defect(*time_reversed(taylor_green_drift(nu, true), mo.T), spec, mo);
  o.require(ns.max_abs_z_plain < 3, "NS drift plain max|z| " + num(ns.max_abs_z_plain));
  o.require(ns.max_abs_z_transported < 3,
            "NS drift transported max|z| " + num(ns.max_abs_z_transported));
  const MartingaleReport bad =
      martingale_defect(*time_reversed(taylor_green_drift(nu, false), mo.T), spec, mo);
  auto min_z = [](const std::vector<ModeDefect>& ds) {
    double z = INFINITY;
    for (const ModeDefect& d : ds)
      if (d.element.kind == BasisKind::B &&
          (d.element.mode == Mode(1, 1) || d.element.mode == Mode(1, -1)))
        z = std::min(z, std::abs(d.z));
    return z;
  };
  o.require(min_z(bad.plain) > 5, "perturbed plain |z| " + num(min_z(bad.plain)));
  o.require(min_z(bad.transported) > 5, "perturbed transported |z| " + num(min_z(bad.transported)));
  o.note("NS max|z| " + num(ns.max_abs_z_plain) + "/" + num(ns.max_abs_z_transported) +
         ", perturbed (1,+-1) min|z| " + num(min_z(bad.plain)) + "/" +
         num(min_z(bad.transported)));
  return o;
}

struct FlowDefects {
  double volume, transport;
};

FlowDefects flow_defects(double n, double dt, int refine) {
  const double T = 0.1;
  NoiseSpec fs(SobolevIndex(0.0), n, 0.5);
  fs.refine = refine;
  const int steps = static_cast<int>(std::llround(T / dt));
  const std::size_t paths = 20;
  ParticleEnsemble ens = make_ensemble(grid_points(8), paths, true);
  ens = advect(std::move(ens), *zero_drift(), fs,
               AdvectOptions{dt, steps, kSeed, default_workers(), false});
  std::vector<double> tr(paths);
  parallel_chunks(paths, default_workers(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      std::vector<Increments> inc;
      for (int i = 0; i < steps; ++i)
        inc.push_back(sample_increments(fs, dt, p, static_cast<std::uint32_t>(i), kSeed));
      tr[p] = parallel_transport(inc, fs, 1.0).orthogonality_defect();
    }
  });
  return {volume_defect(ens), *std::max_element(tr.begin(), tr.end())};
}

Outcome criterion9() {
  Outcome o;
  const FlowDefects a = flow_defects(3.0, 1e-3, 1), b = flow_defects(3.0, 5e-4, 0);
  o.require(a.volume < 1e-3, "volume " + num(a.volume));
  o.require(a.transport < 1e-3, "transport " + num(a.transport));
  o.require(b.volume <= 0.6 * a.volume, "volume ratio " + num(b.volume / a.volume));
  o.require(b.transport <= 0.6 * a.transport, "transport ratio " + num(b.transport / a.transport));
  const FlowDefects c = flow_defects(4.0, 1e-3, 0);
  o.note("N=3: volume " + num(a.volume) + " -> " + num(b.volume) + ", transport " +
         num(a.transport) + " -> " + num(b.transport) + "; N=4 diagnostic: volume " +
         num(c.volume) + ", transport " + num(c.transport));
  return o;
}

Outcome criterion10() {
  Outcome o;
  const NsRun tg = integrate(taylor_green_grid(64, 0.1), 0.5, 500, 500);
  const double err = velocity_l2_distance(tg.snapshots.back(), taylor_green_grid(64, 0.1, 0.5));
  o.require(err < 1e-6, "Taylor-Green error " + num(err));
  FieldCoeffs ic(SobolevIndex(0.0));
  const TruncationBall b = modes_in_ball(4.0);
  for (std::size_t m = 0; m < b.size(); ++m) {
    const auto z = normal_pair(kSeed, RngAddress{Stream::test, 10, 0, static_cast<std::uint32_t>(m)});
    const double w = 0.5 / static_cast<double>(b.modes()[m].norm_sq());
    ic.add(BasisKind::A, b.modes()[m], w * z[0]);
    ic.add(BasisKind::B, b.modes()[m], w * z[1]);
  }
  const NsRun eu = integrate(from_field_coeffs(ic, 64, 0.0), 1.0, 400, 400);
  const double de = std::abs(eu.energy.back() / eu.energy.front() - 1);
  const double dz = std::abs(eu.enstrophy.back() / eu.enstrophy.front() - 1);
  o.require(de < 1e-8, "energy drift " + num(de));
  o.require(dz < 1e-8, "enstrophy drift " + num(dz));
  o.note("TG error " + num(err) + ", inviscid drifts " + num(de) + ", " + num(dz));
  return o;
}

Outcome criterion11() {
  Outcome o;
  ActionOptions ao;
  ao.T = 1.0;
  ao.dt = 0.02;
  ao.n_paths = 10000;
  ao.n_particles = 64;
  ao.seed = kSeed;
  ao.workers = default_workers();
  const double nu = 0.1;
  const ActionResult r =
      action_estimate(*taylor_green_drift(nu), NoiseSpec(SobolevIndex(0.0), 2.0, nu), ao);
  const double z = std::abs(r.estimate.mean - r.deterministic) / r.estimate.se;
  o.require(z < 3, "z = " + num(z));
  o.note("estimate " + num(r.estimate.mean) + " +- " + num(r.estimate.se) + " vs " +
         num(r.deterministic));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {"1 algebraic tables", 10, criterion1},
      {"2 bracket-field consistency", 10, criterion2},
      {"3 analytic generator", 5, criterion3},
      {"4 diagonalization", 30, criterion4},
      {"5 Ricci closed form", 10, criterion5},
      {"6 Monte Carlo generator", 300, criterion6},
      {"7 geodesic residual", 60, criterion7},
      {"8 martingale characterization", 600, criterion8},
      {"9 volume and transport", 120, criterion9},
      {"10 NS oracle", 60, criterion10},
      {"11 action functional", 120, criterion11},
  };
  int failures = 0;
  for (const Criterion& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget) o.require(false, "runtime " + num(secs) + " s over budget");
    std::printf("%s criterion %s (%.1f s / %.0f s): %s\n", o.pass ? "PASS" : "FAIL", c.name, secs,
                c.budget, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
