#include "sdiff/martingale.hpp"

#include <cmath>

#include "sdiff/connection.hpp"
#include "sdiff/error.hpp"
#include "sdiff/parallel.hpp"

namespace sdiff {

namespace {

constexpr std::uint64_t kTransportedPathBase = std::uint64_t{1} << 40;
constexpr std::size_t kBatch = 1000;

std::vector<BasisElement> reported_elements(double radius) {
  std::vector<BasisElement> out;
  const TruncationBall ball = modes_in_ball(radius);
  for (const Mode& m : ball.modes()) {
    out.push_back({BasisKind::A, m});
    out.push_back({BasisKind::B, m});
  }
  return out;
}

FieldCoeffs noise_coeffs(const Increments& inc, const NoiseSpec& spec, double scale) {
  FieldCoeffs w(spec.s);
  for (std::size_t m = 0; m < inc.size(); ++m) {
    w.add(BasisKind::A, spec.ball.modes()[m], scale * inc[m][0]);
    w.add(BasisKind::B, spec.ball.modes()[m], scale * inc[m][1]);
  }
  return w;
}

FieldCoeffs drift_part(const FieldCoeffs& u_t0, const FieldCoeffs& v, double h) {
  const SobolevIndex s = v.s();
  FieldCoeffs out = covariant_derivative(u_t0, v.with_index(SobolevIndex(0.0)));
  out *= h;
  return out.with_index(s);
}

void aggregate(ModeDefect& d, const std::vector<Estimate>& per_cp) {
  double sum = 0.0, var = 0.0;
  d.per_checkpoint.clear();
  for (const Estimate& e : per_cp) {
    sum += e.mean;
    var += e.se * e.se;
    d.per_checkpoint.push_back(e.mean);
  }
  const double c = static_cast<double>(per_cp.size());
  d.mean = sum / c;
  d.se = std::sqrt(var) / c;
  d.z = d.se > 0.0 ? d.mean / d.se : (d.mean == 0.0 ? 0.0 : INFINITY);
}

}  // namespace

FieldCoeffs transported_increment(const FieldCoeffs& u_t, const FieldCoeffs& u_th,
                                  const Increments& inc, const NoiseSpec& spec, double h,
                                  double sign) {
  require(h > 0.0, "window must be positive");
  const FieldCoeffs u0 = u_t.with_index(SobolevIndex(0.0));
  const FieldCoeffs w = noise_coeffs(inc, spec, sign * spec.amplitude());
  auto G = [&](const FieldCoeffs& v) {
    return drift_part(u0, v, h) + covariant_derivative(w, v);
  };
  const FieldCoeffs g1 = G(u_th);
  FieldCoeffs out = u_th + g1 + 0.5 * G(g1) - u_t;
  out *= 1.0 / h;
  return out;
}

MartingaleReport martingale_defect(const DriftSource& drift, const NoiseSpec& spec,
                                   const MartingaleOptions& opt, bool with_transported) {
  require(opt.T > 0.0, "T must be positive");
  require(opt.window > 0.0 && opt.window_steps >= 1, "window must be positive");
  require(opt.checkpoints >= 1, "need at least one checkpoint");
  require(opt.grid >= 2, "grid must be at least 2");
  require(opt.n_paths >= 2, "need at least two paths");
  const double h = opt.window;
  const std::vector<BasisElement> elems = reported_elements(opt.mode_radius);
  const std::vector<Point2> pts = grid_points(opt.grid);
  const std::size_t nq = pts.size();
  const std::size_t ne = elems.size();

  std::vector<double> basis_vals(nq * ne * 2);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t e = 0; e < ne; ++e) {
      const TangentVec2 v = basis_eval(elems[e].kind, elems[e].mode, spec.s, pts[q]);
      basis_vals[(q * ne + e) * 2] = v.v1;
      basis_vals[(q * ne + e) * 2 + 1] = v.v2;
    }
  }

  MartingaleReport rep;
  const std::size_t n_pairs = opt.n_paths / 2;
  std::vector<std::vector<Estimate>> plain_cp(ne);
  std::vector<std::vector<Estimate>> trans_cp(ne);

  for (int j = 0; j < opt.checkpoints; ++j) {
    const double t = opt.T * j / opt.checkpoints;
    rep.checkpoint_times.push_back(t);

    // plain reading
    std::vector<TangentVec2> u_start(nq);
    for (std::size_t q = 0; q < nq; ++q) u_start[q] = drift.value(t, pts[q], nullptr);
    std::vector<std::vector<double>> samples(ne, std::vector<double>(n_pairs));
    for (std::size_t b0 = 0; b0 < n_pairs; b0 += kBatch) {
      const std::size_t nb = std::min(kBatch, n_pairs - b0);
      ParticleEnsemble ens = make_ensemble(pts, 2 * nb, false);
      ens.time = t;
      ens.path_base = static_cast<std::uint64_t>(j) * 2 * n_pairs + 2 * b0;
      const AdvectOptions ao{h / opt.window_steps, opt.window_steps, opt.seed, opt.workers, true};
      // Projected, antithetically averaged increment of u(., X) over the window.
      auto project = [&](const ParticleEnsemble& en, double t_end, std::size_t i,
                         std::vector<double>& acc) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t q = 0; q < nq; ++q) {
          const TangentVec2 up = drift.value(t_end, en.positions[en.index(2 * i, q)], nullptr);
          const TangentVec2 um =
              drift.value(t_end, en.positions[en.index(2 * i + 1, q)], nullptr);
          const double d1 = 0.5 * (up.v1 + um.v1) - u_start[q].v1;
          const double d2 = 0.5 * (up.v2 + um.v2) - u_start[q].v2;
          const double* bv = &basis_vals[q * ne * 2];
          for (std::size_t m = 0; m < ne; ++m) acc[m] += d1 * bv[2 * m] + d2 * bv[2 * m + 1];
        }
        for (double& a : acc) a *= 2.0 / static_cast<double>(nq);
      };
      ens = advect(std::move(ens), drift, spec, ao);
      ParticleEnsemble ens2;
      if (opt.extrapolate) ens2 = advect(ens, drift, spec, ao);
      parallel_chunks(nb, opt.workers, [&](std::size_t b, std::size_t e) {
        std::vector<double> acc(ne), acc2(ne);
        for (std::size_t i = b; i < e; ++i) {
          project(ens, t + h, i, acc);
          if (opt.extrapolate) {
            // 2 D(h) - D(2h) cancels the O(h) bias of the difference quotient
            project(ens2, t + 2 * h, i, acc2);
            for (std::size_t m = 0; m < ne; ++m)
              samples[m][b0 + i] = 2.0 * acc[m] / h - acc2[m] / (2.0 * h);
          } else {
            for (std::size_t m = 0; m < ne; ++m) samples[m][b0 + i] = acc[m] / h;
          }
        }
      });
    }
    for (std::size_t m = 0; m < ne; ++m) plain_cp[m].push_back(estimate_mean(samples[m]));

    if (!with_transported) continue;

    // transported reading
    const FieldCoeffs u_t = drift.coeffs(t, spec.s);
    require(!u_t.has_const(), "transported reading needs a drift with zero constant part");
    const FieldCoeffs u_th = drift.coeffs(t + h, spec.s);
    const FieldCoeffs u0 = u_t.with_index(SobolevIndex(0.0));
    const double kappa = 0.5 * spec.amplitude() * spec.amplitude();
    FieldCoeffs expected(spec.s);
    if (!spec.ball.empty() && !u_t.empty()) {
      expected = kappa * ricci_truncated(spec.ball.radius(), u_t);
    }
    // Antithetic average of S(+noise) and S(-noise) keeps only even powers
    // of the noise operator.
    const FieldCoeffs du = drift_part(u0, u_th, h);
    const FieldCoeffs det_part = u_th + du + 0.5 * drift_part(u0, du, h) - u_t;
    const std::size_t n_tp = std::max<std::size_t>(opt.n_paths_transported / 2, 2);
    std::vector<std::vector<double>> tsamples(ne, std::vector<double>(n_tp));
    parallel_chunks(n_tp, opt.workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const Increments inc =
            sample_increments(spec, h, kTransportedPathBase + j * n_tp + i, 0, opt.seed);
        const FieldCoeffs w = noise_coeffs(inc, spec, spec.amplitude());
        const FieldCoeffs nn = covariant_derivative(w, covariant_derivative(w, u_th));
        FieldCoeffs est = det_part + 0.5 * nn;
        est *= 1.0 / h;
        est -= expected;
        for (std::size_t m = 0; m < ne; ++m) tsamples[m][i] = est.coeff(elems[m]);
      }
    });
    for (std::size_t m = 0; m < ne; ++m) trans_cp[m].push_back(estimate_mean(tsamples[m]));
  }

  for (std::size_t m = 0; m < ne; ++m) {
    ModeDefect d{elems[m], 0.0, 0.0, 0.0, {}};
    aggregate(d, plain_cp[m]);
    rep.max_abs_z_plain = std::max(rep.max_abs_z_plain, std::abs(d.z));
    rep.plain.push_back(std::move(d));
    if (with_transported) {
      ModeDefect dt{elems[m], 0.0, 0.0, 0.0, {}};
      aggregate(dt, trans_cp[m]);
      rep.max_abs_z_transported = std::max(rep.max_abs_z_transported, std::abs(dt.z));
      rep.transported.push_back(std::move(dt));
    }
  }
  return rep;
}

}  // namespace sdiff
