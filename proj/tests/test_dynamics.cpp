#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sdiff/dynamics.hpp"
#include "sdiff/error.hpp"
#include "sdiff/martingale.hpp"
#include "sdiff/ns_oracle.hpp"

using namespace sdiff;

TEST_CASE("noise amplitude normalisation") {
  const NoiseSpec spec(SobolevIndex(0.0), 2.0, 0.1);
  CHECK(spec.c_n == 3.0);
  CHECK(spec.amplitude() == doctest::Approx(std::sqrt(0.2 / 3.0)));
  CHECK(spec.ball.size() == 6);
}

TEST_CASE("coarse increments are sums of fine ones") {
  NoiseSpec fine(SobolevIndex(0.0), 2.0, 0.5), coarse = fine;
  coarse.refine = 1;
  const Increments c = sample_increments(coarse, 2e-3, 3, 4, 7);
  const Increments f0 = sample_increments(fine, 1e-3, 3, 8, 7);
  const Increments f1 = sample_increments(fine, 1e-3, 3, 9, 7);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i][0] == doctest::Approx(f0[i][0] + f1[i][0]).epsilon(1e-14));
  }
}

TEST_CASE("zero drift and zero viscosity leave particles in place") {
  const std::vector<Point2> pts{{0.1, 0.2}, {3.0, 5.5}};
  ParticleEnsemble ens = make_ensemble(pts, 3, true);
  ens = advect(std::move(ens), *zero_drift(), NoiseSpec(SobolevIndex(0.0), 3.0, 0.0),
               AdvectOptions{0.01, 10, 1, 1, false});
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(ens.positions[ens.index(p, 1)].t1 == 3.0);
    CHECK(ens.positions[ens.index(p, 1)].t2 == 5.5);
  }
  CHECK(volume_defect(ens) == 0.0);
}

TEST_CASE("constant drift translates") {
  ParticleEnsemble ens = make_ensemble({{0.5, 0.5}}, 1, false);
  ens = advect(std::move(ens), *constant_drift(1.0, -0.5), NoiseSpec(SobolevIndex(0.0), 1.0, 0.0),
               AdvectOptions{0.1, 10, 1, 1, false});
  CHECK(ens.displacement[0].t1 == doctest::Approx(1.0));
  CHECK(ens.displacement[0].t2 == doctest::Approx(-0.5));
  CHECK(ens.time == doctest::Approx(1.0));
}

TEST_CASE("advection does not depend on the worker count") {
  auto run = [](int workers) {
    ParticleEnsemble ens = uniform_ensemble(200, 4, 5, true);
    return advect(std::move(ens), *taylor_green_drift(0.1), NoiseSpec(SobolevIndex(1.0), 3.0, 0.1),
                  AdvectOptions{1e-2, 20, 5, workers, false});
  };
  const ParticleEnsemble a = run(1), b = run(4);
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    CHECK(a.positions[i].t1 == b.positions[i].t1);
    CHECK(a.positions[i].t2 == b.positions[i].t2);
  }
}

TEST_CASE("analytic generator equals c_N times the Laplacian") {
  const TrigPolynomial f = TrigPolynomial::cos_mode({1, 1});
  for (double s : {0.0, 1.0, 2.0}) {
    for (double n : {1.0, 3.0}) {
      const double cn = c_constant(SobolevIndex(s), n);
      CHECK(cylinder_generator(f, {0.4, 1.9}, SobolevIndex(s), n) ==
            doctest::Approx(cn * f.laplacian({0.4, 1.9})).epsilon(1e-12));
    }
  }
}

TEST_CASE("Monte Carlo generator near (0, 0)") {
  GeneratorOptions go;
  go.n_paths = 20000;
  go.seed = 1;
  const Estimate e = estimate_generator(TrigPolynomial::cos_mode({1, 0}), {0.0, 0.0},
                                        *zero_drift(), NoiseSpec(SobolevIndex(0.0), 2.0, 1.0), go);
  CHECK(std::abs(e.mean + 1.0) < 4.0 * e.se);
  go.workers = 3;
  const Estimate e3 = estimate_generator(TrigPolynomial::cos_mode({1, 0}), {0.0, 0.0},
                                         *zero_drift(), NoiseSpec(SobolevIndex(0.0), 2.0, 1.0), go);
  CHECK(e3.mean == e.mean);
}

TEST_CASE("parallel transport stays orthogonal") {
  const NoiseSpec spec(SobolevIndex(0.0), 2.0, 0.5);
  std::vector<Increments> path;
  for (std::uint32_t i = 0; i < 100; ++i) path.push_back(sample_increments(spec, 1e-3, 0, i, 1));
  const TransportFrame f = parallel_transport(path, spec);
  CHECK(f.dim() == 12);
  CHECK(f.orthogonality_defect() < 1e-3);
}

TEST_CASE("Taylor-Green solves the geodesic equation") {
  for (double s : {0.0, 1.0}) {
    const SobolevIndex si(s);
    const NoiseSpec spec(si, 4.0, 0.1);
    Trajectory tr{[&](double t) { return taylor_green_coeffs(t, 0.1, si); },
                  [&](double t) { return -0.2 * taylor_green_coeffs(t, 0.1, si); }, 0.0};
    CHECK(geodesic_residual(tr, spec, 0.3).norm < 1e-12);
    CHECK(geodesic_residual(tr, spec, 0.3, 1.0, 1.0).norm > 1e-3);
  }
}

TEST_CASE("steady single mode leaves nu |m|^2 times its coefficient") {
  const SobolevIndex s(0.0);
  const FieldCoeffs u = 0.7 * FieldCoeffs::basis(BasisKind::A, Mode(2, 1), s);
  Trajectory tr{[&](double) { return u; }, [&](double) { return FieldCoeffs(s); }, 0.0};
  const GeodesicResidual r = geodesic_residual(tr, NoiseSpec(s, 3.0, 0.1), 0.0);
  CHECK(r.residual.coeff(BasisKind::A, Mode(2, 1)) == doctest::Approx(0.1 * 5 * 0.7).epsilon(1e-13));
  CHECK(r.boundary_modes.empty());
}

TEST_CASE("deterministic action of Taylor-Green") {
  const double nu = 0.1, T = 1.0;
  CHECK(deterministic_action(*taylor_green_drift(nu), T) ==
        doctest::Approx(0.25 * (1 - std::exp(-4 * nu * T)) / (4 * nu)).epsilon(1e-10));
}

TEST_CASE("time reversal") {
  const DriftPtr d = time_reversed(taylor_green_drift(0.2), 1.0);
  const TangentVec2 v = d->value(0.25, {1.0, 0.3}, nullptr);
  const TangentVec2 w = taylor_green_drift(0.2)->value(0.75, {1.0, 0.3}, nullptr);
  CHECK(v.v1 == doctest::Approx(-w.v1));
  CHECK(v.v2 == doctest::Approx(-w.v2));
}

TEST_CASE("transported increment without noise") {
  const SobolevIndex s(0.0);
  const NoiseSpec spec(s, 2.0, 0.0);
  const FieldCoeffs u = taylor_green_coeffs(0.0, 0.0, s);
  const Increments zero(spec.ball.size(), {0.0, 0.0});
  CHECK(transported_increment(u, u, zero, spec, 1e-3, 1.0).max_abs() < 1e-12);
}
