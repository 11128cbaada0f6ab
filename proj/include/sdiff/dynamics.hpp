#pragma once

// Stochastic flows on the torus driven by the truncated Brownian motion of
// the diffeomorphism group, with optional drift. Group elements are only seen
// through their action on marked points.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdiff/algebra.hpp"
#include "sdiff/stats.hpp"

namespace sdiff {

/// Noise on the modes of a truncation ball. Each mode k carries two Brownian
/// motions (for A_k and B_k) with amplitude sqrt(2 nu / c_N), which makes the
/// one-point generator nu * Laplacian.
struct NoiseSpec {
  NoiseSpec(SobolevIndex s, double n, double nu);

  SobolevIndex s;
  TruncationBall ball;
  double nu;
  double c_n;
  /// Each increment is the sum of 2^refine sub-increments, so a run with
  /// (dt, refine + 1) uses the same Brownian path as (dt / 2, refine).
  int refine = 0;

  double amplitude() const;
};

/// One (dx, dy) pair per ball mode, already multiplied by sqrt(dt) but not by
/// the amplitude.
using Increments = std::vector<std::array<double, 2>>;

Increments sample_increments(const NoiseSpec& spec, double dt,
                             std::uint64_t path_id, std::uint32_t step_id,
                             std::uint64_t seed);

/// The random field sum_k amp * (dx_k A_k + dy_k B_k) for one step.
class NoiseField {
 public:
  explicit NoiseField(const NoiseSpec& spec);
  void set(const Increments& inc, double scale);
  TangentVec2 value(Point2 x, Mat2* jac) const;

 private:
  struct Mode2 {
    int k1, k2;
    double v1, v2;  // (k2, -k1) / |k|^{s+1}
  };
  std::vector<Mode2> modes_;
  std::vector<std::array<double, 2>> w_;
  int kmax1_ = 0;
  int kmax2_ = 0;
};

/// Time-dependent divergence-free velocity u(t, theta).
class DriftSource {
 public:
  virtual ~DriftSource() = default;
  virtual std::string kind() const = 0;
  virtual TangentVec2 value(double t, Point2 x, Mat2* jac) const = 0;
  /// Coefficient form at time t in the H^s basis.
  virtual FieldCoeffs coeffs(double t, SobolevIndex s) const = 0;
};

using DriftPtr = std::shared_ptr<const DriftSource>;

DriftPtr zero_drift();
DriftPtr constant_drift(double c1, double c2);
DriftPtr static_drift(const FieldCoeffs& u);
/// e^{-2 nu t} (sin t1 cos t2, -cos t1 sin t2); with decaying = false the
/// time factor is dropped.
DriftPtr taylor_green_drift(double nu, bool decaying = true);
/// t -> -inner(T - t).
DriftPtr time_reversed(DriftPtr inner, double horizon);
/// Piecewise-linear interpolation in time between coefficient snapshots.
DriftPtr snapshot_drift(std::vector<double> times, std::vector<FieldCoeffs> fields);

struct ParticleEnsemble {
  double time = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_particles = 0;
  /// First RNG path id; path p of this ensemble draws from path_base + p.
  std::uint64_t path_base = 0;
  /// Steps taken so far; used as the RNG step counter.
  std::uint32_t steps_taken = 0;
  std::vector<Point2> positions;     // wrapped to [0, 2 pi), path-major
  std::vector<Point2> displacement;  // unwrapped, since creation
  std::vector<Mat2> deformation;     // empty unless tracked

  bool tracks_deformation() const { return !deformation.empty(); }
  std::size_t index(std::size_t path, std::size_t particle) const {
    return path * n_particles + particle;
  }
};

/// Every path starts from the same marked points.
ParticleEnsemble make_ensemble(const std::vector<Point2>& points,
                               std::size_t n_paths, bool track_deformation);
/// Independent uniform starting points per path.
ParticleEnsemble uniform_ensemble(std::size_t n_paths, std::size_t n_particles,
                                  std::uint64_t seed, bool track_deformation);
/// g x g grid of points 2 pi (i, j) / g.
std::vector<Point2> grid_points(int g);

struct AdvectOptions {
  double dt = 1e-3;
  int n_steps = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Odd paths reuse the increments of the preceding even path, negated.
  bool antithetic = false;
};

/// Heun predictor-corrector for the Stratonovich flow
///   dX = u(t, X) dt + amp * sum_k (A_k(X) o dx_k + B_k(X) o dy_k),
/// with the deformation advanced by the velocity Jacobian.
ParticleEnsemble advect(ParticleEnsemble ens, const DriftSource& drift,
                        const NoiseSpec& spec, const AdvectOptions& opt);

double volume_defect(const ParticleEnsemble& ens);

struct GeneratorOptions {
  double t_small = 1e-3;
  int n_steps = 1;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  int workers = 1;
  bool antithetic = true;
};

/// Monte Carlo (E f(g_t(theta)) - f(theta)) / t.
Estimate estimate_generator(const TrigPolynomial& f, Point2 theta,
                            const DriftSource& drift, const NoiseSpec& spec,
                            const GeneratorOptions& opt);

/// sum over the ball of ((A_k.grad)^2 + (B_k.grad)^2) f at theta, analytic.
double cylinder_generator(const TrigPolynomial& f, Point2 theta,
                          SobolevIndex s, double n);

class TransportFrame {
 public:
  TransportFrame() = default;
  explicit TransportFrame(std::vector<BasisElement> basis);

  std::size_t dim() const { return basis_.size(); }
  const std::vector<BasisElement>& basis() const { return basis_; }
  double& at(std::size_t i, std::size_t j) { return m_[i * dim() + j]; }
  double at(std::size_t i, std::size_t j) const { return m_[i * dim() + j]; }
  const std::vector<double>& data() const { return m_; }
  std::vector<double>& data() { return m_; }

  /// Spectral norm of M^T M - I.
  double orthogonality_defect() const;
  /// Acts on the ball part of u; other coefficients are dropped.
  FieldCoeffs apply(const FieldCoeffs& u) const;

 private:
  std::vector<BasisElement> basis_;
  std::vector<double> m_;
};

/// Sparse matrices Y -> Gamma(e, Y) restricted to the ball, one per basis
/// direction of the ball (A_k, B_k interleaved in ball order).
std::vector<std::vector<std::tuple<int, int, double>>> christoffel_matrices(
    SobolevIndex s, const TruncationBall& ball);

/// Integrates dT = -Gamma_k o dx^k T (Heun) over the given increments.
/// Throws when the orthogonality defect exceeds 10 * tol.
TransportFrame parallel_transport(const std::vector<Increments>& path,
                                  const NoiseSpec& spec, double tol = 1e-3);

struct Trajectory {
  std::function<FieldCoeffs(double)> value;
  /// Optional analytic time derivative; otherwise central differences.
  std::function<FieldCoeffs(double)> derivative;
  double fd_step = 1e-4;
};

struct GeodesicResidual {
  FieldCoeffs residual;
  double norm = 0.0;
  /// Modes of u outside the noise ball.
  std::vector<Mode> boundary_modes;
};

/// du/dt + nabla^0_u u - sigma (L^{s,N} u + (sign / 2) R^N u), with
/// sigma = 2 nu / (gamma c_N).
GeodesicResidual geodesic_residual(const Trajectory& traj, const NoiseSpec& spec,
                                   double t, double gamma = 1.0,
                                   double ricci_sign = -1.0);

struct ActionOptions {
  double T = 1.0;
  double dt = 1e-2;
  std::size_t n_paths = 10000;
  std::size_t n_particles = 64;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct ActionResult {
  Estimate estimate;
  double deterministic = 0.0;
};

/// (1/2) int_0^T mean_particles |u(t, g_t(theta))|^2 dt over paths.
ActionResult action_estimate(const DriftSource& drift, const NoiseSpec& spec,
                             const ActionOptions& opt);
/// (1/2) int_0^T mean_theta |u(t)|^2 dt (Simpson rule).
double deterministic_action(const DriftSource& drift, double T, int intervals = 512);

}  // namespace sdiff
