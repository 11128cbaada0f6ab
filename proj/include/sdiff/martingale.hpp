#pragma once

// Martingale defect of the velocity process along the drifted flow.
//
// plain:       M_t = u(t, g_t(x)), read on an Eulerian grid of starting
//              points and projected onto the basis with grid quadrature.
// transported: M_t = T_{t<-.} u(.) in coefficient space, pulled back along
//              the noise with the Christoffel operators; its expected
//              increment is compared with (nu / c_N) R^N u.

#include <cstdint>
#include <vector>

#include "sdiff/dynamics.hpp"

namespace sdiff {

struct MartingaleOptions {
  double T = 1.0;
  /// Length of the forward window used to estimate the conditional drift.
  double window = 1e-3;
  int window_steps = 1;
  /// Plain reading: combine windows h and 2h to remove the O(h) bias.
  bool extrapolate = true;
  int checkpoints = 8;
  int grid = 16;
  std::size_t n_paths = 10000;
  /// Paths for the transported reading (each costs a few field products).
  std::size_t n_paths_transported = 2000;
  /// Report modes with |m| <= mode_radius.
  double mode_radius = 2.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct ModeDefect {
  BasisElement element;
  double mean = 0.0;  // aggregated over checkpoints
  double se = 0.0;
  double z = 0.0;
  std::vector<double> per_checkpoint;
};

struct MartingaleReport {
  std::vector<double> checkpoint_times;
  std::vector<ModeDefect> plain;
  std::vector<ModeDefect> transported;
  double max_abs_z_plain = 0.0;
  double max_abs_z_transported = 0.0;
};

MartingaleReport martingale_defect(const DriftSource& drift, const NoiseSpec& spec,
                                   const MartingaleOptions& opt,
                                   bool with_transported = true);

/// One draw of the pulled-back increment (S u(t + h) - u(t)) / h for the
/// given noise increments, S = I + G + G^2 / 2 with
/// G = h Gamma^0(u(t), .) + amp sum_k (dx_k Gamma(A_k, .) + dy_k Gamma(B_k, .)).
FieldCoeffs transported_increment(const FieldCoeffs& u_t, const FieldCoeffs& u_th,
                                  const Increments& inc, const NoiseSpec& spec, double h,
                                  double sign);

}  // namespace sdiff
