#pragma once

// Pseudo-spectral solver for 2D incompressible Navier-Stokes in vorticity
// form on [0, 2 pi)^2, the Taylor-Green vortex, and converters between
// vorticity spectra and FieldCoeffs.

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdiff/algebra.hpp"

namespace sdiff {

/// omega_hat(k) = n^{-2} sum_x omega(x) e^{-i k.x} on the full n x n lattice,
/// wavenumbers in [-n/2, n/2).
class VorticityGrid {
 public:
  VorticityGrid() = default;
  VorticityGrid(int n_grid, double nu);

  int n() const { return n_; }
  double time = 0.0;
  double nu = 0.0;

  /// Storage index of wavenumber (k1, k2); both must lie in [-n/2, n/2).
  std::size_t slot(int k1, int k2) const;
  std::complex<double>& at(int k1, int k2) { return hat_[slot(k1, k2)]; }
  const std::complex<double>& at(int k1, int k2) const { return hat_[slot(k1, k2)]; }
  /// Wavenumber stored at storage row/column i.
  int wavenumber(int i) const { return i < n_ / 2 ? i : i - n_; }
  int dealias_limit() const { return n_ / 3; }

  std::vector<std::complex<double>>& data() { return hat_; }
  const std::vector<std::complex<double>>& data() const { return hat_; }

  /// (1/2) mean |u|^2 and (1/2) mean omega^2.
  double energy() const;
  double enstrophy() const;
  /// Largest |omega_hat(k) - conj(omega_hat(-k))|.
  double conjugate_asymmetry() const;

 private:
  int n_ = 0;
  std::vector<std::complex<double>> hat_;
};

/// Velocity-field RMS difference sqrt(mean |u_a - u_b|^2).
double velocity_l2_distance(const VorticityGrid& a, const VorticityGrid& b);

/// Taylor-Green coefficients: modes (1,1) and (1,-1), B components
/// +-2^{(s-1)/2} e^{-2 nu t}.
FieldCoeffs taylor_green_coeffs(double t, double nu, SobolevIndex s);
VorticityGrid taylor_green_grid(int n_grid, double nu, double t = 0.0);

/// Owns FFT plans and work buffers for one grid size. Not shared between
/// threads.
class NsSolver {
 public:
  explicit NsSolver(int n_grid, double cfl_max = 1.0);
  ~NsSolver();
  NsSolver(const NsSolver&) = delete;
  NsSolver& operator=(const NsSolver&) = delete;

  /// One integrating-factor RK4 step. Throws on CFL violation.
  void step(VorticityGrid& g, double dt);
  /// Largest |u| on the collocation grid.
  double max_velocity(const VorticityGrid& g);
  /// Physical-space vorticity samples, row-major in the theta1 index.
  std::vector<double> physical_vorticity(const VorticityGrid& g);

 private:
  struct Impl;
  Impl* impl_;
};

/// Convenience wrapper creating a solver for the grid size.
VorticityGrid step(const VorticityGrid& g, double dt);

struct NsRun {
  std::vector<double> times;
  std::vector<VorticityGrid> snapshots;
  std::vector<double> energy;
  std::vector<double> enstrophy;
};

/// Advances to time T with n_steps equal steps, keeping every
/// `record_every`-th state (the initial and final states always).
NsRun integrate(const VorticityGrid& initial, double T, int n_steps, int record_every = 1);

/// Spectral Biot-Savart velocity as coefficients in the H^0 basis.
FieldCoeffs velocity_from_vorticity(const VorticityGrid& g);

FieldCoeffs to_field_coeffs(const VorticityGrid& g, SobolevIndex s, double n,
                            BandPolicy policy = BandPolicy::strict);
VorticityGrid from_field_coeffs(const FieldCoeffs& u, int n_grid, double nu,
                                BandPolicy policy = BandPolicy::strict);

/// CSV: comment lines "# n_grid=", "# time=", "# nu=", then k1,k2,re,im for
/// every nonzero coefficient.
void write_snapshot_csv(std::ostream& os, const VorticityGrid& g);
VorticityGrid read_snapshot_csv(std::istream& is);
/// Little-endian binary: "SDVORT01", int32 n_grid, f64 time, f64 nu,
/// int64 count, then count records {int32 k1, int32 k2, f64 re, f64 im}.
void write_snapshot_binary(std::ostream& os, const VorticityGrid& g);
VorticityGrid read_snapshot_binary(std::istream& is);

/// Chooses the format from the extension (.csv, otherwise binary).
void save_snapshot(const std::string& path, const VorticityGrid& g);
VorticityGrid load_snapshot(const std::string& path);

}  // namespace sdiff
