#include "sdiff/ns_oracle.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sdiff/error.hpp"

namespace sdiff {

namespace {

using cplx = std::complex<double>;

std::mutex& plan_mutex() {
  static std::mutex mu;
  return mu;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

VorticityGrid::VorticityGrid(int n_grid, double nu_) : nu(nu_), n_(n_grid) {
  require(is_power_of_two(n_grid) && n_grid >= 4, "n_grid must be a power of two >= 4");
  require(nu_ >= 0.0, "nu must be non-negative");
  hat_.assign(static_cast<std::size_t>(n_grid) * n_grid, cplx{});
}

std::size_t VorticityGrid::slot(int k1, int k2) const {
  require(k1 >= -n_ / 2 && k1 < n_ / 2 && k2 >= -n_ / 2 && k2 < n_ / 2,
          "wavenumber outside the grid", ErrorCode::domain);
  const int i1 = k1 < 0 ? k1 + n_ : k1;
  const int i2 = k2 < 0 ? k2 + n_ : k2;
  return static_cast<std::size_t>(i1) * n_ + i2;
}

double VorticityGrid::energy() const {
  double e = 0.0;
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      const int k1 = wavenumber(i), k2 = wavenumber(j);
      const long k2n = static_cast<long>(k1) * k1 + static_cast<long>(k2) * k2;
      if (k2n == 0) continue;
      e += std::norm(hat_[static_cast<std::size_t>(i) * n_ + j]) / static_cast<double>(k2n);
    }
  }
  return 0.5 * e;
}

double VorticityGrid::enstrophy() const {
  double e = 0.0;
  for (const cplx& z : hat_) e += std::norm(z);
  return 0.5 * e;
}

double VorticityGrid::conjugate_asymmetry() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      const int k1 = wavenumber(i), k2 = wavenumber(j);
      if (k1 == -n_ / 2 || k2 == -n_ / 2) continue;
      worst = std::max(worst, std::abs(at(k1, k2) - std::conj(at(-k1, -k2))));
    }
  }
  return worst;
}

double velocity_l2_distance(const VorticityGrid& a, const VorticityGrid& b) {
  require(a.n() == b.n(), "grids have different sizes");
  double e = 0.0;
  const int n = a.n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int k1 = a.wavenumber(i), k2 = a.wavenumber(j);
      const long k2n = static_cast<long>(k1) * k1 + static_cast<long>(k2) * k2;
      if (k2n == 0) continue;
      const std::size_t idx = static_cast<std::size_t>(i) * n + j;
      e += std::norm(a.data()[idx] - b.data()[idx]) / static_cast<double>(k2n);
    }
  }
  return std::sqrt(e);
}

FieldCoeffs taylor_green_coeffs(double t, double nu, SobolevIndex s) {
  const double c = std::pow(2.0, 0.5 * (s.value() - 1.0)) * std::exp(-2.0 * nu * t);
  FieldCoeffs u(s);
  u.add(BasisKind::B, Mode(1, 1), c);
  u.add(BasisKind::B, Mode(1, -1), -c);
  return u;
}

VorticityGrid taylor_green_grid(int n_grid, double nu, double t) {
  return from_field_coeffs(taylor_green_coeffs(t, nu, SobolevIndex(0.0)), n_grid, nu);
}

struct NsSolver::Impl {
  int n;
  double cfl_max;
  std::size_t size;
  fftw_complex* buf;
  fftw_plan fwd;
  fftw_plan bwd;
  std::vector<double> k1, k2, inv_k2;
  std::vector<char> keep;
  std::vector<cplx> u1, u2, wx, wy;

  Impl(int n_, double cfl) : n(n_), cfl_max(cfl), size(static_cast<std::size_t>(n_) * n_) {
    buf = fftw_alloc_complex(size);
    {
      std::lock_guard lock(plan_mutex());
      fwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
      bwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    k1.resize(size);
    k2.resize(size);
    inv_k2.resize(size);
    keep.resize(size);
    const int lim = n / 3;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * n + j;
        const int a = i < n / 2 ? i : i - n;
        const int b = j < n / 2 ? j : j - n;
        k1[idx] = a;
        k2[idx] = b;
        const double kk = static_cast<double>(a) * a + static_cast<double>(b) * b;
        inv_k2[idx] = kk > 0.0 ? 1.0 / kk : 0.0;
        keep[idx] = (std::abs(a) <= lim && std::abs(b) <= lim) ? 1 : 0;
      }
    }
    u1.resize(size);
    u2.resize(size);
    wx.resize(size);
    wy.resize(size);
  }

  ~Impl() {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
  }

  void to_physical(const std::vector<cplx>& spec, std::vector<cplx>& phys) {
    std::memcpy(buf, spec.data(), size * sizeof(fftw_complex));
    fftw_execute(bwd);
    std::memcpy(static_cast<void*>(phys.data()), buf, size * sizeof(fftw_complex));
  }

  // Velocity and vorticity gradient in physical space.
  void fields(const std::vector<cplx>& w) {
    std::vector<cplx> a(size), b(size), c(size), d(size);
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < size; ++i) {
      const cplx psi = -w[i] * inv_k2[i];
      a[i] = -I * k2[i] * psi;
      b[i] = I * k1[i] * psi;
      c[i] = I * k1[i] * w[i];
      d[i] = I * k2[i] * w[i];
    }
    to_physical(a, u1);
    to_physical(b, u2);
    to_physical(c, wx);
    to_physical(d, wy);
  }

  double max_speed() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      m = std::max(m, std::hypot(u1[i].real(), u2[i].real()));
    }
    return m;
  }

  // -(u.grad omega), dealiased, in spectral space.
  std::vector<cplx> rhs(const std::vector<cplx>& w) {
    fields(w);
    for (std::size_t i = 0; i < size; ++i) {
      const double v = -(u1[i].real() * wx[i].real() + u2[i].real() * wy[i].real());
      buf[i][0] = v;
      buf[i][1] = 0.0;
    }
    fftw_execute(fwd);
    std::vector<cplx> out(size);
    const double scale = 1.0 / static_cast<double>(size);
    for (std::size_t i = 0; i < size; ++i) {
      out[i] = keep[i] ? cplx(buf[i][0], buf[i][1]) * scale : cplx{};
    }
    out[0] = 0.0;
    return out;
  }
};

NsSolver::NsSolver(int n_grid, double cfl_max) {
  require(is_power_of_two(n_grid) && n_grid >= 4, "n_grid must be a power of two >= 4");
  require(cfl_max > 0.0, "cfl_max must be positive");
  impl_ = new Impl(n_grid, cfl_max);
}

NsSolver::~NsSolver() { delete impl_; }

double NsSolver::max_velocity(const VorticityGrid& g) {
  require(g.n() == impl_->n, "grid size does not match the solver");
  impl_->fields(g.data());
  return impl_->max_speed();
}

std::vector<double> NsSolver::physical_vorticity(const VorticityGrid& g) {
  require(g.n() == impl_->n, "grid size does not match the solver");
  std::vector<cplx> phys(impl_->size);
  impl_->to_physical(g.data(), phys);
  std::vector<double> out(impl_->size);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = phys[i].real();
  return out;
}

void NsSolver::step(VorticityGrid& g, double dt) {
  Impl& m = *impl_;
  require(g.n() == m.n, "grid size does not match the solver");
  require(dt > 0.0, "dt must be positive");
  const std::vector<cplx>& w = g.data();
  const std::size_t size = m.size;

  std::vector<cplx> a = m.rhs(w);
  const double umax = m.max_speed();
  const double h = 2.0 * std::numbers::pi / m.n;
  if (umax * dt / h > m.cfl_max) {
    std::ostringstream os;
    os << "CFL violation: dt=" << dt << " gives Courant number " << umax * dt / h
       << "; use dt <= " << m.cfl_max * h / umax;
    fail(ErrorCode::numerical, os.str());
  }

  std::vector<double> e(size), e2(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double kk = m.k1[i] * m.k1[i] + m.k2[i] * m.k2[i];
    e[i] = std::exp(-g.nu * kk * dt);
    e2[i] = std::exp(-g.nu * kk * dt * 0.5);
  }
  std::vector<cplx> tmp(size);
  for (std::size_t i = 0; i < size; ++i) tmp[i] = e2[i] * (w[i] + 0.5 * dt * a[i]);
  std::vector<cplx> b = m.rhs(tmp);
  for (std::size_t i = 0; i < size; ++i) tmp[i] = e2[i] * w[i] + 0.5 * dt * b[i];
  std::vector<cplx> c = m.rhs(tmp);
  for (std::size_t i = 0; i < size; ++i) tmp[i] = e[i] * w[i] + dt * e2[i] * c[i];
  std::vector<cplx> d = m.rhs(tmp);
  std::vector<cplx>& out = g.data();
  for (std::size_t i = 0; i < size; ++i) {
    cplx v = e[i] * w[i] + dt / 6.0 * (e[i] * a[i] + 2.0 * e2[i] * (b[i] + c[i]) + d[i]);
    out[i] = m.keep[i] ? v : cplx{};
  }
  out[0] = 0.0;
  g.time += dt;
}

VorticityGrid step(const VorticityGrid& g, double dt) {
  NsSolver solver(g.n());
  VorticityGrid out = g;
  solver.step(out, dt);
  return out;
}

NsRun integrate(const VorticityGrid& initial, double T, int n_steps, int record_every) {
  require(n_steps >= 1, "n_steps must be at least 1");
  require(T > 0.0, "T must be positive");
  require(record_every >= 1, "record_every must be at least 1");
  NsSolver solver(initial.n());
  const double dt = T / n_steps;
  NsRun run;
  VorticityGrid g = initial;
  auto record = [&] {
    run.times.push_back(g.time);
    run.snapshots.push_back(g);
    run.energy.push_back(g.energy());
    run.enstrophy.push_back(g.enstrophy());
  };
  record();
  const double t0 = initial.time;
  for (int i = 1; i <= n_steps; ++i) {
    solver.step(g, dt);
    g.time = t0 + i * dt;
    if (i % record_every == 0 || i == n_steps) record();
  }
  return run;
}

FieldCoeffs velocity_from_vorticity(const VorticityGrid& g) {
  if (std::abs(g.at(0, 0)) != 0.0) {
    fail(ErrorCode::domain, "vorticity has nonzero mean; no periodic velocity exists");
  }
  const double n = std::sqrt(2.0) * (g.n() / 2);
  return to_field_coeffs(g, SobolevIndex(0.0), n);
}

FieldCoeffs to_field_coeffs(const VorticityGrid& g, SobolevIndex s, double n,
                            BandPolicy policy) {
  if (std::abs(g.at(0, 0)) > 1e-14) {
    fail(ErrorCode::domain, "vorticity has nonzero mean; no periodic velocity exists");
  }
  FieldCoeffs u(s);
  const int half = g.n() / 2;
  for (int k1 = 0; k1 < half; ++k1) {
    for (int k2 = -half + 1; k2 < half; ++k2) {
      if (!is_representative({k1, k2})) continue;
      const cplx w = g.at(k1, k2);
      if (w == cplx{}) continue;
      const long nn = static_cast<long>(k1) * k1 + static_cast<long>(k2) * k2;
      if (static_cast<double>(nn) > n * n) {
        if (policy == BandPolicy::strict) {
          fail(ErrorCode::domain, "band limit exceeded");
        }
        continue;
      }
      const double scale = std::pow(static_cast<double>(nn), 0.5 * (s.value() - 1.0));
      const double cos_coef = 2.0 * w.real();
      const double sin_coef = -2.0 * w.imag();
      const Mode m(k1, k2);
      u.add(BasisKind::A, m, scale * sin_coef);
      u.add(BasisKind::B, m, -scale * cos_coef);
    }
  }
  return u;
}

VorticityGrid from_field_coeffs(const FieldCoeffs& u, int n_grid, double nu,
                                BandPolicy policy) {
  VorticityGrid g(n_grid, nu);
  const int lim = g.dealias_limit();
  for (const auto& [k, c] : u.modes()) {
    if (std::abs(k.k1()) > lim || std::abs(k.k2()) > lim) {
      if (policy == BandPolicy::strict) fail(ErrorCode::domain, "band limit exceeded");
      continue;
    }
    const double scale =
        std::pow(static_cast<double>(k.norm_sq()), 0.5 * (1.0 - u.s().value()));
    const double cos_coef = -scale * c.b;
    const double sin_coef = scale * c.a;
    const cplx w(0.5 * cos_coef, -0.5 * sin_coef);
    g.at(k.k1(), k.k2()) = w;
    g.at(-k.k1(), -k.k2()) = std::conj(w);
  }
  return g;
}

void write_snapshot_csv(std::ostream& os, const VorticityGrid& g) {
  os.precision(17);
  os << "# n_grid=" << g.n() << "\n# time=" << g.time << "\n# nu=" << g.nu << "\n";
  os << "k1,k2,re,im\n";
  const int half = g.n() / 2;
  for (int k1 = -half; k1 < half; ++k1) {
    for (int k2 = -half; k2 < half; ++k2) {
      const cplx w = g.at(k1, k2);
      if (w == cplx{}) continue;
      os << k1 << ',' << k2 << ',' << w.real() << ',' << w.imag() << '\n';
    }
  }
}

VorticityGrid read_snapshot_csv(std::istream& is) {
  int n = 0;
  double time = 0.0, nu = 0.0;
  std::string line;
  std::vector<std::tuple<int, int, double, double>> rows;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string val = line.substr(eq + 1);
      try {
        if (key == "n_grid") n = std::stoi(val);
        else if (key == "time") time = std::stod(val);
        else if (key == "nu") nu = std::stod(val);
      } catch (const std::exception&) {
        fail(ErrorCode::io, "malformed snapshot header: " + line);
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("k1", 0) == 0) continue;
    }
    std::istringstream ls(line);
    int k1, k2;
    double re, im;
    char c1, c2, c3;
    if (!(ls >> k1 >> c1 >> k2 >> c2 >> re >> c3 >> im) || c1 != ',' || c2 != ',' ||
        c3 != ',') {
      fail(ErrorCode::io, "malformed snapshot row: " + line);
    }
    rows.emplace_back(k1, k2, re, im);
  }
  if (n == 0) fail(ErrorCode::io, "snapshot is missing the n_grid header");
  VorticityGrid g(n, nu);
  g.time = time;
  for (const auto& [k1, k2, re, im] : rows) g.at(k1, k2) = cplx(re, im);
  return g;
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    fail(ErrorCode::io, "truncated binary snapshot");
  }
  return v;
}

constexpr char kMagic[8] = {'S', 'D', 'V', 'O', 'R', 'T', '0', '1'};

}  // namespace

void write_snapshot_binary(std::ostream& os, const VorticityGrid& g) {
  os.write(kMagic, 8);
  put<std::int32_t>(os, g.n());
  put<double>(os, g.time);
  put<double>(os, g.nu);
  std::int64_t count = 0;
  for (const cplx& w : g.data()) count += (w != cplx{});
  put<std::int64_t>(os, count);
  const int half = g.n() / 2;
  for (int k1 = -half; k1 < half; ++k1) {
    for (int k2 = -half; k2 < half; ++k2) {
      const cplx w = g.at(k1, k2);
      if (w == cplx{}) continue;
      put<std::int32_t>(os, k1);
      put<std::int32_t>(os, k2);
      put<double>(os, w.real());
      put<double>(os, w.imag());
    }
  }
}

VorticityGrid read_snapshot_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    fail(ErrorCode::io, "not a vorticity snapshot (bad magic)");
  }
  const auto n = get<std::int32_t>(is);
  const double time = get<double>(is);
  const double nu = get<double>(is);
  const auto count = get<std::int64_t>(is);
  VorticityGrid g(n, nu);
  g.time = time;
  if (count < 0 || count > static_cast<std::int64_t>(n) * n) {
    fail(ErrorCode::io, "snapshot record count out of range");
  }
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k1 = get<std::int32_t>(is);
    const auto k2 = get<std::int32_t>(is);
    const double re = get<double>(is);
    const double im = get<double>(is);
    g.at(k1, k2) = cplx(re, im);
  }
  return g;
}

void save_snapshot(const std::string& path, const VorticityGrid& g) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  std::ofstream os(path, csv ? std::ios::out : std::ios::out | std::ios::binary);
  if (!os) fail(ErrorCode::io, "cannot open " + path + " for writing");
  if (csv) write_snapshot_csv(os, g);
  else write_snapshot_binary(os, g);
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

VorticityGrid load_snapshot(const std::string& path) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  std::ifstream is(path, csv ? std::ios::in : std::ios::in | std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open " + path);
  return csv ? read_snapshot_csv(is) : read_snapshot_binary(is);
}

}  // namespace sdiff
