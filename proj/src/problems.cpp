#include "qmrom/problems.hpp"

#include <cmath>
#include <random>
#include <string>

#include "qmrom/errors.hpp"
#include "qmrom/kernels.hpp"

namespace qmrom {

Vector helix_state(double t) {
  return Vector{{std::cos(t), std::sin(t), 0.5 * std::cos(2.0 * t)}};
}

Vector helix_velocity(double t) {
  return Vector{{-std::sin(t), std::cos(t), -std::sin(2.0 * t)}};
}

SnapshotSet helix_snapshots(Index k) {
  if (k < 3) throw SizeError("helix needs at least 3 samples");
  SnapshotSet s;
  s.states.resize(3, k);
  s.times.resize(k);
  Matrix d(3, k);
  for (Index j = 0; j < k; ++j) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(k);
    s.times[j] = t;
    s.states.col(j) = helix_state(t);
    d.col(j) = helix_velocity(t);
  }
  s.derivatives = std::move(d);
  s.derivative_order = 1;
  return s;
}

void AdvectionSpec::validate() const {
  if (n < 8) throw ConfigError("advection: n must be at least 8");
  if (k < 4) throw ConfigError("advection: k must be at least 4");
  if (!(mu >= 0.05 && mu <= 0.25)) throw ConfigError("advection: mu must lie in [0.05, 0.25]");
  if (!(t_end > 0.0)) throw ConfigError("advection: t_end must be positive");
  if (!std::isfinite(c)) throw ConfigError("advection: c must be finite");
}

Vector advection_grid(Index n) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
  return x;
}

Vector advection_times(const AdvectionSpec& spec) {
  Vector t(spec.k);
  for (Index j = 0; j < spec.k; ++j) {
    t[j] = static_cast<double>(j + 1) * spec.t_end / static_cast<double>(spec.k);
  }
  return t;
}

Matrix advection_states(const AdvectionSpec& spec, const Vector& times) {
  const Vector x = advection_grid(spec.n);
  const double amp = 1.0 / std::sqrt(kAdvectionWidth * std::numbers::pi);
  Matrix S(spec.n, times.size());
  for (Index j = 0; j < times.size(); ++j) {
    for (Index i = 0; i < spec.n; ++i) {
      const double z = x[i] - spec.c * times[j] - spec.mu;
      S(i, j) = amp * std::exp(-z * z / kAdvectionWidth);
    }
  }
  return S;
}

Matrix advection_time_derivative(const AdvectionSpec& spec, const Vector& times) {
  const Vector x = advection_grid(spec.n);
  const double amp = 1.0 / std::sqrt(kAdvectionWidth * std::numbers::pi);
  Matrix D(spec.n, times.size());
  for (Index j = 0; j < times.size(); ++j) {
    for (Index i = 0; i < spec.n; ++i) {
      const double z = x[i] - spec.c * times[j] - spec.mu;
      D(i, j) = amp * std::exp(-z * z / kAdvectionWidth) * 2.0 * spec.c * z / kAdvectionWidth;
    }
  }
  return D;
}

SnapshotSet advection_snapshots(const AdvectionSpec& spec) {
  spec.validate();
  SnapshotSet s;
  s.times = advection_times(spec);
  s.states = advection_states(spec, s.times);
  s.derivatives = advection_time_derivative(spec, s.times);
  s.derivative_order = 1;
  s.params.assign(static_cast<std::size_t>(spec.k), spec.mu);
  return s;
}

SnapshotSet advection_training_set(const AdvectionSpec& base, const std::vector<double>& mus) {
  if (mus.empty()) throw ConfigError("advection: no training parameters");
  std::vector<SnapshotSet> parts(mus.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(mus.size()); ++i) {
    AdvectionSpec spec = base;
    spec.mu = mus[static_cast<std::size_t>(i)];
    spec.validate();
    parts[static_cast<std::size_t>(i)] = advection_snapshots(spec);
  }
  const Index k = base.k;
  const Index total = k * static_cast<Index>(mus.size());
  SnapshotSet out;
  out.states.resize(base.n, total);
  out.times.resize(total);
  Matrix d(base.n, total);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Index off = static_cast<Index>(i) * k;
    out.states.middleCols(off, k) = parts[i].states;
    out.times.segment(off, k) = parts[i].times;
    d.middleCols(off, k) = *parts[i].derivatives;
    out.params.insert(out.params.end(), parts[i].params.begin(), parts[i].params.end());
  }
  out.derivatives = std::move(d);
  out.derivative_order = 1;
  return out;
}

std::vector<double> default_training_mus() { return {0.05, 0.10, 0.15, 0.20, 0.25}; }

std::vector<double> sample_test_parameters(Index count, std::uint64_t seed, double lo, double hi) {
  if (count < 0) throw ConfigError("test parameter count must be non-negative");
  std::mt19937_64 gen(seed);
  std::vector<double> out(static_cast<std::size_t>(count));
  // 53 random bits mapped onto [0, 1); avoids library-specific distributions.
  for (auto& v : out) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    v = lo + (hi - lo) * u;
  }
  return out;
}

Matrix advection_matrix(Index n, double c) {
  if (n < 4) throw SizeError("advection_matrix: n must be at least 4");
  const double coef = c * static_cast<double>(n);
  Matrix A = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    A(i, i) = -coef;
    A(i, (i + n - 1) % n) = coef;
  }
  return A;
}

Index WaveSpec::internal_substeps() const {
  if (substeps > 0) return substeps;
  const double h = std::min(hx(), hy());
  return std::max<Index>(1, static_cast<Index>(std::ceil(snapshot_spacing() * std::sqrt(2.0) / h)));
}

double WaveSpec::internal_dt() const {
  return snapshot_spacing() / static_cast<double>(internal_substeps());
}

Index WaveSpec::center_index() const { return (ny / 2) * nx + nx / 2; }

void WaveSpec::validate() const {
  if (nx < 16 || ny < 8) throw ConfigError("wave2d: grid must be at least 16x8");
  if (k < 2) throw ConfigError("wave2d: k must be at least 2");
  if (!(t_final > 0.0)) throw ConfigError("wave2d: t_final must be positive");
  if (!(width > 0.0)) throw ConfigError("wave2d: pulse width must be positive");
  if (!(lx > 0.0 && ly > 0.0)) throw ConfigError("wave2d: domain lengths must be positive");
  if (substeps < 0) throw ConfigError("wave2d: substeps must be non-negative");
  const double dt = internal_dt();
  const double cfl = dt * std::sqrt(1.0 / (hx() * hx()) + 1.0 / (hy() * hy()));
  if (cfl > 1.0 + 1e-12) {
    throw ConfigError("wave2d: CFL number " + std::to_string(cfl) +
                      " exceeds 1; increase substeps");
  }
}

Vector wave_initial_state(const WaveSpec& spec) {
  Vector u(spec.n());
  for (Index iy = 0; iy < spec.ny; ++iy) {
    const double y = (static_cast<double>(iy) + 0.5) * spec.hy();
    for (Index ix = 0; ix < spec.nx; ++ix) {
      const double x = (static_cast<double>(ix) + 0.5) * spec.hx();
      const double d2 = (x - spec.x0) * (x - spec.x0) + (y - spec.y0) * (y - spec.y0);
      u[iy * spec.nx + ix] = spec.amplitude * std::exp(-d2 / spec.width);
    }
  }
  return u;
}

SnapshotSet wave_snapshots(const WaveSpec& spec) {
  spec.validate();
  const Index m = spec.internal_substeps();
  const double dt = spec.internal_dt();
  const double dt2 = dt * dt;

  SnapshotSet s;
  s.states.resize(spec.n(), spec.k);
  s.times.resize(spec.k);

  Vector prev = wave_initial_state(spec);
  Vector lap;
  kernels::parallel::neumann_laplacian(prev, spec.nx, spec.ny, spec.hx(), spec.hy(), lap);
  // Zero initial velocity: Taylor start.
  Vector curr = prev + (0.5 * dt2) * lap;
  s.states.col(0) = prev;
  s.times[0] = 0.0;

  Index step = 1;
  for (Index j = 1; j < spec.k; ++j) {
    for (; step < j * m; ++step) {
      kernels::parallel::neumann_laplacian(curr, spec.nx, spec.ny, spec.hx(), spec.hy(), lap);
      Vector next = 2.0 * curr - prev + dt2 * lap;
      prev = std::move(curr);
      curr = std::move(next);
    }
    s.states.col(j) = curr;
    s.times[j] = static_cast<double>(j) * spec.snapshot_spacing();
  }
  return s;
}

}  // namespace qmrom
