#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "qmrom/manifold.hpp"

namespace qmrom {

// Helix s(t) = (cos t, sin t, cos(2t)/2), sampled at t_j = 2 pi j / k.
Vector helix_state(double t);
Vector helix_velocity(double t);
SnapshotSet helix_snapshots(Index k);

inline constexpr double kAdvectionWidth = 0.0002;

struct AdvectionSpec {
  double c = 10.0;
  double mu = 0.1;
  Index n = 1024;
  Index k = 1000;
  double t_end = 0.1;

  void validate() const;
};

// x_i = (i + 1) / (n + 1), interior points of (0, 1).
Vector advection_grid(Index n);
// t_j = (j + 1) t_end / k, covering (0, t_end].
Vector advection_times(const AdvectionSpec& spec);
Matrix advection_states(const AdvectionSpec& spec, const Vector& times);
Matrix advection_time_derivative(const AdvectionSpec& spec, const Vector& times);
SnapshotSet advection_snapshots(const AdvectionSpec& spec);
// One trajectory per mu, concatenated and labelled with mu.
SnapshotSet advection_training_set(const AdvectionSpec& base,
                                   const std::vector<double>& mus);
std::vector<double> default_training_mus();
// Uniform draws over [lo, hi] from a seeded mt19937_64.
std::vector<double> sample_test_parameters(Index count, std::uint64_t seed,
                                           double lo = 0.05, double hi = 0.25);

// First-order periodic upwind discretization, h = 1/n.
Matrix advection_matrix(Index n, double c = 10.0);

struct WaveSpec {
  Index nx = 96;
  Index ny = 48;
  double lx = 4.0 * std::numbers::pi;
  double ly = 2.0 * std::numbers::pi;
  double x0 = std::numbers::pi;
  double y0 = std::numbers::pi;
  double width = 0.0072;
  double amplitude = 1.0;
  double t_final = 10.0;
  Index k = 1000;
  Index substeps = 0;  // internal steps per snapshot interval; 0 picks one

  double hx() const { return lx / static_cast<double>(nx); }
  double hy() const { return ly / static_cast<double>(ny); }
  Index n() const { return nx * ny; }
  // Snapshots are taken at j * spacing, j = 0..k-1, so the last is at t_final.
  double snapshot_spacing() const { return t_final / static_cast<double>(k - 1); }
  Index internal_substeps() const;
  double internal_dt() const;
  // Cell (nx/2, ny/2).
  Index center_index() const;
  void validate() const;
};

Vector wave_initial_state(const WaveSpec& spec);
SnapshotSet wave_snapshots(const WaveSpec& spec);

}  // namespace qmrom
