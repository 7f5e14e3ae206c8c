#pragma once

#include <optional>

#include "qmrom/manifold.hpp"
#include "qmrom/opinf.hpp"

namespace qmrom {

enum class TimeScheme { imex_euler, explicit_euler };

struct RomSimConfig {
  double dt = 0.0;
  double t_final = 0.0;
  Vector initial_full_state;
  Vector initial_velocity;  // second-order systems; empty means zero
  Index record_stride = 1;
  TimeScheme scheme = TimeScheme::imex_euler;

  void validate() const;
};

struct Trajectory {
  Vector times;
  Matrix reduced_states;  // r x recorded
  std::optional<Matrix> reconstructed;
  bool stable = true;
  std::optional<double> blowup_time;
};

inline constexpr double kBlowupFactor = 1e8;

Vector rhs(const RomOperators& ops, const Vector& shat);

Index step_count(double dt, double t_final);

Trajectory integrate_first_order(const RomOperators& ops, const Vector& shat0,
                                 double dt, double t_final, Index stride = 1,
                                 TimeScheme scheme = TimeScheme::imex_euler);
Trajectory integrate_first_order(const RomOperators& ops, const RomSimConfig& cfg,
                                 const QuadraticManifold& m);

Trajectory integrate_second_order(const RomOperators& ops, const Vector& shat0,
                                  const Vector& vhat0, double dt, double t_final,
                                  Index stride = 1);
Trajectory integrate_second_order(const RomOperators& ops, const RomSimConfig& cfg,
                                  const QuadraticManifold& m);

// Dispatches on ops.time_order.
Trajectory simulate(const RomOperators& ops, const RomSimConfig& cfg,
                    const QuadraticManifold& m);

// Central difference steps from the pair (prev, curr); on return the pair
// holds the last two states.
void advance_central_difference(const RomOperators& ops, Vector& prev, Vector& curr,
                                double dt, Index steps);

Matrix reconstruct(const QuadraticManifold& m, const Trajectory& traj);

}  // namespace qmrom
