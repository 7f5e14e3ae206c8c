#include "qmrom/rom.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>
#include <vector>

#include "qmrom/errors.hpp"

namespace qmrom {

void RomSimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_final >= dt)) throw ConfigError("t_final must be at least dt");
  if (record_stride < 1) throw ConfigError("record_stride must be at least 1");
}

Vector rhs(const RomOperators& ops, const Vector& shat) {
  if (shat.size() != ops.r()) throw SizeError("rhs: reduced state length does not match r");
  Vector out = ops.c_hat + ops.A_hat * shat;
  if (ops.has_quadratic()) out.noalias() += ops.H_hat * quad_features(shat, ops.fmap);
  return out;
}

Index step_count(double dt, double t_final) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_final >= dt)) throw ConfigError("t_final must be at least dt");
  return static_cast<Index>(std::floor(t_final / dt + 1e-9));
}

namespace {

// Collects every stride-th state and watches for blow-up.
class Recorder {
 public:
  Recorder(const Vector& shat0, double dt, Index steps, Index stride)
      : dt_(dt), stride_(stride), threshold_(kBlowupFactor * (1.0 + shat0.norm())) {
    columns_.reserve(static_cast<std::size_t>(steps / stride + 1));
    push(0, shat0);
  }

  // Returns false once the state has left the admissible region.
  bool observe(Index step, const Vector& shat) {
    if (!shat.allFinite() || shat.norm() > threshold_) {
      traj_.stable = false;
      traj_.blowup_time = static_cast<double>(step) * dt_;
      return false;
    }
    if (step % stride_ == 0) push(step, shat);
    return true;
  }

  Trajectory finish() {
    const Index r = columns_.empty() ? 0 : columns_.front().size();
    traj_.reduced_states.resize(r, static_cast<Index>(columns_.size()));
    traj_.times.resize(static_cast<Index>(times_.size()));
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      traj_.reduced_states.col(static_cast<Index>(j)) = columns_[j];
      traj_.times[static_cast<Index>(j)] = times_[j];
    }
    return std::move(traj_);
  }

 private:
  void push(Index step, const Vector& shat) {
    columns_.push_back(shat);
    times_.push_back(static_cast<double>(step) * dt_);
  }

  double dt_;
  Index stride_;
  double threshold_;
  std::vector<Vector> columns_;
  std::vector<double> times_;
  Trajectory traj_;
};

void check_ops(const RomOperators& ops, int order, const Vector& shat0) {
  ops.validate();
  if (ops.time_order != order) {
    throw ValidationError("integrator expects time_order " + std::to_string(order) + ", got " +
                          std::to_string(ops.time_order));
  }
  if (shat0.size() != ops.r()) throw SizeError("initial reduced state length does not match r");
}

}  // namespace

Trajectory integrate_first_order(const RomOperators& ops, const Vector& shat0, double dt,
                                 double t_final, Index stride, TimeScheme scheme) {
  check_ops(ops, 1, shat0);
  if (stride < 1) throw ConfigError("record_stride must be at least 1");
  const Index steps = step_count(dt, t_final);
  const Index r = ops.r();

  Eigen::FullPivLU<Matrix> lu;
  if (scheme == TimeScheme::imex_euler) {
    lu.compute(Matrix::Identity(r, r) - dt * ops.A_hat);
    if (!lu.isInvertible()) {
      throw IntegrationError("I - dt*A_hat is singular; reduce dt");
    }
  }

  Recorder rec(shat0, dt, steps, stride);
  Vector s = shat0;
  for (Index n = 1; n <= steps; ++n) {
    Vector forcing = ops.c_hat;
    if (ops.has_quadratic()) forcing.noalias() += ops.H_hat * quad_features(s, ops.fmap);
    if (scheme == TimeScheme::imex_euler) {
      s = lu.solve(Vector(s + dt * forcing));
    } else {
      s += dt * (forcing + ops.A_hat * s);
    }
    if (!rec.observe(n, s)) break;
  }
  return rec.finish();
}

Trajectory integrate_first_order(const RomOperators& ops, const RomSimConfig& cfg,
                                 const QuadraticManifold& m) {
  cfg.validate();
  return integrate_first_order(ops, encode(m.pod, cfg.initial_full_state), cfg.dt, cfg.t_final,
                               cfg.record_stride, cfg.scheme);
}

void advance_central_difference(const RomOperators& ops, Vector& prev, Vector& curr, double dt,
                                Index steps) {
  const double dt2 = dt * dt;
  for (Index n = 0; n < steps; ++n) {
    Vector next = 2.0 * curr - prev + dt2 * rhs(ops, curr);
    prev = std::move(curr);
    curr = std::move(next);
  }
}

Trajectory integrate_second_order(const RomOperators& ops, const Vector& shat0,
                                  const Vector& vhat0, double dt, double t_final, Index stride) {
  check_ops(ops, 2, shat0);
  if (vhat0.size() != shat0.size()) throw SizeError("initial reduced velocity length mismatch");
  if (stride < 1) throw ConfigError("record_stride must be at least 1");
  const Index steps = step_count(dt, t_final);

  Recorder rec(shat0, dt, steps, stride);
  Vector prev = shat0;
  Vector curr = shat0 + dt * vhat0 + (0.5 * dt * dt) * rhs(ops, shat0);
  if (!rec.observe(1, curr)) return rec.finish();
  for (Index n = 2; n <= steps; ++n) {
    advance_central_difference(ops, prev, curr, dt, 1);
    if (!rec.observe(n, curr)) break;
  }
  return rec.finish();
}

Trajectory integrate_second_order(const RomOperators& ops, const RomSimConfig& cfg,
                                  const QuadraticManifold& m) {
  cfg.validate();
  Vector vhat0 = Vector::Zero(m.r());
  if (cfg.initial_velocity.size() > 0) {
    if (cfg.initial_velocity.size() != m.n()) throw SizeError("initial velocity length mismatch");
    vhat0 = m.pod.V.transpose() * cfg.initial_velocity;
  }
  return integrate_second_order(ops, encode(m.pod, cfg.initial_full_state), vhat0, cfg.dt,
                                cfg.t_final, cfg.record_stride);
}

Trajectory simulate(const RomOperators& ops, const RomSimConfig& cfg, const QuadraticManifold& m) {
  return ops.time_order == 2 ? integrate_second_order(ops, cfg, m)
                             : integrate_first_order(ops, cfg, m);
}

Matrix reconstruct(const QuadraticManifold& m, const Trajectory& traj) {
  return decode(m, traj.reduced_states);
}

}  // namespace qmrom
