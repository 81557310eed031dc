#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fricest/control.hpp"
#include "fricest/dynamics.hpp"
#include "fricest/friction.hpp"
#include "fricest/trace.hpp"
#include "fricest/trajectory.hpp"

namespace fricest::sim {

/// Measurement noise standard deviations fed to the controller. The plant
/// always integrates the true state; noise is measurement-side only.
struct NoiseSpec {
  double q_std = 0.0;   ///< rad
  double qd_std = 0.0;  ///< rad/s
  bool any() const { return q_std > 0.0 || qd_std > 0.0; }
};

/// External disturbance torque d(t) = constant + sin_amplitude*sin(2*pi*f*t),
/// applied continuously at the plant input. Empty vectors mean zero.
struct DisturbanceSpec {
  Eigen::VectorXd constant;       ///< N*m per joint
  Eigen::VectorXd sin_amplitude;  ///< N*m per joint
  double sin_freq_hz = 0.0;

  Eigen::VectorXd at(double t, int n_joints) const;
  bool any() const {
    return constant.size() > 0 || sin_amplitude.size() > 0;
  }
};

/// Relative perturbations applied when building the controller from a
/// configuration: pi_hat = inject_mismatch(pi, pi_scale, seed) and
/// v_brk_hat = inject_mismatch(v_brk, v_brk_scale, seed + 1). Consumed by the
/// configuration layer, not by run_closed_loop itself (which receives the
/// already-perturbed controller).
struct MismatchSpec {
  double pi_scale = 0.0;
  double v_brk_scale = 0.0;
  std::uint64_t seed = 0;
};

struct SimConfig {
  double plant_dt = 0.00025;  ///< s, RK4 step
  double control_dt = 0.001;  ///< s, zero-order-hold control period
  double duration = 10.0;     ///< s
  NoiseSpec noise;
  DisturbanceSpec disturbance;
  MismatchSpec mismatch;
  std::uint64_t seed = 0;
  /// When true and the controller supports pure-time evaluation (eval_at),
  /// the integrator samples the control torque at every RK4 stage time
  /// instead of holding it constant over the control period. Used to
  /// validate the integrator itself without the hold discretization.
  bool continuous_feedforward = false;

  int steps_per_tick() const;
  /// Throws std::domain_error unless durations are positive and the control
  /// period is an integer multiple of the plant step.
  void validate() const;
};

/// Integrates the closed loop and records one trace row per control tick,
/// including t = 0 and t = duration. Row k stores the true plant state at
/// t_k, the reference, the saturated torque applied over [t_k, t_{k+1}), the
/// disturbance d(t_k), and the controller telemetry for that torque (the
/// final row's torque is computed but never applied). The initial state is
/// the reference at t = 0. Measurement noise (config.noise) corrupts only
/// what the controller sees; draws come from mt19937_64(config.seed) via
/// Box-Muller, per tick in the order q then qd, a joint-vector each.
///
/// Faults do not throw: a controller FaultError or a non-finite state/torque
/// stops the run, sets meta.fault and meta.fault_time, and returns the trace
/// truncated at the last healthy tick.
///
/// The caller fills meta.trajectory_id, meta.config_hash and
/// meta.pairing_hash afterwards; everything else in the metadata is set here.
SimTrace run_closed_loop(const dynamics::ManipulatorModel& model,
                         const std::vector<friction::FrictionParams>& friction_truth,
                         control::Controller& controller,
                         const trajectory::Trajectory& traj,
                         const SimConfig& config);

/// pi_hat = pi .* (1 + relative_scale*u), u uniform in [-1, 1] per entry,
/// deterministic per seed. relative_scale must be >= 0.
Eigen::VectorXd inject_mismatch(const Eigen::VectorXd& pi,
                                double relative_scale, std::uint64_t seed);

/// Per-control-step energy balance of a recorded run. With the zero-order
/// hold, the work of the applied torque over one period is exactly
/// tau_k'(q_{k+1} - q_k); the friction and sinusoidal-disturbance work terms
/// are trapezoidal in the tick samples. residual[k] covers [t_k, t_{k+1}].
struct EnergyAudit {
  Eigen::VectorXd energy;    ///< J, kinetic + potential at each tick
  Eigen::VectorXd residual;  ///< J, ticks-1 entries
  double max_abs_residual = 0.0;
};

EnergyAudit energy_audit(const SimTrace& trace,
                         const dynamics::ManipulatorModel& model,
                         const std::vector<friction::FrictionParams>& friction_truth);

}  // namespace fricest::sim
