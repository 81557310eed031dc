#include "fricest/simloop.hpp"

#include <cmath>
#include <stdexcept>

#include "fricest/rng.hpp"

namespace fricest::sim {

namespace {

Eigen::VectorXd friction_torque(
    const std::vector<friction::FrictionParams>& fp,
    const Eigen::VectorXd& qd) {
  Eigen::VectorXd tau(qd.size());
  for (Eigen::Index j = 0; j < qd.size(); ++j) {
    tau[j] = friction::stribeck_torque(fp[static_cast<std::size_t>(j)], qd[j]);
  }
  return tau;
}

}  // namespace

Eigen::VectorXd DisturbanceSpec::at(double t, int n_joints) const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_joints);
  if (constant.size() > 0) {
    if (constant.size() != n_joints) {
      throw std::domain_error("constant disturbance has wrong joint count");
    }
    d += constant;
  }
  if (sin_amplitude.size() > 0) {
    if (sin_amplitude.size() != n_joints) {
      throw std::domain_error("sinusoid disturbance has wrong joint count");
    }
    d += sin_amplitude * std::sin(2.0 * M_PI * sin_freq_hz * t);
  }
  return d;
}

int SimConfig::steps_per_tick() const {
  return static_cast<int>(std::llround(control_dt / plant_dt));
}

void SimConfig::validate() const {
  if (!(plant_dt > 0.0) || !(control_dt > 0.0) || !(duration > 0.0)) {
    throw std::domain_error("plant step, control period and duration must be positive");
  }
  const double ratio = control_dt / plant_dt;
  const double rounded = std::llround(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
    throw std::domain_error(
        "control period must be an integer multiple of the plant step");
  }
  if (!(noise.q_std >= 0.0) || !(noise.qd_std >= 0.0)) {
    throw std::domain_error("noise standard deviations must be nonnegative");
  }
  if (mismatch.pi_scale < 0.0 || mismatch.v_brk_scale < 0.0) {
    throw std::domain_error("mismatch scales must be nonnegative");
  }
}

SimTrace run_closed_loop(
    const dynamics::ManipulatorModel& model,
    const std::vector<friction::FrictionParams>& friction_truth,
    control::Controller& controller, const trajectory::Trajectory& traj,
    const SimConfig& config) {
  model.validate();
  config.validate();
  const int n = model.n_joints();
  if (static_cast<int>(friction_truth.size()) != n) {
    throw std::domain_error("friction truth has wrong joint count");
  }
  for (const auto& fp : friction_truth) fp.validate();
  if (controller.n_joints() != n || traj.n_joints() != n) {
    throw std::domain_error("controller/trajectory joint count mismatch");
  }

  const double dt = config.control_dt;
  const double h = config.plant_dt;
  const int spt = config.steps_per_tick();
  const auto K =
      static_cast<Eigen::Index>(std::floor(config.duration / dt + 1e-9));
  if (K < 1) throw std::domain_error("duration shorter than one control period");
  const Eigen::Index rows = K + 1;

  const bool continuous =
      config.continuous_feedforward && controller.eval_at(0.0).has_value();

  SimTrace trace;
  trace.meta.controller_id = controller.id();
  trace.meta.seed = config.seed;
  trace.meta.n_joints = n;
  trace.meta.friction_param_count = controller.friction_param_count();
  trace.meta.control_dt = dt;

  rng::NormalSampler noise_rng(config.seed);

  // Plant state starts on the reference.
  const trajectory::TrajectorySample start = traj.eval(0.0);
  Eigen::VectorXd q = start.q;
  Eigen::VectorXd qd = start.qd;

  // Acceleration under applied torque + disturbance, minus Stribeck friction.
  auto accel = [&](const Eigen::VectorXd& qs, const Eigen::VectorXd& qds,
                   const Eigen::VectorXd& tau_cmd, double t) {
    return dynamics::forward_dynamics_raw(
        model, qs, qds, tau_cmd + config.disturbance.at(t, n),
        friction_torque(friction_truth, qds));
  };

  auto saturate = [&](Eigen::VectorXd tau, bool* clipped) {
    for (int j = 0; j < n; ++j) {
      const double lim = model.tau_max[j];
      if (tau[j] > lim) {
        tau[j] = lim;
        if (clipped != nullptr) *clipped = true;
      } else if (tau[j] < -lim) {
        tau[j] = -lim;
        if (clipped != nullptr) *clipped = true;
      }
    }
    return tau;
  };

  bool allocated = false;
  Eigen::Index recorded = 0;
  auto allocate = [&](const control::ControllerTelemetry& tele) {
    trace.t.resize(rows);
    trace.q.resize(rows, n);
    trace.qd.resize(rows, n);
    trace.q_des.resize(rows, n);
    trace.qd_des.resize(rows, n);
    trace.qdd_des.resize(rows, n);
    trace.tau.resize(rows, n);
    trace.disturbance.resize(rows, n);
    trace.meta.has_s = tele.s.has_value();
    trace.meta.has_adaptive = tele.pi_f_hat.has_value();
    trace.meta.has_eso = tele.eso.has_value();
    if (trace.meta.has_s) trace.s.resize(rows, n);
    if (trace.meta.has_adaptive) {
      trace.pi_f_hat.resize(rows, trace.meta.friction_param_count * n);
      trace.eps.resize(rows, n);
    }
    if (trace.meta.has_eso) trace.eso.resize(rows, 3 * n);
    allocated = true;
  };

  auto truncate = [&](double fault_time) {
    trace.meta.fault = true;
    trace.meta.fault_time = fault_time;
    if (!allocated) allocate(control::ControllerTelemetry{});
    trace.t.conservativeResize(recorded);
    for (Eigen::MatrixXd* m :
         {&trace.q, &trace.qd, &trace.q_des, &trace.qd_des, &trace.qdd_des,
          &trace.tau, &trace.disturbance, &trace.s, &trace.pi_f_hat,
          &trace.eps, &trace.eso}) {
      if (m->rows() > 0) m->conservativeResize(recorded, Eigen::NoChange);
    }
  };

  for (Eigen::Index k = 0; k <= K; ++k) {
    const double t_k = static_cast<double>(k) * dt;
    const trajectory::TrajectorySample ref = traj.eval(t_k);

    Eigen::VectorXd q_meas = q;
    Eigen::VectorXd qd_meas = qd;
    if (config.noise.any()) {
      for (int j = 0; j < n; ++j) q_meas[j] += config.noise.q_std * noise_rng.next();
      for (int j = 0; j < n; ++j) qd_meas[j] += config.noise.qd_std * noise_rng.next();
    }

    Eigen::VectorXd tau_cmd;
    try {
      tau_cmd = controller.step(t_k, q_meas, qd_meas, ref, dt);
    } catch (const control::FaultError&) {
      truncate(t_k);
      return trace;
    }
    if (!tau_cmd.allFinite()) {
      truncate(t_k);
      return trace;
    }
    bool clipped = false;
    const Eigen::VectorXd tau_app = saturate(tau_cmd, &clipped);
    if (clipped) ++trace.meta.saturation_events;

    const control::ControllerTelemetry tele = controller.telemetry();
    if (!allocated) allocate(tele);

    trace.t[k] = t_k;
    trace.q.row(k) = q.transpose();
    trace.qd.row(k) = qd.transpose();
    trace.q_des.row(k) = ref.q.transpose();
    trace.qd_des.row(k) = ref.qd.transpose();
    trace.qdd_des.row(k) = ref.qdd.transpose();
    trace.tau.row(k) = tau_app.transpose();
    trace.disturbance.row(k) = config.disturbance.at(t_k, n).transpose();
    if (trace.meta.has_s) {
      trace.s.row(k) = tele.s.value_or(Eigen::VectorXd::Zero(n)).transpose();
    }
    if (trace.meta.has_adaptive) {
      trace.pi_f_hat.row(k) =
          tele.pi_f_hat
              .value_or(Eigen::VectorXd::Zero(trace.pi_f_hat.cols()))
              .transpose();
      trace.eps.row(k) =
          tele.eps.value_or(Eigen::VectorXd::Zero(n)).transpose();
    }
    if (trace.meta.has_eso) {
      trace.eso.row(k) =
          tele.eso.value_or(Eigen::VectorXd::Zero(3 * n)).transpose();
    }
    recorded = k + 1;
    if (k == K) break;

    // Integrate one control period with RK4. The commanded torque is held
    // constant unless continuous feedforward is active, in which case the
    // controller is re-evaluated (and saturated) at every stage time.
    auto stage_tau = [&](double t) {
      if (!continuous) return tau_app;
      return saturate(*controller.eval_at(t), nullptr);
    };
    for (int m = 0; m < spt; ++m) {
      const double t0 = t_k + static_cast<double>(m) * h;
      const Eigen::VectorXd ta = stage_tau(t0);
      const Eigen::VectorXd tb = stage_tau(t0 + 0.5 * h);
      const Eigen::VectorXd tc = stage_tau(t0 + h);

      const Eigen::VectorXd k1q = qd;
      const Eigen::VectorXd k1v = accel(q, qd, ta, t0);
      const Eigen::VectorXd k2q = qd + 0.5 * h * k1v;
      const Eigen::VectorXd k2v =
          accel(q + 0.5 * h * k1q, qd + 0.5 * h * k1v, tb, t0 + 0.5 * h);
      const Eigen::VectorXd k3q = qd + 0.5 * h * k2v;
      const Eigen::VectorXd k3v =
          accel(q + 0.5 * h * k2q, qd + 0.5 * h * k2v, tb, t0 + 0.5 * h);
      const Eigen::VectorXd k4q = qd + h * k3v;
      const Eigen::VectorXd k4v =
          accel(q + h * k3q, qd + h * k3v, tc, t0 + h);

      q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      qd += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    if (!q.allFinite() || !qd.allFinite()) {
      truncate(t_k + dt);
      return trace;
    }
  }
  return trace;
}

Eigen::VectorXd inject_mismatch(const Eigen::VectorXd& pi,
                                double relative_scale, std::uint64_t seed) {
  if (relative_scale < 0.0) {
    throw std::domain_error("mismatch scale must be nonnegative");
  }
  std::mt19937_64 engine(seed);
  Eigen::VectorXd out(pi.size());
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    out[i] = pi[i] * (1.0 + relative_scale * rng::uniform_pm1(engine));
  }
  return out;
}

EnergyAudit energy_audit(
    const SimTrace& trace, const dynamics::ManipulatorModel& model,
    const std::vector<friction::FrictionParams>& friction_truth) {
  const int n = trace.meta.n_joints;
  if (static_cast<int>(friction_truth.size()) != n) {
    throw std::domain_error("friction truth has wrong joint count");
  }
  const Eigen::Index T = trace.ticks();
  EnergyAudit audit;
  audit.energy.resize(T);
  audit.residual.resize(T > 0 ? T - 1 : 0);

  for (Eigen::Index k = 0; k < T; ++k) {
    const Eigen::VectorXd qk = trace.q.row(k).transpose();
    const Eigen::VectorXd qdk = trace.qd.row(k).transpose();
    audit.energy[k] = dynamics::kinetic_energy(model, qk, qdk) +
                      dynamics::potential_energy(model, qk);
  }
  const double dt = trace.meta.control_dt;
  for (Eigen::Index k = 0; k + 1 < T; ++k) {
    const Eigen::VectorXd dq =
        (trace.q.row(k + 1) - trace.q.row(k)).transpose();
    // Exact under the zero-order hold: the applied torque is constant.
    const double work_tau = trace.tau.row(k).transpose().dot(dq);
    // Exact for constant disturbance, trapezoidal otherwise.
    const double work_dist =
        0.5 * (trace.disturbance.row(k) + trace.disturbance.row(k + 1))
                  .transpose()
                  .dot(dq);
    // Trapezoidal friction dissipation (positive).
    auto fric_power = [&](Eigen::Index row) {
      const Eigen::VectorXd v = trace.qd.row(row).transpose();
      return friction_torque(friction_truth, v).dot(v);
    };
    const double dissipated = 0.5 * dt * (fric_power(k) + fric_power(k + 1));
    audit.residual[k] =
        audit.energy[k + 1] - audit.energy[k] - work_tau - work_dist + dissipated;
  }
  audit.max_abs_residual =
      audit.residual.size() > 0 ? audit.residual.cwiseAbs().maxCoeff() : 0.0;
  return audit;
}

}  // namespace fricest::sim
