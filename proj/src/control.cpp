#include "fricest/control.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace fricest::control {

namespace {

constexpr double kDivergenceBound = 1e9;

void check_finite(const Eigen::VectorXd& v, const char* name) {
  if (!v.allFinite()) {
    throw FaultError(std::string("non-finite ") + name +
                     " in controller step");
  }
}

void check_positive(const Eigen::VectorXd& v, const char* name) {
  if ((v.array() <= 0.0).any()) {
    throw std::domain_error(std::string(name) +
                            " diagonal must be strictly positive");
  }
}

}  // namespace

void Gains::validate(int n_joints, int friction_params_per_joint) const {
  if (Kd.size() != n_joints || Sigma.size() != n_joints ||
      Gamma_e.size() != n_joints || Ki.size() != n_joints ||
      Gamma_f.size() !=
          static_cast<Eigen::Index>(friction_params_per_joint) * n_joints) {
    throw std::domain_error("gain dimensions disagree with the joint count");
  }
  check_positive(Kd, "K_D");
  check_positive(Sigma, "Sigma");
  check_positive(Gamma_f, "Gamma_f");
  check_positive(Gamma_e, "Gamma_e");
  if ((Ki.array() < 0.0).any()) {
    throw std::domain_error("Ki must be nonnegative");
  }
  if (!(omega_o > 0.0) || !(adrc_bandwidth > 0.0)) {
    throw std::domain_error("observer and ADRC bandwidths must be positive");
  }
}

Gains Gains::critically_damped(const Eigen::VectorXd& inertia_estimate,
                               double bandwidth) {
  if (!(bandwidth > 0.0)) {
    throw std::domain_error("bandwidth must be positive");
  }
  const int n = static_cast<int>(inertia_estimate.size());
  Gains g;
  g.Kd = 2.0 * bandwidth * inertia_estimate;
  g.Sigma = Eigen::VectorXd::Constant(n, bandwidth / 2.0);
  g.Gamma_f.resize(3 * n);
  for (int j = 0; j < n; ++j) {
    g.Gamma_f.segment(3 * j, 3) << 1.0, 1.0, 0.1;
  }
  g.Gamma_e = Eigen::VectorXd::Constant(n, 10.0);
  // Third closed-loop pole near bandwidth/7 when integral action is enabled.
  g.Ki = 0.1 * std::pow(bandwidth, 3) * inertia_estimate;
  return g;
}

Eigen::VectorXd sliding_error(const Eigen::VectorXd& q,
                              const Eigen::VectorXd& qd,
                              const Eigen::VectorXd& q_des,
                              const Eigen::VectorXd& qd_des,
                              const Eigen::VectorXd& Sigma) {
  return (qd - qd_des) + Sigma.cwiseProduct(q - q_des);
}

int friction_param_count(FrictionModelKind kind) {
  return kind == FrictionModelKind::Proposed ? 3 : 2;
}

AdaptiveState AdaptiveState::zero(int n_joints, FrictionModelKind kind,
                                  bool backstepping) {
  AdaptiveState st;
  st.pi_f_hat =
      Eigen::VectorXd::Zero(friction_param_count(kind) * n_joints);
  st.eps = Eigen::VectorXd::Zero(n_joints);
  st.backstepping = backstepping;
  return st;
}

Eigen::MatrixXd friction_regressor_matrix(
    const Eigen::VectorXd& v, const friction::RegressorScales& scales,
    FrictionModelKind kind) {
  const int n = static_cast<int>(v.size());
  const int k = friction_param_count(kind);
  Eigen::MatrixXd Yf = Eigen::MatrixXd::Zero(n, k * n);
  for (int j = 0; j < n; ++j) {
    if (kind == FrictionModelKind::Proposed) {
      Yf.block(j, k * j, 1, 3) =
          friction::friction_regressor(v[j], scales.v_st[j], scales.v_coul[j]);
    } else {
      Yf.block(j, k * j, 1, 2) =
          friction::simplified_regressor(v[j], scales.v_coul[j]);
    }
  }
  return Yf;
}

AdaptiveStepResult adaptive_step(
    const AdaptiveState& state, const Gains& gains,
    const dynamics::ManipulatorModel& model, const Eigen::VectorXd& pi_hat,
    const friction::RegressorScales& scales, FrictionModelKind kind,
    const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
    const Eigen::VectorXd& q_des, const Eigen::VectorXd& qd_des,
    const Eigen::VectorXd& qdd_des, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("dt must be positive");
  check_finite(q, "q");
  check_finite(qd, "qd");
  check_finite(q_des, "q_des");
  check_finite(qd_des, "qd_des");
  check_finite(qdd_des, "qdd_des");
  check_finite(state.pi_f_hat, "pi_f_hat");
  check_finite(state.eps, "eps");

  const Eigen::VectorXd q_err = q - q_des;
  const Eigen::VectorXd qd_err = qd - qd_des;
  const Eigen::VectorXd s = qd_err + gains.Sigma.cwiseProduct(q_err);
  const Eigen::VectorXd qd_r = qd_des - gains.Sigma.cwiseProduct(q_err);
  const Eigen::VectorXd qdd_r = qdd_des - gains.Sigma.cwiseProduct(qd_err);

  const Eigen::MatrixXd Y =
      dynamics::slotine_li_regressor(model, q, qd, qd_r, qdd_r);
  const Eigen::MatrixXd Yf = friction_regressor_matrix(qd, scales, kind);

  AdaptiveStepResult out;
  out.s = s;
  out.tau = Y * pi_hat + Yf * state.pi_f_hat - gains.Kd.cwiseProduct(s);
  if (state.backstepping) out.tau += state.eps;

  out.state = state;
  out.state.pi_f_hat = friction::clip_passivity(
      state.pi_f_hat -
      dt * gains.Gamma_f.cwiseProduct(Yf.transpose() * s));
  if (state.backstepping) {
    out.state.eps = state.eps - dt * gains.Gamma_e.cwiseProduct(s);
  }
  return out;
}

Eigen::VectorXd pd_step(const Eigen::VectorXd& q,
                        const Eigen::VectorXd& qd_est,
                        const Eigen::VectorXd& q_des,
                        const Eigen::VectorXd& qd_des, const Gains& gains) {
  const Eigen::VectorXd Kp = gains.Kd.cwiseProduct(gains.Sigma);
  return -Kp.cwiseProduct(q - q_des) - gains.Kd.cwiseProduct(qd_est - qd_des);
}

PidStepResult pid_step(const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qd_est,
                       const Eigen::VectorXd& q_des,
                       const Eigen::VectorXd& qd_des,
                       const Eigen::VectorXd& integral, const Gains& gains,
                       const Eigen::VectorXd& tau_limit, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("dt must be positive");
  PidStepResult out;
  out.integral = integral + dt * (q - q_des);
  // Anti-windup: keep the integral contribution within the torque limit.
  for (Eigen::Index j = 0; j < out.integral.size(); ++j) {
    if (gains.Ki[j] > 0.0) {
      const double cap = tau_limit[j] / gains.Ki[j];
      out.integral[j] = std::clamp(out.integral[j], -cap, cap);
    }
  }
  out.tau = pd_step(q, qd_est, q_des, qd_des, gains) -
            gains.Ki.cwiseProduct(out.integral);
  return out;
}

EsoState EsoState::from_position(const Eigen::VectorXd& q0) {
  EsoState st;
  st.z1 = q0;
  st.z2 = Eigen::VectorXd::Zero(q0.size());
  st.z3 = Eigen::VectorXd::Zero(q0.size());
  return st;
}

EsoState eso_step(const EsoState& state, const Eigen::VectorXd& q_measured,
                  const Eigen::VectorXd& tau_applied,
                  const Eigen::VectorXd& inertia_estimate, double omega_o,
                  double dt) {
  if (!(omega_o > 0.0) || !(dt > 0.0)) {
    throw std::domain_error("omega_o and dt must be positive");
  }
  const double l1 = 3.0 * omega_o;
  const double l2 = 3.0 * omega_o * omega_o;
  const double l3 = omega_o * omega_o * omega_o;
  EsoState out = state;
  const Eigen::VectorXd e = q_measured - state.z1;
  out.z1 = state.z1 + dt * (state.z2 + l1 * e);
  out.z2 = state.z2 + dt * (state.z3 + l2 * e +
                            tau_applied.cwiseQuotient(inertia_estimate));
  out.z3 = state.z3 + dt * (l3 * e);
  if (out.z1.cwiseAbs().maxCoeff() > kDivergenceBound ||
      out.z2.cwiseAbs().maxCoeff() > kDivergenceBound ||
      out.z3.cwiseAbs().maxCoeff() > kDivergenceBound) {
    out.fault = true;
  }
  return out;
}

Eigen::VectorXd adrc_step(const EsoState& eso, const Eigen::VectorXd& q_des,
                          const Eigen::VectorXd& qd_des,
                          const Eigen::VectorXd& qdd_des, const Gains& gains,
                          const Eigen::VectorXd& inertia_estimate) {
  const double wc = gains.adrc_bandwidth;
  const double k1 = wc * wc;
  const double k2 = 2.0 * wc;
  return inertia_estimate.cwiseProduct(
      qdd_des - k1 * (eso.z1 - q_des) - k2 * (eso.z2 - qd_des) - eso.z3);
}

// --------------------------------------------------------------------------
// Controller wrappers
// --------------------------------------------------------------------------

PdController::PdController(Options opt) : opt_(std::move(opt)) {
  const int n = static_cast<int>(opt_.inertia_estimate.size());
  opt_.gains.validate(n, static_cast<int>(opt_.gains.Gamma_f.size()) / n);
  integral_state_ = Eigen::VectorXd::Zero(n);
}

Eigen::VectorXd PdController::step(double /*t*/, const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& qd,
                                   const trajectory::TrajectorySample& ref,
                                   double dt) {
  Eigen::VectorXd qd_fb = qd;
  if (opt_.velocity == VelocitySource::Observer) {
    if (!eso_init_) {
      eso_ = EsoState::from_position(q);
      last_tau_ = Eigen::VectorXd::Zero(n_joints());
      eso_init_ = true;
    } else {
      eso_ = eso_step(eso_, q, last_tau_, opt_.inertia_estimate,
                      opt_.gains.omega_o, dt);
    }
    qd_fb = eso_.z2;
  }

  Eigen::VectorXd tau;
  if (opt_.integral) {
    PidStepResult r = pid_step(q, qd_fb, ref.q, ref.qd, integral_state_,
                               opt_.gains, opt_.tau_limit, dt);
    tau = r.tau;
    integral_state_ = r.integral;
  } else {
    tau = pd_step(q, qd_fb, ref.q, ref.qd, opt_.gains);
  }
  if (opt_.friction_feedforward.has_value()) {
    tau += friction_regressor_matrix(qd_fb, opt_.scales, opt_.friction_kind) *
           (*opt_.friction_feedforward);
  }

  last_ = ControllerTelemetry{};
  if (opt_.velocity == VelocitySource::Observer) {
    const int n = n_joints();
    Eigen::VectorXd z(3 * n);
    for (int j = 0; j < n; ++j) {
      z.segment(3 * j, 3) << eso_.z1[j], eso_.z2[j], eso_.z3[j];
    }
    last_.eso = z;
    last_tau_ = tau;
  }
  return tau;
}

ControllerTelemetry PdController::telemetry() const { return last_; }

AdaptiveController::AdaptiveController(Options opt) : opt_(std::move(opt)) {
  opt_.gains.validate(opt_.model.n_joints(),
                      control::friction_param_count(opt_.kind));
  state_ = AdaptiveState::zero(opt_.model.n_joints(), opt_.kind,
                               opt_.backstepping);
  if (opt_.pi_f_init.has_value()) {
    if (opt_.pi_f_init->size() != state_.pi_f_hat.size()) {
      throw std::domain_error(
          "initial friction estimate disagrees with the model size");
    }
    if ((opt_.pi_f_init->array() < 0.0).any()) {
      throw std::domain_error("initial friction estimate must be nonnegative");
    }
    state_.pi_f_hat = *opt_.pi_f_init;
  }
}

Eigen::VectorXd AdaptiveController::step(double /*t*/,
                                         const Eigen::VectorXd& q,
                                         const Eigen::VectorXd& qd,
                                         const trajectory::TrajectorySample& ref,
                                         double dt) {
  last_ = ControllerTelemetry{};
  last_.pi_f_hat = state_.pi_f_hat;
  last_.eps = state_.eps;
  AdaptiveStepResult r =
      adaptive_step(state_, opt_.gains, opt_.model, opt_.pi_hat, opt_.scales,
                    opt_.kind, q, qd, ref.q, ref.qd, ref.qdd, dt);
  last_.s = r.s;
  state_ = r.state;
  return r.tau;
}

ControllerTelemetry AdaptiveController::telemetry() const { return last_; }

AdrcController::AdrcController(Options opt) : opt_(std::move(opt)) {
  const int n = static_cast<int>(opt_.inertia_estimate.size());
  if (opt_.model.n_joints() != n) {
    throw std::domain_error("inertia estimate disagrees with the model");
  }
  opt_.gains.validate(n, static_cast<int>(opt_.gains.Gamma_f.size()) / n);
}

Eigen::VectorXd AdrcController::step(double /*t*/, const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& qd,
                                     const trajectory::TrajectorySample& ref,
                                     double dt) {
  if (!eso_init_) {
    eso_ = EsoState::from_position(q);
    last_nominal_ = Eigen::VectorXd::Zero(n_joints());
    eso_init_ = true;
  } else {
    eso_ = eso_step(eso_, q, last_nominal_, opt_.inertia_estimate,
                    opt_.gains.omega_o, dt);
  }
  (void)qd;  // ADRC feeds back observer estimates only
  const Eigen::VectorXd tau_nominal = adrc_step(
      eso_, ref.q, ref.qd, ref.qdd, opt_.gains, opt_.inertia_estimate);
  // Known dynamics ride on top of the nominal law and stay hidden from the
  // observer, so z3 keeps estimating only what the compensation missed.
  Eigen::VectorXd tau =
      tau_nominal + dynamics::bias_forces_raw(opt_.model, q, eso_.z2);
  if (opt_.friction_feedforward.has_value()) {
    tau += friction_regressor_matrix(eso_.z2, opt_.scales,
                                     opt_.friction_kind) *
           (*opt_.friction_feedforward);
  }

  const int n = n_joints();
  Eigen::VectorXd z(3 * n);
  for (int j = 0; j < n; ++j) {
    z.segment(3 * j, 3) << eso_.z1[j], eso_.z2[j], eso_.z3[j];
  }
  last_ = ControllerTelemetry{};
  last_.eso = z;
  last_nominal_ = tau_nominal;
  return tau;
}

ControllerTelemetry AdrcController::telemetry() const { return last_; }

FeedforwardController::FeedforwardController(
    dynamics::ManipulatorModel model,
    std::vector<friction::FrictionParams> friction_truth,
    std::shared_ptr<const trajectory::Trajectory> traj)
    : model_(std::move(model)),
      friction_(std::move(friction_truth)),
      traj_(std::move(traj)) {}

Eigen::VectorXd FeedforwardController::step(
    double t, const Eigen::VectorXd& /*q*/, const Eigen::VectorXd& /*qd*/,
    const trajectory::TrajectorySample& /*ref*/, double /*dt*/) {
  return *eval_at(t);
}

std::optional<Eigen::VectorXd> FeedforwardController::eval_at(double t) const {
  const trajectory::TrajectorySample ref = traj_->eval(t);
  Eigen::VectorXd tau = dynamics::mass_matrix_raw(model_, ref.q) * ref.qdd +
                        dynamics::bias_forces_raw(model_, ref.q, ref.qd);
  for (int j = 0; j < model_.n_joints(); ++j) {
    tau[j] += friction::stribeck_torque(friction_[static_cast<std::size_t>(j)],
                                        ref.qd[j]);
  }
  return tau;
}

TorqueRampController::TorqueRampController(int n_joints, int joint,
                                           double rate)
    : n_(n_joints), joint_(joint), rate_(rate) {
  if (joint < 0 || joint >= n_joints) {
    throw std::domain_error("ramp joint index out of range");
  }
}

Eigen::VectorXd TorqueRampController::step(
    double t, const Eigen::VectorXd& /*q*/, const Eigen::VectorXd& /*qd*/,
    const trajectory::TrajectorySample& /*ref*/, double /*dt*/) {
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n_);
  tau[joint_] = rate_ * t;
  return tau;
}

}  // namespace fricest::control
