#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "fricest/dynamics.hpp"
#include "fricest/friction.hpp"
#include "fricest/trajectory.hpp"

namespace fricest::control {

/// Raised when a controller receives or produces a non-finite signal.
class FaultError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Diagonal gain set shared by all controllers. K_P is always derived as
/// K_D * Sigma (bandwidth parameterization), never stored separately.
struct Gains {
  Eigen::VectorXd Kd;       ///< N*m*s/rad, sliding-error gain diagonal
  Eigen::VectorXd Sigma;    ///< 1/s, sliding-surface slope diagonal
  Eigen::VectorXd Gamma_f;  ///< friction update gains, one per estimated entry
  Eigen::VectorXd Gamma_e;  ///< backstepping gain diagonal, per joint
  Eigen::VectorXd Ki;       ///< PID integral gain diagonal, per joint
  double omega_o = 100.0;   ///< rad/s, observer bandwidth
  double adrc_bandwidth = 10.0;  ///< rad/s, ADRC feedback bandwidth

  /// Throws std::domain_error unless every diagonal entry is > 0.
  void validate(int n_joints, int friction_params_per_joint) const;

  /// Gains of a critically damped loop with the given bandwidth:
  /// K_D = 2*bandwidth*J_est, Sigma = bandwidth/2, so K_P = K_D*Sigma =
  /// bandwidth^2*J_est. Friction update gains default to (1, 1, 0.1) per
  /// joint; Gamma_e to 10.
  static Gains critically_damped(const Eigen::VectorXd& inertia_estimate,
                                 double bandwidth);
};

/// Sliding error s = (qd - qd_des) + Sigma*(q - q_des).
Eigen::VectorXd sliding_error(const Eigen::VectorXd& q,
                              const Eigen::VectorXd& qd,
                              const Eigen::VectorXd& q_des,
                              const Eigen::VectorXd& qd_des,
                              const Eigen::VectorXd& Sigma);

/// Which friction regressor an adaptive estimator runs with.
enum class FrictionModelKind { Proposed, Simplified };
int friction_param_count(FrictionModelKind kind);

/// Estimator state of the certainty-equivalence adaptive controller.
struct AdaptiveState {
  Eigen::VectorXd pi_f_hat;  ///< k*n stacked per joint, >= 0 elementwise
  Eigen::VectorXd eps;       ///< N*m per joint, backstepping integrator
  bool backstepping = false;

  static AdaptiveState zero(int n_joints, FrictionModelKind kind,
                            bool backstepping);
};

struct AdaptiveStepResult {
  Eigen::VectorXd tau;
  Eigen::VectorXd s;  ///< sliding error the torque was computed from
  AdaptiveState state;
};

/// One control tick of the adaptive law:
///   tau = Y(q, qd, qd_r, qdd_r)*pi_hat + Y_f(qd)*pi_f_hat - K_D*s [+ eps]
/// computed with the pre-update state, followed by the Euler updates
///   pi_f_hat <- clip(pi_f_hat - dt*Gamma_f*Y_f'*s, >= 0)
///   eps      <- eps - dt*Gamma_e*s            (backstepping only).
/// Y is evaluated at the reference-consistent arguments qd_r = qd_des -
/// Sigma*(q - q_des), qdd_r = qdd_des - Sigma*(qd - qd_des); Y_f at the
/// measured velocity. Throws FaultError on non-finite inputs.
AdaptiveStepResult adaptive_step(
    const AdaptiveState& state, const Gains& gains,
    const dynamics::ManipulatorModel& model, const Eigen::VectorXd& pi_hat,
    const friction::RegressorScales& scales, FrictionModelKind kind,
    const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
    const Eigen::VectorXd& q_des, const Eigen::VectorXd& qd_des,
    const Eigen::VectorXd& qdd_des, double dt);

/// Stacked per-joint friction regressor (n x k*n block rows) at velocities v.
Eigen::MatrixXd friction_regressor_matrix(
    const Eigen::VectorXd& v, const friction::RegressorScales& scales,
    FrictionModelKind kind);

/// PD torque -K_P*(q - q_des) - K_D*(qd_est - qd_des) with K_P = K_D*Sigma.
Eigen::VectorXd pd_step(const Eigen::VectorXd& q, const Eigen::VectorXd& qd_est,
                        const Eigen::VectorXd& q_des,
                        const Eigen::VectorXd& qd_des, const Gains& gains);

/// PD plus clamped integral action; the integral state saturates so that
/// Ki*integral never exceeds the torque limit (anti-windup).
struct PidStepResult {
  Eigen::VectorXd tau;
  Eigen::VectorXd integral;
};
PidStepResult pid_step(const Eigen::VectorXd& q, const Eigen::VectorXd& qd_est,
                       const Eigen::VectorXd& q_des,
                       const Eigen::VectorXd& qd_des,
                       const Eigen::VectorXd& integral, const Gains& gains,
                       const Eigen::VectorXd& tau_limit, double dt);

/// Third-order linear extended state observer, one per joint: states are
/// position estimate z1, velocity estimate z2, and total disturbance z3 in
/// rad/s^2. Bandwidth-parameterized gains [3w, 3w^2, w^3].
struct EsoState {
  Eigen::VectorXd z1, z2, z3;
  bool fault = false;  ///< set when any state exceeds the divergence bound

  static EsoState from_position(const Eigen::VectorXd& q0);
};

/// One Euler update with inputs q measured and the torque the nominal model
/// explains; the model feeds tau_explained/J_est into the acceleration
/// channel, so z3 converges to whatever acceleration that input fails to
/// account for. Throws nothing; divergence (|state| > 1e9) sets the fault
/// flag instead.
EsoState eso_step(const EsoState& state, const Eigen::VectorXd& q_measured,
                  const Eigen::VectorXd& tau_explained,
                  const Eigen::VectorXd& inertia_estimate, double omega_o,
                  double dt);

/// Nominal ADRC torque
///   tau = J_est*(qdd_des - k1*(z1 - q_des) - k2*(z2 - qd_des) - z3),
/// with k1 = wc^2, k2 = 2*wc (critically damped, wc = adrc_bandwidth).
/// Compensation of known dynamics (rigid bias, friction feedforward) is the
/// caller's job and must stay outside the observer input, so that z3 tracks
/// only the residual the known model fails to explain.
Eigen::VectorXd adrc_step(const EsoState& eso, const Eigen::VectorXd& q_des,
                          const Eigen::VectorXd& qd_des,
                          const Eigen::VectorXd& qdd_des, const Gains& gains,
                          const Eigen::VectorXd& inertia_estimate);

// ---------------------------------------------------------------------------
// Polymorphic controller wrappers driven by the simulation loop.
// ---------------------------------------------------------------------------

/// Velocity signal a controller feeds back.
enum class VelocitySource { Measured, Observer };

/// Optional per-tick internals the loop copies into the trace. Values are
/// the ones used to compute this tick's torque (pre-update).
struct ControllerTelemetry {
  std::optional<Eigen::VectorXd> s;
  std::optional<Eigen::VectorXd> pi_f_hat;
  std::optional<Eigen::VectorXd> eps;
  std::optional<Eigen::VectorXd> eso;  ///< [z1 z2 z3] per joint
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string id() const = 0;
  virtual int n_joints() const = 0;
  virtual int friction_param_count() const { return 0; }
  /// Torque for one control tick from the measured state and the reference.
  virtual Eigen::VectorXd step(double t, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd,
                               const trajectory::TrajectorySample& ref,
                               double dt) = 0;
  /// Internals used for the torque just computed.
  virtual ControllerTelemetry telemetry() const { return {}; }
  /// Pure-time torque evaluation for controllers that support it (exact
  /// feedforward); lets the integrator sample the input at stage times.
  virtual std::optional<Eigen::VectorXd> eval_at(double /*t*/) const {
    return std::nullopt;
  }
};

/// PD / PID / PD+friction-feedforward family. Friction compensation uses the
/// supplied parameter vector with the chosen regressor at the feedback
/// velocity.
class PdController final : public Controller {
 public:
  struct Options {
    Gains gains;
    Eigen::VectorXd inertia_estimate;  ///< for the observer channel
    Eigen::VectorXd tau_limit;
    bool integral = false;             ///< PID when true
    VelocitySource velocity = VelocitySource::Observer;
    std::optional<Eigen::VectorXd> friction_feedforward;  ///< stacked k*n
    FrictionModelKind friction_kind = FrictionModelKind::Proposed;
    friction::RegressorScales scales;
    std::string label = "pd";
  };
  explicit PdController(Options opt);
  std::string id() const override { return opt_.label; }
  int n_joints() const override {
    return static_cast<int>(opt_.inertia_estimate.size());
  }
  Eigen::VectorXd step(double t, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qd,
                       const trajectory::TrajectorySample& ref,
                       double dt) override;
  ControllerTelemetry telemetry() const override;

 private:
  Options opt_;
  Eigen::VectorXd integral_state_;
  EsoState eso_;
  bool eso_init_ = false;
  Eigen::VectorXd last_tau_;  ///< observer input on the next tick
  ControllerTelemetry last_;
};

/// Certainty-equivalence adaptive controller with optional backstepping.
class AdaptiveController final : public Controller {
 public:
  struct Options {
    Gains gains;
    dynamics::ManipulatorModel model;  ///< carries the nominal geometry
    Eigen::VectorXd pi_hat;            ///< rigid-body estimate used in Y
    friction::RegressorScales scales;
    FrictionModelKind kind = FrictionModelKind::Proposed;
    bool backstepping = false;
    /// Initial friction estimate, stacked k*n (zeros when absent); lets a
    /// run resume from a previously estimated parameter set.
    std::optional<Eigen::VectorXd> pi_f_init;
    std::string label = "adaptive";
  };
  explicit AdaptiveController(Options opt);
  std::string id() const override { return opt_.label; }
  int n_joints() const override { return opt_.model.n_joints(); }
  int friction_param_count() const override {
    return control::friction_param_count(opt_.kind);
  }
  Eigen::VectorXd step(double t, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qd,
                       const trajectory::TrajectorySample& ref,
                       double dt) override;
  ControllerTelemetry telemetry() const override;
  const AdaptiveState& state() const { return state_; }
  const Gains& gains() const { return opt_.gains; }

 private:
  Options opt_;
  AdaptiveState state_;
  ControllerTelemetry last_;
};

/// ADRC with the rigid-body bias compensated as known dynamics and an
/// optional friction feedforward from a fixed parameter vector. Only the
/// nominal double-integrator torque is reported to the observer, so the z3
/// stream reads as the residual torque (per unit inertia) the compensated
/// model leaves unexplained.
class AdrcController final : public Controller {
 public:
  struct Options {
    Gains gains;
    dynamics::ManipulatorModel model;  ///< nominal rigid dynamics
    Eigen::VectorXd inertia_estimate;
    std::optional<Eigen::VectorXd> friction_feedforward;  ///< stacked k*n
    FrictionModelKind friction_kind = FrictionModelKind::Proposed;
    friction::RegressorScales scales;
    std::string label = "adrc";
  };
  explicit AdrcController(Options opt);
  std::string id() const override { return opt_.label; }
  int n_joints() const override {
    return static_cast<int>(opt_.inertia_estimate.size());
  }
  Eigen::VectorXd step(double t, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qd,
                       const trajectory::TrajectorySample& ref,
                       double dt) override;
  ControllerTelemetry telemetry() const override;

 private:
  Options opt_;
  EsoState eso_;
  bool eso_init_ = false;
  Eigen::VectorXd last_nominal_;  ///< observer input on the next tick
  ControllerTelemetry last_;
};

/// Exact inverse-dynamics + friction-truth feedforward; pure function of
/// time, so it supports stage-time evaluation for integrator validation.
class FeedforwardController final : public Controller {
 public:
  FeedforwardController(dynamics::ManipulatorModel model,
                        std::vector<friction::FrictionParams> friction_truth,
                        std::shared_ptr<const trajectory::Trajectory> traj);
  std::string id() const override { return "feedforward"; }
  int n_joints() const override { return model_.n_joints(); }
  Eigen::VectorXd step(double t, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qd,
                       const trajectory::TrajectorySample& ref,
                       double dt) override;
  std::optional<Eigen::VectorXd> eval_at(double t) const override;

 private:
  dynamics::ManipulatorModel model_;
  std::vector<friction::FrictionParams> friction_;
  std::shared_ptr<const trajectory::Trajectory> traj_;
};

/// Slow torque ramp on one joint (breakaway experiments); zero elsewhere.
class TorqueRampController final : public Controller {
 public:
  TorqueRampController(int n_joints, int joint, double rate);
  std::string id() const override { return "torque_ramp"; }
  int n_joints() const override { return n_; }
  Eigen::VectorXd step(double t, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qd,
                       const trajectory::TrajectorySample& ref,
                       double dt) override;

 private:
  int n_, joint_;
  double rate_;
};

/// No torque at all.
class ZeroController final : public Controller {
 public:
  explicit ZeroController(int n_joints) : n_(n_joints) {}
  std::string id() const override { return "zero"; }
  int n_joints() const override { return n_; }
  Eigen::VectorXd step(double, const Eigen::VectorXd&, const Eigen::VectorXd&,
                       const trajectory::TrajectorySample&, double) override {
    return Eigen::VectorXd::Zero(n_);
  }

 private:
  int n_;
};

}  // namespace fricest::control
