#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fricest/trace.hpp"

namespace fricest::friction {

/// Raised when a trace does not contain the event an estimator looks for.
class EstimationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Static friction description of one joint. The velocity scales of the
/// Stribeck and Coulomb transitions are always derived from the breakaway
/// velocity: v_st = v_brk*sqrt(2), v_coul = v_brk/10.
struct FrictionParams {
  double f_brk = 0.0;  ///< N*m, breakaway torque
  double f_c = 0.0;    ///< N*m, Coulomb torque
  double f_vis = 0.0;  ///< N*m*s/rad, viscous coefficient
  double v_brk = 0.1;  ///< rad/s, breakaway velocity

  double v_st() const;
  double v_coul() const;

  /// Throws std::domain_error unless f_brk >= f_c >= 0, f_vis >= 0,
  /// v_brk > 0 (the passivity conditions).
  void validate() const;

  /// Linear parameter vector targeted by the regressor:
  /// [sqrt(2e)*(f_brk - f_c), f_c, f_vis]. The first entry absorbs the
  /// sqrt(2e) prefactor of the exponential term so that
  /// friction_regressor(v, v_st, v_coul) * linear_params() reproduces
  /// stribeck_torque exactly.
  Eigen::Vector3d linear_params() const;
};

/// Velocity scales of the regressor per joint, for controllers that know
/// v_brk but estimate the torque parameters.
struct RegressorScales {
  Eigen::VectorXd v_st;
  Eigen::VectorXd v_coul;
  static RegressorScales from_breakaway(const Eigen::VectorXd& v_brk);
  static RegressorScales from_params(const std::vector<FrictionParams>& p);
};

/// Friction torque opposing motion:
///   sqrt(2e)*(f_brk - f_c)*exp(-|v|/v_st)*(v/v_st)
///   + f_c*tanh(v/v_coul) + f_vis*v.
/// The exponential term uses |v| so the law is odd in v and passive.
double stribeck_torque(const FrictionParams& params, double v);

/// Row regressor [exp(-|v|/v_st)*(v/v_st), tanh(v/v_coul), v].
/// Throws std::domain_error when v_st or v_coul is not strictly positive.
Eigen::RowVector3d friction_regressor(double v, double v_st, double v_coul);

/// Velocity derivative of friction_regressor, for sensitivity analysis.
Eigen::RowVector3d friction_regressor_dv(double v, double v_st, double v_coul);

/// Row regressor [tanh(v/v_coul), v] of the model without the Stribeck term.
Eigen::RowVector2d simplified_regressor(double v, double v_coul);

/// Elementwise max(pi_f, 0); keeps every estimated friction parameter in the
/// passive region. Idempotent.
Eigen::VectorXd clip_passivity(const Eigen::VectorXd& pi_f);

/// Breakaway velocity estimate from a slow torque-ramp experiment: |qd| at
/// the first tick where the joint has moved more than deviation_threshold
/// from its initial position. Throws EstimationError if it never moves that
/// far.
double estimate_breakaway(const sim::SimTrace& trace,
                          double deviation_threshold, int joint = 0);

}  // namespace fricest::friction
