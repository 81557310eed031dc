#pragma once

#include <vector>

#include <Eigen/Dense>

namespace fricest::dynamics {

enum class ModelKind { OneDof, TwoLinkPlanar };

/// Physical description of one link of a serial planar arm.
struct LinkParams {
  double mass = 0.0;     ///< kg
  double length = 0.0;   ///< m, joint-to-joint (joint-to-tip for the last link)
  double com = 0.0;      ///< m, joint axis to center of mass along the link
  double inertia = 0.0;  ///< kg*m^2, rotational inertia about the center of mass
};

/// A 1-DoF pendulum joint or a two-link planar arm hanging in a vertical
/// plane. Joint angles are measured from the straight-down configuration, so
/// q = 0 is the gravity equilibrium.
struct ManipulatorModel {
  ModelKind kind = ModelKind::OneDof;
  std::vector<LinkParams> links;
  double gravity = 9.81;  ///< m/s^2

  Eigen::VectorXd q_min, q_max;    ///< rad
  Eigen::VectorXd qd_min, qd_max;  ///< rad/s
  Eigen::VectorXd tau_max;         ///< N*m, symmetric bound |tau| <= tau_max

  int n_joints() const { return kind == ModelKind::OneDof ? 1 : 2; }

  /// Minimal base inertial parameter vector pi (the regressor target).
  /// OneDof: [I + m*lc^2, m*lc].
  /// TwoLinkPlanar: [I1 + m1*lc1^2 + m2*l1^2, I2 + m2*lc2^2, m2*lc2,
  ///                 m1*lc1 + m2*l1].
  Eigen::VectorXd base_params() const;

  /// Throws std::domain_error if masses/lengths/inertias are not strictly
  /// positive or any limit interval is empty.
  void validate() const;

  static ManipulatorModel one_dof(double mass, double length, double com,
                                  double inertia, double gravity = 9.81);
  static ManipulatorModel two_link(const LinkParams& link1,
                                   const LinkParams& link2,
                                   double gravity = 9.81);
};

/// Number of base inertial parameters for a model kind (2 or 4).
int base_param_count(ModelKind kind);

// ---------------------------------------------------------------------------
// Checked operations: throw std::domain_error when the queried state lies
// outside the model's position/velocity limit box.
// ---------------------------------------------------------------------------

/// Joint-space inertia matrix M(q); symmetric positive definite.
Eigen::MatrixXd mass_matrix(const ManipulatorModel& model,
                            const Eigen::VectorXd& q);

/// C(q, qd)*qd + g(q).
Eigen::VectorXd bias_forces(const ManipulatorModel& model,
                            const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qd);

/// Gravity torque g(q) alone.
Eigen::VectorXd gravity_torque(const ManipulatorModel& model,
                               const Eigen::VectorXd& q);

/// Coriolis/centrifugal matrix in Christoffel form, so that Mdot - 2C is
/// skew-symmetric.
Eigen::MatrixXd coriolis_matrix(const ManipulatorModel& model,
                                const Eigen::VectorXd& q,
                                const Eigen::VectorXd& qd);

/// Regressor Y(q, qd, qdd) with Y*pi = M(q)*qdd + C(q, qd)*qd + g(q).
Eigen::MatrixXd rigid_body_regressor(const ManipulatorModel& model,
                                     const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& qd,
                                     const Eigen::VectorXd& qdd);

/// M(q)*qdd + C(q, qd)*qd + g(q).
Eigen::VectorXd inverse_dynamics(const ManipulatorModel& model,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd,
                                 const Eigen::VectorXd& qdd);

/// Solves M(q)*qdd = tau_applied - C(q, qd)*qd - g(q) - tau_friction.
Eigen::VectorXd forward_dynamics(const ManipulatorModel& model,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd,
                                 const Eigen::VectorXd& tau_applied,
                                 const Eigen::VectorXd& tau_friction);

// ---------------------------------------------------------------------------
// Unchecked variants used by integrators, which may probe states transiently
// outside the limit box. Same math, no limit check.
// ---------------------------------------------------------------------------

Eigen::MatrixXd mass_matrix_raw(const ManipulatorModel& model,
                                const Eigen::VectorXd& q);
Eigen::VectorXd bias_forces_raw(const ManipulatorModel& model,
                                const Eigen::VectorXd& q,
                                const Eigen::VectorXd& qd);
Eigen::VectorXd gravity_torque_raw(const ManipulatorModel& model,
                                   const Eigen::VectorXd& q);
Eigen::MatrixXd coriolis_matrix_raw(const ManipulatorModel& model,
                                    const Eigen::VectorXd& q,
                                    const Eigen::VectorXd& qd);
Eigen::VectorXd forward_dynamics_raw(const ManipulatorModel& model,
                                     const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& qd,
                                     const Eigen::VectorXd& tau_applied,
                                     const Eigen::VectorXd& tau_friction);

/// Slotine-Li regressor: Y(q, qd, qd_r, qdd_r)*pi = M(q)*qdd_r +
/// C(q, qd)*qd_r + g(q). Reduces to rigid_body_regressor when qd_r = qd and
/// qdd_r = qdd. No limit check (the controller may see transient overshoot).
Eigen::MatrixXd slotine_li_regressor(const ManipulatorModel& model,
                                     const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& qd,
                                     const Eigen::VectorXd& qd_r,
                                     const Eigen::VectorXd& qdd_r);

/// Partial derivatives of rigid_body_regressor with respect to one scalar
/// state component (joint index `joint` of q, qd, or qdd). Used for analytic
/// condition-number gradients.
enum class StateComponent { Position, Velocity, Acceleration };
Eigen::MatrixXd regressor_partial(const ManipulatorModel& model,
                                  const Eigen::VectorXd& q,
                                  const Eigen::VectorXd& qd,
                                  const Eigen::VectorXd& qdd,
                                  StateComponent component, int joint);

/// 0.5 * qd' * M(q) * qd.
double kinetic_energy(const ManipulatorModel& model, const Eigen::VectorXd& q,
                      const Eigen::VectorXd& qd);

/// Gravitational potential, zero datum at the hanging configuration's pivot
/// height convention (only differences matter).
double potential_energy(const ManipulatorModel& model,
                        const Eigen::VectorXd& q);

/// Structural constants over the limit box, estimated on a dense grid:
/// extreme mass-matrix eigenvalues, Coriolis bound c0 with
/// ||C(q, v1) v2|| <= c0 ||v1|| ||v2||, gravity bound c1 >= ||g(q)||, and
/// regressor bound c2 >= ||Y(q, qd, qdd)|| at unit accelerations.
struct StructuralBounds {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};
StructuralBounds structural_bounds(const ManipulatorModel& model,
                                   int grid_points_per_axis = 15);

}  // namespace fricest::dynamics
