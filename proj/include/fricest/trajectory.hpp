#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace fricest::trajectory {

/// Reference state at one instant.
struct TrajectorySample {
  Eigen::VectorXd q, qd, qdd;
};

/// Interface every reference trajectory exposes to the simulation loop.
class Trajectory {
 public:
  virtual ~Trajectory() = default;
  virtual int n_joints() const = 0;
  /// Advisory design span; both families are periodic, so eval accepts any
  /// nonnegative time.
  virtual double duration() const = 0;
  /// Evaluate at time t >= 0; throws std::domain_error at negative time
  /// (with a small tolerance for floating-point time accumulation).
  virtual TrajectorySample eval(double t) const = 0;
};

/// Finite Fourier velocity series per joint. The position of joint j is
///   q_j(t) = sum_i a(j,i)/(i*w) * sin(i*w*t) - b(j,i)/(i*w) * cos(i*w*t)
///            + offset_j,
/// so a and b are velocity-series coefficients in rad/s. Joints flagged in
/// `fixed` ignore their coefficients and hold fixed_pos with zero
/// velocity/acceleration.
struct FourierTrajectory {
  Eigen::MatrixXd a, b;        ///< n_joints x N, rad/s
  double omega = 0.0;          ///< rad/s, base angular frequency
  Eigen::VectorXd offset;      ///< rad, constant term per joint
  std::vector<bool> fixed;     ///< per-joint hold mask
  Eigen::VectorXd fixed_pos;   ///< rad, held positions (used where fixed)
  double duration = 0.0;       ///< s

  int n_joints() const { return static_cast<int>(a.rows()); }
  int harmonics() const { return static_cast<int>(a.cols()); }

  /// Throws std::domain_error unless N >= 1, omega > 0, duration > 0, and
  /// all shapes agree.
  void validate() const;

  /// Actual start position q(0) = offset - sum_i b(:,i)/(i*omega).
  Eigen::VectorXd position0() const;

  /// Adjusts offsets so that q(0) equals the requested start configuration.
  void set_start(const Eigen::VectorXd& q0);

  nlohmann::json to_json() const;
  static FourierTrajectory from_json(const nlohmann::json& j);
};

/// Position, velocity, and acceleration of the series at time t.
TrajectorySample fourier_eval(const FourierTrajectory& traj, double t);

/// Coefficients drawn i.i.d. Normal(0, std^2) with a fully specified
/// generator (mt19937_64 + Box-Muller), so a seed pins the trajectory
/// bit-exactly. Draw order: per joint, per harmonic, a then b.
/// Throws std::domain_error when std <= 0.
FourierTrajectory sample_random_fourier(int n_joints, int N, double omega,
                                        double std, std::uint64_t seed,
                                        double duration = 100.0);

/// Adapter exposing a FourierTrajectory through the Trajectory interface.
class FourierTrajectoryRef final : public Trajectory {
 public:
  explicit FourierTrajectoryRef(FourierTrajectory traj);
  int n_joints() const override { return traj_.n_joints(); }
  double duration() const override { return traj_.duration; }
  TrajectorySample eval(double t) const override;
  const FourierTrajectory& fourier() const { return traj_; }

 private:
  FourierTrajectory traj_;
};

// ---------------------------------------------------------------------------
// Two-link planar kinematics (angles from the straight-down configuration,
// x to the right, y up; see dynamics module conventions).
// ---------------------------------------------------------------------------

/// End-effector position [x, y] for joint angles q.
Eigen::Vector2d two_link_fk(double l1, double l2, const Eigen::Vector2d& q);

/// Closed-form inverse kinematics; elbow = +1 or -1 picks the branch.
/// Throws std::domain_error for unreachable points or at the stretched/folded
/// singularity.
Eigen::Vector2d two_link_ik(double l1, double l2, const Eigen::Vector2d& p,
                            int elbow = 1);

/// End-effector Jacobian dp/dq.
Eigen::Matrix2d two_link_jacobian(double l1, double l2,
                                  const Eigen::Vector2d& q);

/// Joint-space trajectory tracking a circle p(t) = center + radius *
/// [cos(2*pi*t/period), sin(2*pi*t/period)], via closed-form IK with analytic
/// joint velocities and accelerations (qd = J^-1 pd, qdd = J^-1 (pdd - Jd
/// qd)). The circle must lie strictly inside the reachable annulus; a
/// zero-radius circle yields a constant configuration.
class CircleTrajectory final : public Trajectory {
 public:
  CircleTrajectory(const Eigen::Vector2d& center, double radius, double period,
                   double l1, double l2, double duration, int elbow = 1);
  int n_joints() const override { return 2; }
  double duration() const override { return duration_; }
  TrajectorySample eval(double t) const override;

 private:
  Eigen::Vector2d center_;
  double radius_, period_, l1_, l2_, duration_;
  int elbow_;
};

/// Uniformly sampled knots of a CircleTrajectory over one period.
std::vector<TrajectorySample> circle_path(const Eigen::Vector2d& center,
                                          double radius, double period,
                                          double l1, double l2,
                                          int knots = 1000, int elbow = 1);

}  // namespace fricest::trajectory
