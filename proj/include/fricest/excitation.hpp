#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fricest/dynamics.hpp"
#include "fricest/trajectory.hpp"

namespace fricest::excitation {

/// Which regressor's conditioning the excitation is optimized for.
enum class RegressorKind { RigidBody, Friction, Combined };

RegressorKind regressor_kind_from_string(const std::string& s);
std::string to_string(RegressorKind kind);

/// Position/velocity box the optimized trajectory must respect.
struct LimitBox {
  Eigen::VectorXd q_min, q_max, qd_min, qd_max;
  static LimitBox of(const dynamics::ManipulatorModel& model);
};

/// Specification of one excitation-generation run. Decision variables are
/// the Fourier velocity coefficients a(j,i), b(j,i) of the non-fixed joints,
/// packed joint-major as [a(j,1), b(j,1), ..., a(j,N), b(j,N)] per joint.
/// Offsets and fixed-joint positions are data, not variables.
struct ExcitationProblem {
  dynamics::ManipulatorModel model;
  Eigen::VectorXd v_brk;  ///< per joint, sets the friction-regressor scales
  RegressorKind regressor = RegressorKind::RigidBody;

  int harmonics = 5;
  double omega = 2.0 * M_PI * 0.1;  ///< rad/s
  double duration = 100.0;          ///< s, carried onto the result
  double grid_dt = 0.01;            ///< s, sample spacing over one period
  Eigen::VectorXd offset;           ///< rad, constant term per joint
  std::vector<bool> fixed;
  Eigen::VectorXd fixed_pos;

  double init_std = 0.05;   ///< rad/s, std of the random initial coefficients
  std::uint64_t seed = 1;
  int max_iters = 150;      ///< SQP iterations per start
  int restarts = 3;         ///< independent starts; best result wins
  double feas_tol = 1e-6;   ///< rad and rad/s
  double vel_margin = 0.05; ///< velocity limits shrunk by this fraction
  std::optional<Eigen::VectorXd> warm_start;  ///< packed coefficients

  int n_free_joints() const;
  int n_vars() const { return 2 * harmonics * n_free_joints(); }
  /// Columns of the stacked regressor (friction columns exist only for
  /// non-fixed joints; a held joint never moves, so its friction parameters
  /// are not identifiable from the trajectory).
  int stacked_cols() const;
  /// Sample times k*grid_dt covering one base period.
  std::vector<double> grid_times() const;
  /// Throws std::domain_error when shapes disagree, the grid is not at least
  /// 10x overdetermined, or the offsets/fixed positions violate the limits.
  void validate() const;

  /// Trajectory with the packed coefficient vector x installed.
  trajectory::FourierTrajectory trajectory_of(const Eigen::VectorXd& x) const;
  Eigen::VectorXd pack(const trajectory::FourierTrajectory& traj) const;
};

/// Outcome summary of one optimize_excitation call.
struct ExcitationReport {
  double initial_cond = 0.0;  ///< at the first start's feasible initial point
  double final_cond = 0.0;    ///< best feasible value found (<= initial)
  int iterations = 0;         ///< accepted SQP steps over all starts
  double max_violation = 0.0; ///< limit violation of the result on the grid
  double wall_time_s = 0.0;
  std::vector<double> history;  ///< best-so-far cond after each iteration

  nlohmann::json to_json() const;
};

/// Raised when no feasible coefficient vector could be produced; carries the
/// best iterate seen so far.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what,
                  trajectory::FourierTrajectory best_iterate)
      : std::runtime_error(what), best(std::move(best_iterate)) {}
  trajectory::FourierTrajectory best;
};

/// Regressor blocks of all grid samples stacked vertically
/// (rows = samples x n_joints, cols = stacked_cols()).
Eigen::MatrixXd stacked_regressor(const ExcitationProblem& problem,
                                  const Eigen::VectorXd& x);

/// sigma_max / sigma_min via full SVD; +infinity sentinel when the matrix is
/// column-rank-deficient (smallest singular value below 1e-13 relative).
double condition_number(const Eigen::MatrixXd& matrix);

/// Objective value and analytic gradient via singular-vector sensitivities
/// d(sigma) = u' dY v. Falls back to central finite differences when either
/// extreme singular value is repeated (relative gap < 1e-8); `fd_fallback`
/// reports which path was taken.
struct CondEval {
  double cond = 0.0;
  Eigen::VectorXd grad;
  bool fd_fallback = false;
};
CondEval condition_value_and_gradient(const ExcitationProblem& problem,
                                      const Eigen::VectorXd& x);

/// Per-sample worst limit violation (0 where feasible) of the trajectory on
/// the given time grid, against the raw box.
Eigen::VectorXd constraint_violations(
    const trajectory::FourierTrajectory& traj, const LimitBox& limits,
    const std::vector<double>& grid_times);

/// Sequential quadratic programming over the packed coefficients: damped
/// BFGS model, linear grid constraints (the trajectory is linear in its
/// coefficients), feasible iterates throughout, deterministic multi-start.
/// The returned trajectory satisfies the limits at every grid sample within
/// feas_tol and its condition number never exceeds the initial one.
std::pair<trajectory::FourierTrajectory, ExcitationReport> optimize_excitation(
    const ExcitationProblem& problem);

}  // namespace fricest::excitation
