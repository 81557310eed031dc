#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fricest/control.hpp"
#include "fricest/dynamics.hpp"
#include "fricest/excitation.hpp"
#include "fricest/friction.hpp"
#include "fricest/simloop.hpp"
#include "fricest/trajectory.hpp"

namespace fricest::config {

/// Raised on malformed configuration content (unknown keys, wrong types,
/// missing required sections, inconsistent shapes).
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One controller to run. `type` is one of: pd, pid, pd_friction, adaptive,
/// adrc, adrc_friction, feedforward. The *_friction variants take their
/// compensation parameters from a friction-parameter file produced by the
/// estimate stage.
struct ControllerSpec {
  std::string type = "pd";
  std::string label;  ///< defaults to type
  double bandwidth = 10.0;
  std::optional<Eigen::VectorXd> gamma_f;  ///< per-entry or stacked k*n
  std::optional<Eigen::VectorXd> gamma_e;  ///< scalar or per joint
  bool backstepping = false;
  std::string friction_model = "proposed";   ///< or "simplified"
  std::string velocity_source = "observer";  ///< or "measured"
  double omega_o = 100.0;       ///< rad/s
  double adrc_bandwidth = 10.0;  ///< rad/s
};

/// Reference trajectory source: a saved Fourier trajectory file, freshly
/// sampled random Fourier coefficients, or a Cartesian circle (2-DoF only).
struct TrajectorySpec {
  std::string type = "random_fourier";  ///< file | random_fourier | circle
  std::filesystem::path file;
  int harmonics = 5;
  double omega = 2.0 * M_PI * 0.1;  ///< rad/s
  double std_dev = 0.05;            ///< rad/s
  double duration = 20.0;           ///< s
  Eigen::Vector2d center{0.0, 0.0};  ///< m (circle)
  double radius = 0.0;               ///< m (circle)
  double period = 10.0;              ///< s (circle)
  int elbow = 1;                     ///< circle IK branch, +1 or -1
};

/// Excitation-generation knobs; mirrors excitation::ExcitationProblem.
struct ExcitationSpec {
  std::string regressor = "friction";
  int harmonics = 5;
  double omega = 2.0 * M_PI * 0.1;
  double duration = 100.0;
  double grid_dt = 0.01;
  Eigen::VectorXd offset;     ///< empty = zeros
  std::vector<bool> fixed;    ///< empty = none fixed
  Eigen::VectorXd fixed_pos;  ///< empty = zeros
  double init_std = 0.05;
  int max_iters = 150;
  int restarts = 3;
  double feas_tol = 1e-6;
  double vel_margin = 0.05;

  excitation::ExcitationProblem to_problem(
      const dynamics::ManipulatorModel& model,
      const std::vector<friction::FrictionParams>& friction,
      std::uint64_t seed) const;
};

/// Evaluation campaign shape: #trajectories x seeds per controller.
struct EvalSpec {
  double low_velocity_threshold = 0.01;  ///< rad/s
  std::vector<std::uint64_t> seeds = {1};
  int trajectories = 1;
  int traj_harmonics = 5;
  double traj_omega = 2.0 * M_PI * 0.1;
  double traj_std = 0.05;
  double traj_duration = 20.0;
};

/// Fully parsed experiment description. Loading rejects unknown keys at
/// every nesting level; the source document (minus out_dir and seed) is kept
/// for hashing so that artifacts can be traced to their generating config.
struct ExperimentConfig {
  dynamics::ManipulatorModel model;
  std::vector<friction::FrictionParams> friction;
  std::optional<ExcitationSpec> excitation;
  sim::SimConfig sim;
  std::vector<ControllerSpec> controllers;
  std::optional<TrajectorySpec> trajectory;
  EvalSpec eval;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;

  /// Parses a JSON config file (// comments allowed). Throws io::FileError
  /// when unreadable, ConfigError when invalid.
  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig parse(const nlohmann::json& doc);

  /// Hash of the canonical config content plus the effective seed. out_dir
  /// and the stored seed key are excluded, so --seed/--out overrides and
  /// relocations keep hashes meaningful.
  std::uint64_t config_hash() const;
  /// Same, with the controller section removed: identifies the experiment a
  /// trace pair must share for comparisons.
  std::uint64_t pairing_hash() const;

  nlohmann::json canonical;  ///< parsed document minus out_dir/seed
};

/// Friction-parameter artifact written by the estimate stage and consumed by
/// the *_friction controllers.
struct FrictionParamsFile {
  Eigen::VectorXd pi_f;   ///< stacked k*n
  Eigen::VectorXd v_brk;  ///< per joint, regressor scales
  int param_count = 3;    ///< k
  std::string friction_model = "proposed";
  double settling_time_s = 0.0;

  nlohmann::json to_json() const;
  static FrictionParamsFile from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static FrictionParamsFile load(const std::filesystem::path& path);
};

/// Per-joint inertia scale used for observer channels and gain defaults:
/// the diagonal of M at the hanging rest configuration.
Eigen::VectorXd inertia_estimate(const dynamics::ManipulatorModel& model);

/// Builds the controller a spec describes. Rigid-body parameter estimates
/// and regressor scales are mismatch-injected per config.sim.mismatch.
/// *_friction controllers require `params`; type "feedforward" requires
/// `traj`. Throws ConfigError when a requirement is missing.
std::unique_ptr<control::Controller> make_controller(
    const ControllerSpec& spec, const ExperimentConfig& config,
    const std::optional<FrictionParamsFile>& params,
    std::shared_ptr<const trajectory::Trajectory> traj = nullptr);

/// Builds the reference trajectory a spec describes; `seed` feeds the
/// random_fourier variant (file and circle ignore it).
std::shared_ptr<const trajectory::Trajectory> make_trajectory(
    const TrajectorySpec& spec, const dynamics::ManipulatorModel& model,
    std::uint64_t seed);

}  // namespace fricest::config
