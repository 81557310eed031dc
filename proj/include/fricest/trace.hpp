#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace fricest::sim {

/// Identifying metadata embedded in every exported trace.
struct TraceMeta {
  std::string controller_id;
  std::string trajectory_id;
  std::uint64_t config_hash = 0;   ///< hash of the full generating config
  std::uint64_t pairing_hash = 0;  ///< hash excluding the controller spec
  std::uint64_t seed = 0;
  int n_joints = 0;
  int friction_param_count = 0;  ///< per-joint width of pi_f_hat (0 if none)
  double control_dt = 0.0;       ///< s, spacing of the time grid
  bool has_s = false;
  bool has_adaptive = false;
  bool has_eso = false;
  bool fault = false;       ///< run aborted on a non-finite state
  double fault_time = -1.0; ///< s, time of the abort (-1 when clean)
  int saturation_events = 0;
};

/// Time-indexed record of one closed-loop run, sampled at the control rate.
/// Row k of every matrix belongs to time t[k]; controller-internal streams
/// (s, pi_f_hat, eps, eso) hold the values the controller used at that tick,
/// i.e. before its end-of-tick state update.
struct SimTrace {
  TraceMeta meta;
  Eigen::VectorXd t;
  Eigen::MatrixXd q, qd;              ///< plant state, ticks x n
  Eigen::MatrixXd q_des, qd_des, qdd_des;
  Eigen::MatrixXd tau;                ///< applied (post-saturation) torque
  Eigen::MatrixXd disturbance;        ///< injected disturbance torque
  Eigen::MatrixXd s;                  ///< sliding error, if meta.has_s
  Eigen::MatrixXd pi_f_hat;           ///< ticks x (k*n), if meta.has_adaptive
  Eigen::MatrixXd eps;                ///< backstepping state, if has_adaptive
  Eigen::MatrixXd eso;                ///< [z1 z2 z3] per joint, if has_eso

  Eigen::Index ticks() const { return t.size(); }

  /// Throws std::runtime_error if array shapes disagree with the metadata or
  /// the time grid is not strictly increasing with constant step.
  void validate() const;

  /// Plain-text export: '#'-prefixed metadata lines, one header line, then
  /// one row per control tick with %.17g fields (lossless round trip).
  void save_csv(const std::filesystem::path& path) const;
  static SimTrace load_csv(const std::filesystem::path& path);

  /// Compact little-endian binary journal ("FRTJ" magic, format version 1).
  void save_journal(const std::filesystem::path& path) const;
  static SimTrace load_journal(const std::filesystem::path& path);
};

}  // namespace fricest::sim
