#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fricest/control.hpp"
#include "fricest/dynamics.hpp"
#include "fricest/trace.hpp"

namespace fricest::eval {

/// Raised when a trace lacks the streams or the pairing a metric needs.
class EvalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Descriptive statistics of one joint's |q - q_des| samples. Quartiles use
/// linear interpolation between order statistics (position p*(count-1)), so
/// samples {1,2,3,4,5}*1e-3 give median 3e-3 and IQR 2e-3.
struct JointStats {
  double median = 0.0, q25 = 0.0, q75 = 0.0, iqr = 0.0;
  double min = 0.0, max = 0.0, mean = 0.0, rms = 0.0;
  Eigen::Index count = 0;
  bool absent = false;  ///< no samples (empty subset)
};

struct ErrorStats {
  std::vector<JointStats> joints;
};

/// Per-joint tick index lists selecting a subset of a trace.
struct TraceSubset {
  std::vector<std::vector<Eigen::Index>> idx;
  static TraceSubset full(const sim::SimTrace& trace);
};

/// Linear-interpolation quantile of an unsorted sample vector, p in [0, 1].
double quantile(std::vector<double> samples, double p);

/// |q - q_des| statistics per joint over the whole trace / over a subset.
ErrorStats tracking_error_stats(const sim::SimTrace& trace);
ErrorStats tracking_error_stats(const sim::SimTrace& trace,
                                const TraceSubset& subset);

/// Ticks where |qd_des| < threshold, per joint independently.
TraceSubset low_velocity_filter(const sim::SimTrace& trace, double threshold);

/// Composite storage-function series
///   V1(t_k) = 1/2 s'M(q)s + 1/2 (pi_f_hat - pi_f_true)' inv(diag(Gamma_f))
///             (pi_f_hat - pi_f_true) + 1/2 eps' inv(diag(Gamma_e)) eps
/// evaluated at every tick, plus the largest positive tick-to-tick increment
/// (0 when the series never rises). Throws EvalError unless the trace
/// carries the s and adaptive streams.
struct LyapunovSeries {
  Eigen::VectorXd t, V;
  double max_increment = 0.0;
};
LyapunovSeries lyapunov_series(const sim::SimTrace& trace,
                               const dynamics::ManipulatorModel& model,
                               const control::Gains& gains,
                               const Eigen::VectorXd& pi_f_true);

/// Mean |z3| of two observer traces of the same experiment (same trajectory,
/// seed and pairing hash) and their ratio with/without. When both means are
/// below 1e-9 rad/s^2 the comparison is degenerate and the ratio reports 1.
struct DisturbanceComparison {
  double mean_with = 0.0, mean_without = 0.0, ratio = 1.0;
  bool degenerate = false;
};
DisturbanceComparison disturbance_comparison(const sim::SimTrace& trace_with,
                                             const sim::SimTrace& trace_without);

/// Terminal friction-parameter estimates and the settling time: the first
/// trace time after which every entry stays within max(5% of its terminal
/// value, 1e-6) of that terminal value.
struct ConvergenceSummary {
  Eigen::VectorXd terminal;
  double settling_time = 0.0;
};
ConvergenceSummary parameter_convergence(const sim::SimTrace& trace);

/// Everything the evaluate pipeline reports for one run (plus the paired
/// observer comparison when available).
struct EvalReport {
  std::string controller_id, trajectory_id;
  std::uint64_t seed = 0;
  double low_velocity_threshold = 0.01;  ///< rad/s
  ErrorStats full;
  ErrorStats low_velocity;
  std::optional<LyapunovSeries> lyapunov;
  std::optional<DisturbanceComparison> disturbance;
  std::optional<ConvergenceSummary> convergence;

  /// Deterministic JSON rendering (round-trip-exact doubles).
  std::string to_json_string() const;
};

/// Writes the report's plots as self-contained SVG files named
/// <prefix>_tracking_box.svg, _convergence.svg, _lyapunov.svg, _z3.svg into
/// out_dir, skipping plots whose inputs are missing, and returns the written
/// paths. Every plot embeds its exact numbers as JSON in the <desc> element;
/// visible labels are rounded. Curves are drawn from the supplied traces
/// (convergence needs an adaptive trace; the z3 comparison needs two
/// observer traces, with/without, in that order).
std::vector<std::filesystem::path> emit_plots(
    const EvalReport& report, const std::vector<const sim::SimTrace*>& traces,
    const std::filesystem::path& out_dir, const std::string& prefix);

/// One box plot comparing several controllers on the same experiment:
/// per joint, one box per (label, stats) entry, adjacent, in entry order.
/// Absent entries render as an annotation instead of a box.
std::filesystem::path emit_comparison_box(
    const std::vector<std::pair<std::string, ErrorStats>>& entries,
    const std::string& title, const std::filesystem::path& out_file);

}  // namespace fricest::eval
