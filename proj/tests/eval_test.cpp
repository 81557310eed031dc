// Evaluation metrics checked against hand-computed statistics on synthetic
// traces, analytic low-velocity occupancy of a sinusoid, and exact storage-
// function arithmetic.

#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "fricest/control.hpp"
#include "fricest/dynamics.hpp"
#include "fricest/eval.hpp"
#include "fricest/trace.hpp"

namespace {

using namespace fricest;
namespace fs = std::filesystem;

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("fricest-eval-" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

// Minimal n-joint trace with a uniform grid and chosen error samples.
sim::SimTrace synthetic_trace(const Eigen::MatrixXd& err,
                              const Eigen::MatrixXd& qd_des) {
  sim::SimTrace trace;
  const Eigen::Index ticks = err.rows();
  const int n = static_cast<int>(err.cols());
  trace.meta.n_joints = n;
  trace.meta.control_dt = 0.001;
  trace.meta.controller_id = "synthetic";
  trace.t = Eigen::VectorXd::LinSpaced(ticks, 0.0, 0.001 * (ticks - 1));
  trace.q_des = Eigen::MatrixXd::Zero(ticks, n);
  trace.q = err;  // q_des = 0, so err is the raw tracking error
  trace.qd = Eigen::MatrixXd::Zero(ticks, n);
  trace.qd_des = qd_des;
  trace.tau = Eigen::MatrixXd::Zero(ticks, n);
  return trace;
}

}  // namespace

TEST(Eval, QuantileInterpolatesOrderStatistics) {
  EXPECT_DOUBLE_EQ(eval::quantile({3.0, 1.0, 5.0, 2.0, 4.0}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(eval::quantile({1.0, 2.0, 3.0, 4.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(eval::quantile({1.0, 2.0, 3.0, 4.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(eval::quantile({1.0, 2.0, 3.0, 4.0}, 1.0), 4.0);
  // Position p*(count-1): p = 0.25 on 5 samples lands exactly on index 1.
  EXPECT_DOUBLE_EQ(eval::quantile({5.0, 4.0, 3.0, 2.0, 1.0}, 0.25), 2.0);
  // Interpolated: p = 0.4 on 4 samples is index 1.2.
  EXPECT_DOUBLE_EQ(eval::quantile({1.0, 2.0, 3.0, 4.0}, 0.4), 2.2);
  EXPECT_DOUBLE_EQ(eval::quantile({7.0}, 0.5), 7.0);
}

TEST(Eval, TrackingStatsHandValues) {
  Eigen::MatrixXd err(5, 1);
  err << 1e-3, -2e-3, 3e-3, -4e-3, 5e-3;  // |err| = {1..5}e-3
  const auto stats =
      eval::tracking_error_stats(synthetic_trace(err, err * 0.0));
  ASSERT_EQ(stats.joints.size(), 1u);
  const auto& j = stats.joints[0];
  EXPECT_FALSE(j.absent);
  EXPECT_EQ(j.count, 5);
  EXPECT_DOUBLE_EQ(j.median, 3e-3);
  EXPECT_DOUBLE_EQ(j.q25, 2e-3);
  EXPECT_DOUBLE_EQ(j.q75, 4e-3);
  EXPECT_DOUBLE_EQ(j.iqr, 2e-3);
  EXPECT_DOUBLE_EQ(j.min, 1e-3);
  EXPECT_DOUBLE_EQ(j.max, 5e-3);
  EXPECT_DOUBLE_EQ(j.mean, 3e-3);
  EXPECT_NEAR(j.rms, std::sqrt((1.0 + 4.0 + 9.0 + 16.0 + 25.0) / 5.0) * 1e-3,
              1e-18);
}

TEST(Eval, SubsetStatsUseOnlySelectedTicks) {
  Eigen::MatrixXd err(6, 2);
  err.col(0) << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  err.col(1) << 10.0, 20.0, 30.0, 40.0, 50.0, 60.0;
  const auto trace = synthetic_trace(err, err * 0.0);
  eval::TraceSubset subset;
  subset.idx = {{0, 2, 4}, {5}};
  const auto stats = eval::tracking_error_stats(trace, subset);
  EXPECT_DOUBLE_EQ(stats.joints[0].median, 3.0);  // {1, 3, 5}
  EXPECT_EQ(stats.joints[0].count, 3);
  EXPECT_DOUBLE_EQ(stats.joints[1].median, 60.0);
  // Empty per-joint selection reports absent.
  subset.idx = {{}, {0}};
  const auto empty = eval::tracking_error_stats(trace, subset);
  EXPECT_TRUE(empty.joints[0].absent);
  EXPECT_EQ(empty.joints[0].count, 0);
  EXPECT_FALSE(empty.joints[1].absent);
  // The full subset reproduces the whole-trace overload.
  const auto full = eval::TraceSubset::full(trace);
  ASSERT_EQ(full.idx.size(), 2u);
  EXPECT_EQ(full.idx[0].size(), 6u);
  EXPECT_DOUBLE_EQ(eval::tracking_error_stats(trace, full).joints[0].median,
                   eval::tracking_error_stats(trace).joints[0].median);
}

TEST(Eval, LowVelocityFilterCountsAndOccupancy) {
  // Hand case: per-joint independent thresholds.
  Eigen::MatrixXd qd_des(4, 2);
  qd_des << 0.005, 0.5, 0.02, 0.001, -0.009, -0.5, 0.5, 0.0;
  const auto trace = synthetic_trace(Eigen::MatrixXd::Zero(4, 2), qd_des);
  const auto subset = eval::low_velocity_filter(trace, 0.01);
  ASSERT_EQ(subset.idx.size(), 2u);
  EXPECT_EQ(subset.idx[0], (std::vector<Eigen::Index>{0, 2}));
  EXPECT_EQ(subset.idx[1], (std::vector<Eigen::Index>{1, 3}));

  // Analytic occupancy: |A sin| < h holds for a fraction (2/pi) asin(h/A) of
  // a long uniform time grid.
  const int ticks = 200000;
  const double A = 0.8, h = 0.05;
  Eigen::MatrixXd qd(ticks, 1);
  for (int k = 0; k < ticks; ++k) {
    qd(k, 0) = A * std::sin(2.0 * M_PI * k / 1000.0);
  }
  const auto occ = eval::low_velocity_filter(
      synthetic_trace(Eigen::MatrixXd::Zero(ticks, 1), qd), h);
  const double fraction =
      static_cast<double>(occ.idx[0].size()) / static_cast<double>(ticks);
  EXPECT_NEAR(fraction, 2.0 / M_PI * std::asin(h / A), 0.02 * fraction);
}

TEST(Eval, LyapunovSeriesHandArithmetic) {
  // Two ticks of a 1-DoF trace with hand-set streams; V1 terms recomputed on
  // paper: 1/2 s^2 M(q) + 1/2 err^2 / Gamma_f + 1/2 eps^2 / Gamma_e.
  const auto model = dynamics::ManipulatorModel::one_dof(2.0, 0.5, 0.25, 0.05);
  const double M = 0.175;  // constant mass matrix of the 1-DoF arm
  sim::SimTrace trace = synthetic_trace(Eigen::MatrixXd::Zero(3, 1),
                                        Eigen::MatrixXd::Zero(3, 1));
  trace.meta.has_s = true;
  trace.meta.has_adaptive = true;
  trace.meta.friction_param_count = 3;
  trace.s = Eigen::MatrixXd::Zero(3, 1);
  trace.s << 0.2, 0.1, 0.15;
  trace.pi_f_hat = Eigen::MatrixXd::Zero(3, 3);
  trace.pi_f_hat.row(0) << 1.0, 1.0, 0.5;
  trace.pi_f_hat.row(1) << 1.1, 1.0, 0.5;
  trace.pi_f_hat.row(2) << 1.1, 1.0, 0.5;
  trace.eps = Eigen::MatrixXd::Zero(3, 1);
  trace.eps << 0.0, 0.3, 0.1;

  control::Gains gains = control::Gains::critically_damped(
      Eigen::VectorXd::Constant(1, M), 10.0);
  gains.Gamma_f << 2.0, 4.0, 5.0;
  gains.Gamma_e << 8.0;
  Eigen::VectorXd pi_f_true(3);
  pi_f_true << 1.2, 1.0, 0.4;

  const auto series = eval::lyapunov_series(trace, model, gains, pi_f_true);
  ASSERT_EQ(series.V.size(), 3);
  const auto v_at = [&](double s, const Eigen::Vector3d& pf, double eps) {
    const Eigen::Vector3d err = pf - pi_f_true;
    return 0.5 * s * s * M +
           0.5 * (err[0] * err[0] / 2.0 + err[1] * err[1] / 4.0 +
                  err[2] * err[2] / 5.0) +
           0.5 * eps * eps / 8.0;
  };
  EXPECT_NEAR(series.V[0], v_at(0.2, {1.0, 1.0, 0.5}, 0.0), 1e-15);
  EXPECT_NEAR(series.V[1], v_at(0.1, {1.1, 1.0, 0.5}, 0.3), 1e-15);
  EXPECT_NEAR(series.V[2], v_at(0.15, {1.1, 1.0, 0.5}, 0.1), 1e-15);
  // Exact largest positive increment.
  const double inc1 = series.V[1] - series.V[0];
  const double inc2 = series.V[2] - series.V[1];
  EXPECT_NEAR(series.max_increment,
              std::max({0.0, inc1, inc2}), 1e-15);

  // A strictly decreasing series reports exactly zero.
  trace.s << 0.3, 0.2, 0.1;
  trace.eps.setZero();
  trace.pi_f_hat.row(1) = trace.pi_f_hat.row(0);
  trace.pi_f_hat.row(2) = trace.pi_f_hat.row(0);
  const auto mono = eval::lyapunov_series(trace, model, gains, pi_f_true);
  EXPECT_DOUBLE_EQ(mono.max_increment, 0.0);

  // Missing streams raise.
  sim::SimTrace bare = synthetic_trace(Eigen::MatrixXd::Zero(3, 1),
                                       Eigen::MatrixXd::Zero(3, 1));
  EXPECT_THROW(eval::lyapunov_series(bare, model, gains, pi_f_true),
               eval::EvalError);
}

namespace {

sim::SimTrace eso_trace(double z3_value, const std::string& trajectory_id,
                        std::uint64_t seed, std::uint64_t pairing) {
  sim::SimTrace trace = synthetic_trace(Eigen::MatrixXd::Zero(4, 1),
                                        Eigen::MatrixXd::Zero(4, 1));
  trace.meta.has_eso = true;
  trace.meta.trajectory_id = trajectory_id;
  trace.meta.seed = seed;
  trace.meta.pairing_hash = pairing;
  trace.eso = Eigen::MatrixXd::Zero(4, 3);
  trace.eso.col(2).setConstant(z3_value);
  return trace;
}

}  // namespace

TEST(Eval, DisturbanceComparisonRatioAndGuards) {
  const auto with = eso_trace(0.2, "traj", 1, 99);
  const auto without = eso_trace(0.8, "traj", 1, 99);
  const auto cmp = eval::disturbance_comparison(with, without);
  EXPECT_FALSE(cmp.degenerate);
  EXPECT_NEAR(cmp.mean_with, 0.2, 1e-15);
  EXPECT_NEAR(cmp.mean_without, 0.8, 1e-15);
  EXPECT_NEAR(cmp.ratio, 0.25, 1e-12);

  // Both observers silent: degenerate, ratio pinned to 1.
  const auto zero = eval::disturbance_comparison(eso_trace(0.0, "traj", 1, 99),
                                                 eso_trace(0.0, "traj", 1, 99));
  EXPECT_TRUE(zero.degenerate);
  EXPECT_DOUBLE_EQ(zero.ratio, 1.0);

  // Unpaired runs are rejected.
  EXPECT_THROW(eval::disturbance_comparison(eso_trace(0.1, "other", 1, 99),
                                            eso_trace(0.2, "traj", 1, 99)),
               eval::EvalError);
  EXPECT_THROW(eval::disturbance_comparison(eso_trace(0.1, "traj", 2, 99),
                                            eso_trace(0.2, "traj", 1, 99)),
               eval::EvalError);
  EXPECT_THROW(eval::disturbance_comparison(eso_trace(0.1, "traj", 1, 98),
                                            eso_trace(0.2, "traj", 1, 99)),
               eval::EvalError);
  // Missing observer stream.
  auto no_eso = eso_trace(0.1, "traj", 1, 99);
  no_eso.meta.has_eso = false;
  no_eso.eso.resize(0, 0);
  EXPECT_THROW(
      eval::disturbance_comparison(no_eso, eso_trace(0.2, "traj", 1, 99)),
      eval::EvalError);
}

TEST(Eval, ParameterConvergenceSettling) {
  // pi_f sits at half its terminal value for 50 ticks, then holds terminal:
  // settling is the first tick of the in-band tail, t[50].
  const int ticks = 100;
  sim::SimTrace trace = synthetic_trace(Eigen::MatrixXd::Zero(ticks, 1),
                                        Eigen::MatrixXd::Zero(ticks, 1));
  trace.meta.has_adaptive = true;
  trace.meta.friction_param_count = 3;
  trace.pi_f_hat = Eigen::MatrixXd::Zero(ticks, 3);
  trace.eps = Eigen::MatrixXd::Zero(ticks, 1);
  for (int k = 0; k < ticks; ++k) {
    const double f = k < 50 ? 0.5 : 1.0;
    trace.pi_f_hat.row(k) << f * 1.2, f * 1.0, f * 0.5;
  }
  const auto conv = eval::parameter_convergence(trace);
  ASSERT_EQ(conv.terminal.size(), 3);
  EXPECT_DOUBLE_EQ(conv.terminal[0], 1.2);
  EXPECT_DOUBLE_EQ(conv.terminal[1], 1.0);
  EXPECT_DOUBLE_EQ(conv.terminal[2], 0.5);
  EXPECT_DOUBLE_EQ(conv.settling_time, trace.t[50]);

  // A constant series settles immediately.
  trace.pi_f_hat.rowwise() = Eigen::RowVector3d(1.2, 1.0, 0.5);
  EXPECT_DOUBLE_EQ(eval::parameter_convergence(trace).settling_time,
                   trace.t[0]);

  sim::SimTrace bare = synthetic_trace(Eigen::MatrixXd::Zero(4, 1),
                                       Eigen::MatrixXd::Zero(4, 1));
  EXPECT_THROW(eval::parameter_convergence(bare), eval::EvalError);
}

TEST(Eval, ReportJsonIsDeterministicAndParses) {
  eval::EvalReport report;
  report.controller_id = "pd";
  report.trajectory_id = "test";
  report.seed = 7;
  Eigen::MatrixXd err(5, 1);
  err << 1e-3, 2e-3, 3e-3, 4e-3, 5e-3;
  const auto trace = synthetic_trace(err, err * 0.0);
  report.full = eval::tracking_error_stats(trace);
  report.low_velocity = eval::tracking_error_stats(trace);
  const std::string a = report.to_json_string();
  const std::string b = report.to_json_string();
  EXPECT_EQ(a, b);
  const auto parsed = nlohmann::json::parse(a);
  EXPECT_EQ(parsed.at("controller_id").get<std::string>(), "pd");
  EXPECT_EQ(parsed.at("seed").get<std::uint64_t>(), 7u);
  EXPECT_DOUBLE_EQ(
      parsed.at("full").at(0).at("median").get<double>(), 3e-3);
}

TEST(Eval, PlotsEmbedExactNumbersInDesc) {
  eval::EvalReport report;
  report.controller_id = "pd";
  report.trajectory_id = "test";
  Eigen::MatrixXd err(64, 1);
  for (int k = 0; k < 64; ++k) err(k, 0) = 1e-3 * (1.0 + std::sin(0.3 * k));
  auto trace = synthetic_trace(err, err * 0.0);
  report.full = eval::tracking_error_stats(trace);
  report.low_velocity = report.full;

  const auto dir = temp_dir();
  const auto written =
      eval::emit_plots(report, {&trace}, dir, "unit");
  ASSERT_FALSE(written.empty());
  bool found_box = false;
  for (const auto& path : written) {
    EXPECT_TRUE(fs::exists(path));
    std::ifstream in(path);
    const std::string svg((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    // Well-formed SVG with a machine-readable desc payload.
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    const auto open = svg.find("<desc>");
    const auto close = svg.find("</desc>");
    ASSERT_NE(open, std::string::npos) << path;
    ASSERT_NE(close, std::string::npos);
    const auto body = svg.substr(open + 6, close - open - 6);
    const auto desc = nlohmann::json::parse(body);
    if (path.filename().string().find("tracking_box") != std::string::npos) {
      found_box = true;
      EXPECT_DOUBLE_EQ(desc.at("full").at(0).at("median").get<double>(),
                       report.full.joints[0].median);
    }
  }
  EXPECT_TRUE(found_box);
}

TEST(Eval, ComparisonBoxListsEntriesInOrder) {
  Eigen::MatrixXd e1(5, 1), e2(5, 1);
  e1 << 1e-3, 2e-3, 3e-3, 4e-3, 5e-3;
  e2 << 2e-3, 4e-3, 6e-3, 8e-3, 10e-3;
  const auto s1 = eval::tracking_error_stats(synthetic_trace(e1, e1 * 0.0));
  const auto s2 = eval::tracking_error_stats(synthetic_trace(e2, e2 * 0.0));
  const auto out = temp_dir() / "compare.svg";
  eval::emit_comparison_box({{"first", s1}, {"second", s2}}, "unit", out);
  ASSERT_TRUE(fs::exists(out));
  std::ifstream in(out);
  const std::string svg((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  const auto p1 = svg.find("first");
  const auto p2 = svg.find("second");
  ASSERT_NE(p1, std::string::npos);
  ASSERT_NE(p2, std::string::npos);
  EXPECT_LT(p1, p2);
  const auto open = svg.find("<desc>");
  const auto close = svg.find("</desc>");
  ASSERT_NE(open, std::string::npos);
  const auto desc =
      nlohmann::json::parse(svg.substr(open + 6, close - open - 6));
  EXPECT_DOUBLE_EQ(desc.at("entries").at(0).at("stats").at(0).at("median")
                       .get<double>(),
                   3e-3);
}
