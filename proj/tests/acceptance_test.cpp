// Acceptance gate: one test per criterion, each printing a single
// "[CRITERION k] PASS/FAIL — detail" line. Tolerances are pinned here and
// nowhere else. Criteria 4, 5 and 7 share one estimation pipeline run.

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>

#include "fricest/config.hpp"
#include "fricest/control.hpp"
#include "fricest/dynamics.hpp"
#include "fricest/eval.hpp"
#include "fricest/excitation.hpp"
#include "fricest/friction.hpp"
#include "fricest/rng.hpp"
#include "fricest/simloop.hpp"
#include "fricest/trajectory.hpp"

#ifndef FRICEST_CONFIG_DIR
#error "FRICEST_CONFIG_DIR must point at the bundled configs"
#endif
#ifndef FRICEST_CLI_PATH
#error "FRICEST_CLI_PATH must point at the CLI binary"
#endif

namespace {

using namespace fricest;

namespace fs = std::filesystem;

fs::path config_dir() { return fs::path(FRICEST_CONFIG_DIR); }

double now_s() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::ostringstream line;
  line << "[CRITERION " << criterion << "] " << (pass ? "PASS" : "FAIL")
       << " — " << detail;
  std::cout << line.str() << std::endl;
}

// Shared zero-mismatch estimation pipeline: optimize the bundled 1-DoF
// excitation, then run the bundled estimation config on it.
struct Pipeline {
  config::ExperimentConfig excite_cfg;
  config::ExperimentConfig estimate_cfg;
  std::shared_ptr<trajectory::FourierTrajectoryRef> traj;
  excitation::ExcitationReport excitation_report;
  sim::SimTrace trace;
  eval::ConvergenceSummary convergence;
  eval::LyapunovSeries lyapunov;
  Eigen::VectorXd pi_f_truth;
  config::FrictionParamsFile params;
  double excite_seconds = 0.0;
  double estimate_seconds = 0.0;
};

const Pipeline& pipeline() {
  static const Pipeline p = [] {
    Pipeline out;
    out.excite_cfg =
        config::ExperimentConfig::load(config_dir() / "excite_1dof.json");
    out.estimate_cfg =
        config::ExperimentConfig::load(config_dir() / "estimate_1dof.json");

    double t0 = now_s();
    const auto problem = out.excite_cfg.excitation->to_problem(
        out.excite_cfg.model, out.excite_cfg.friction, out.excite_cfg.seed);
    auto [traj, rep] = excitation::optimize_excitation(problem);
    out.excite_seconds = now_s() - t0;
    out.traj = std::make_shared<trajectory::FourierTrajectoryRef>(traj);
    out.excitation_report = rep;

    const auto& cfg = out.estimate_cfg;
    auto controller =
        config::make_controller(cfg.controllers.front(), cfg, std::nullopt,
                                out.traj);
    sim::SimConfig sim_cfg = cfg.sim;
    sim_cfg.seed = cfg.seed;
    t0 = now_s();
    out.trace = sim::run_closed_loop(cfg.model, cfg.friction, *controller,
                                     *out.traj, sim_cfg);
    out.estimate_seconds = now_s() - t0;
    out.trace.meta.trajectory_id = "optimized-excitation";

    out.convergence = eval::parameter_convergence(out.trace);
    out.pi_f_truth = cfg.friction.front().linear_params();
    auto* adaptive =
        dynamic_cast<control::AdaptiveController*>(controller.get());
    out.lyapunov = eval::lyapunov_series(out.trace, cfg.model,
                                         adaptive->gains(), out.pi_f_truth);

    out.params.pi_f = out.convergence.terminal;
    out.params.v_brk = Eigen::VectorXd::Constant(
        1, cfg.friction.front().v_brk);
    out.params.param_count = 3;
    out.params.friction_model = "proposed";
    out.params.settling_time_s = out.convergence.settling_time;
    return out;
  }();
  return p;
}

// Assembles a minimal experiment around the demo 1-DoF plant for the
// controller-comparison criteria.
config::ExperimentConfig one_dof_experiment() {
  config::ExperimentConfig cfg;
  cfg.model = dynamics::ManipulatorModel::one_dof(2.0, 0.5, 0.25, 0.05);
  friction::FrictionParams fp;
  fp.f_brk = 1.5;
  fp.f_c = 1.0;
  fp.f_vis = 0.5;
  fp.v_brk = 0.15;
  cfg.friction = {fp};
  return cfg;
}

// Median of |q - q_des| pooled over every tick and joint (optionally a
// low-velocity subset).
double pooled_abs_error_median(const std::vector<const sim::SimTrace*>& traces,
                               bool low_velocity_only, double threshold) {
  std::vector<double> pool;
  for (const auto* tr : traces) {
    for (Eigen::Index k = 0; k < tr->ticks(); ++k) {
      for (int j = 0; j < tr->meta.n_joints; ++j) {
        if (low_velocity_only && std::abs(tr->qd_des(k, j)) >= threshold) {
          continue;
        }
        pool.push_back(std::abs(tr->q(k, j) - tr->q_des(k, j)));
      }
    }
  }
  return eval::quantile(pool, 0.5);
}

double median_of(std::vector<double> v) { return eval::quantile(v, 0.5); }

}  // namespace

// ---------------------------------------------------------------------------
// 1. Rigid-body regressor identity on both models.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion1RegressorIdentity) {
  const double t0 = now_s();
  const std::vector<dynamics::ManipulatorModel> models = {
      dynamics::ManipulatorModel::one_dof(2.0, 0.5, 0.25, 0.05),
      dynamics::ManipulatorModel::two_link({2.0, 0.5, 0.25, 0.02},
                                           {1.5, 0.4, 0.2, 0.01})};
  std::mt19937_64 rng(12345);
  double worst = 0.0;
  for (const auto& model : models) {
    const int n = model.n_joints();
    const Eigen::VectorXd pi = model.base_params();
    for (int i = 0; i < 10000; ++i) {
      Eigen::VectorXd q(n), qd(n), qdd(n);
      for (int j = 0; j < n; ++j) {
        q[j] = model.q_min[j] +
               rng::uniform01(rng) * (model.q_max[j] - model.q_min[j]);
        qd[j] = model.qd_min[j] +
                rng::uniform01(rng) * (model.qd_max[j] - model.qd_min[j]);
        qdd[j] = 10.0 * rng::uniform_pm1(rng);
      }
      const Eigen::VectorXd lhs =
          dynamics::rigid_body_regressor(model, q, qd, qdd) * pi;
      const Eigen::VectorXd rhs =
          dynamics::mass_matrix_raw(model, q) * qdd +
          dynamics::bias_forces_raw(model, q, qd);
      const double rel =
          (lhs - rhs).norm() / std::max(rhs.norm(), 1e-3);
      worst = std::max(worst, rel);
    }
  }
  const double elapsed = now_s() - t0;
  const bool pass = worst < 1e-10 && elapsed < 5.0;
  std::ostringstream d;
  d << "max relative residual " << worst << " over 2x10^4 states in "
    << elapsed << " s (tol 1e-10, budget 5 s)";
  report(1, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 2. Friction linearization equals a long-double scalar oracle.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion2FrictionLinearization) {
  const double t0 = now_s();
  std::mt19937_64 rng(777);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    friction::FrictionParams p;
    p.f_c = 0.1 + 1.9 * rng::uniform01(rng);
    p.f_brk = p.f_c + 2.0 * rng::uniform01(rng);
    p.f_vis = rng::uniform01(rng);
    p.v_brk = 0.02 + 0.48 * rng::uniform01(rng);
    const double v = 5.0 * rng::uniform_pm1(rng);

    // Independent oracle in extended precision.
    const long double v_st = static_cast<long double>(p.v_brk) * sqrtl(2.0L);
    const long double v_coul = static_cast<long double>(p.v_brk) / 10.0L;
    const long double oracle =
        sqrtl(2.0L * expl(1.0L)) * (p.f_brk - p.f_c) *
            expl(-fabsl(static_cast<long double>(v)) / v_st) * (v / v_st) +
        p.f_c * tanhl(static_cast<long double>(v) / v_coul) + p.f_vis * v;

    const double linearized =
        friction::friction_regressor(v, p.v_st(), p.v_coul())
            .dot(p.linear_params());
    const double direct = friction::stribeck_torque(p, v);
    worst = std::max(worst,
                     std::fabs(linearized - static_cast<double>(oracle)));
    worst = std::max(worst, std::fabs(direct - static_cast<double>(oracle)));
  }
  const double elapsed = now_s() - t0;
  const bool pass = worst < 1e-12 && elapsed < 1.0;
  std::ostringstream d;
  d << "max |linearized - oracle| " << worst << " over 10^4 draws in "
    << elapsed << " s (tol 1e-12, budget 1 s)";
  report(2, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 3. Excitation optimization halves the condition number (median, 10 seeds).
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion3ExcitationEffect) {
  const double t0 = now_s();
  bool pass = true;
  std::ostringstream d;
  for (const char* name : {"excite_1dof.json", "excite_2dof.json"}) {
    auto cfg = config::ExperimentConfig::load(config_dir() / name);
    ASSERT_TRUE(cfg.excitation.has_value());
    ASSERT_DOUBLE_EQ(cfg.excitation->init_std, 0.05);
    std::vector<double> initial, final_;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto problem =
          cfg.excitation->to_problem(cfg.model, cfg.friction, seed);
      const auto [traj, rep] = excitation::optimize_excitation(problem);
      (void)traj;
      initial.push_back(rep.initial_cond);
      final_.push_back(rep.final_cond);
      pass = pass && rep.final_cond <= rep.initial_cond;
    }
    const double med_i = median_of(initial);
    const double med_f = median_of(final_);
    pass = pass && med_f <= 0.5 * med_i;
    d << name << ": median cond " << med_i << " -> " << med_f << "; ";
  }
  const double elapsed = now_s() - t0;
  pass = pass && elapsed < 300.0;
  d << "elapsed " << elapsed << " s (budget 300 s)";
  report(3, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 4. Zero-mismatch estimation recovers the friction parameters.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion4ParameterConvergence) {
  const Pipeline& p = pipeline();
  ASSERT_FALSE(p.trace.meta.fault);
  bool pass = true;
  std::ostringstream d;
  d << "terminal [";
  for (int i = 0; i < 3; ++i) {
    const double rel = std::fabs(p.convergence.terminal[i] - p.pi_f_truth[i]) /
                       std::fabs(p.pi_f_truth[i]);
    pass = pass && rel <= 0.05;
    d << p.convergence.terminal[i] << (i < 2 ? " " : "");
  }
  d << "] vs truth [" << p.pi_f_truth.transpose() << "], settling "
    << p.convergence.settling_time << " s (band 5%, budget 60 s), sim+opt "
    << p.excite_seconds + p.estimate_seconds << " s (budget 120 s)";
  pass = pass && p.convergence.settling_time >= 0.0 &&
         p.convergence.settling_time <= 60.0 &&
         p.excite_seconds + p.estimate_seconds < 120.0;
  report(4, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 5. Lyapunov-style storage function descends (no increment > 1e-6 * max V).
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion5LyapunovDescent) {
  const Pipeline& p = pipeline();
  const double max_v = p.lyapunov.V.maxCoeff();
  const double tol = 1e-6 * max_v;
  const bool pass = p.lyapunov.max_increment <= tol;
  std::ostringstream d;
  d << "max increment " << p.lyapunov.max_increment << " vs tolerance " << tol
    << " (1e-6 x max V1 = 1e-6 x " << max_v << ")";
  report(5, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 6. Backstepping removes constant-disturbance bias from s.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion6BacksteppingBias) {
  const Pipeline& p = pipeline();
  config::ExperimentConfig cfg = one_dof_experiment();
  cfg.sim.plant_dt = 0.00025;
  cfg.sim.control_dt = 0.001;
  cfg.sim.duration = 40.0;
  cfg.sim.disturbance.constant = Eigen::VectorXd::Constant(1, 1.0);
  const friction::FrictionParams& fp = cfg.friction.front();

  // Exact model knowledge with (numerically) frozen adaptation isolates the
  // integrator state: the only difference between the arms is epsilon.
  control::Gains gains = control::Gains::critically_damped(
      config::inertia_estimate(cfg.model), 10.0);
  gains.Gamma_f = Eigen::VectorXd::Constant(3, 1e-9);
  gains.Gamma_e = Eigen::VectorXd::Constant(1, 0.5);

  double mean_abs[2] = {0.0, 0.0};
  for (int variant = 0; variant < 2; ++variant) {
    control::AdaptiveController::Options opt;
    opt.gains = gains;
    opt.model = cfg.model;
    opt.pi_hat = cfg.model.base_params();
    opt.scales = friction::RegressorScales::from_breakaway(
        Eigen::VectorXd::Constant(1, fp.v_brk));
    opt.kind = control::FrictionModelKind::Proposed;
    opt.backstepping = variant == 0;
    opt.pi_f_init = fp.linear_params();
    opt.label = opt.backstepping ? "with" : "without";
    control::AdaptiveController controller(opt);
    sim::SimConfig sim_cfg = cfg.sim;
    sim_cfg.seed = 1;
    const sim::SimTrace tr = sim::run_closed_loop(
        cfg.model, cfg.friction, controller, *p.traj, sim_cfg);
    ASSERT_FALSE(tr.meta.fault);
    const Eigen::Index k0 = (tr.ticks() * 4) / 5;
    mean_abs[variant] =
        std::fabs(tr.s.col(0).segment(k0, tr.ticks() - k0).mean());
  }
  const bool pass = mean_abs[0] < 0.1 * mean_abs[1];
  std::ostringstream d;
  d << "|mean s| over final 20%: backstepping " << mean_abs[0]
    << " vs without " << mean_abs[1] << " (need < 10%)";
  report(6, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 7. Estimated-model feedforward halves the PD tracking error.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion7TrackingImprovement) {
  const Pipeline& p = pipeline();
  config::ExperimentConfig cfg = one_dof_experiment();
  cfg.sim.plant_dt = 0.00025;
  cfg.sim.control_dt = 0.001;
  cfg.sim.duration = 20.0;
  cfg.sim.noise.q_std = 1e-5;
  cfg.sim.noise.qd_std = 1e-4;

  std::vector<sim::SimTrace> pd_traces, ff_traces;
  for (int ti = 0; ti < 3; ++ti) {
    const auto traj = std::make_shared<trajectory::FourierTrajectoryRef>(
        trajectory::sample_random_fourier(1, 5, 2.0 * M_PI * 0.1, 0.05,
                                          100 + ti, 20.0));
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      for (int variant = 0; variant < 2; ++variant) {
        config::ControllerSpec spec;
        spec.type = variant == 0 ? "pd" : "pd_friction";
        spec.label = spec.type;
        spec.bandwidth = 10.0;
        auto controller = config::make_controller(
            spec, cfg,
            variant == 0 ? std::nullopt
                         : std::make_optional(p.params));
        sim::SimConfig sim_cfg = cfg.sim;
        sim_cfg.seed = seed;
        sim::SimTrace tr = sim::run_closed_loop(cfg.model, cfg.friction,
                                                *controller, *traj, sim_cfg);
        ASSERT_FALSE(tr.meta.fault);
        (variant == 0 ? pd_traces : ff_traces).push_back(std::move(tr));
      }
    }
  }
  auto ptrs = [](const std::vector<sim::SimTrace>& v) {
    std::vector<const sim::SimTrace*> out;
    for (const auto& t : v) out.push_back(&t);
    return out;
  };
  const double pd_full = pooled_abs_error_median(ptrs(pd_traces), false, 0.0);
  const double ff_full = pooled_abs_error_median(ptrs(ff_traces), false, 0.0);
  const double pd_low =
      pooled_abs_error_median(ptrs(pd_traces), true, 0.01);
  const double ff_low =
      pooled_abs_error_median(ptrs(ff_traces), true, 0.01);
  const bool pass = ff_full < 0.5 * pd_full && ff_low < 0.5 * pd_low;
  std::ostringstream d;
  d << "median |err|: full " << ff_full << " vs PD " << pd_full
    << ", low-velocity " << ff_low << " vs " << pd_low
    << " (need < 50% on both)";
  report(7, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 8. Full friction model beats the simplified one at low velocity.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion8SimplifiedModelGap) {
  config::ExperimentConfig cfg = one_dof_experiment();
  cfg.friction.front().f_brk = 2.0;  // pronounced breakaway: f_brk = 2 f_c
  cfg.sim.plant_dt = 0.00025;
  cfg.sim.control_dt = 0.001;
  cfg.sim.duration = 20.0;
  const friction::FrictionParams& fp = cfg.friction.front();

  config::FrictionParamsFile proposed;
  proposed.pi_f = fp.linear_params();
  proposed.v_brk = Eigen::VectorXd::Constant(1, fp.v_brk);
  proposed.param_count = 3;
  proposed.friction_model = "proposed";

  config::FrictionParamsFile simplified;
  simplified.pi_f = Eigen::Vector2d(fp.f_c, fp.f_vis);
  simplified.v_brk = Eigen::VectorXd::Constant(1, fp.v_brk);
  simplified.param_count = 2;
  simplified.friction_model = "simplified";

  std::vector<sim::SimTrace> traces[3];
  for (int ti = 0; ti < 3; ++ti) {
    const auto traj = std::make_shared<trajectory::FourierTrajectoryRef>(
        trajectory::sample_random_fourier(1, 5, 2.0 * M_PI * 0.1, 0.05,
                                          200 + ti, 20.0));
    for (int variant = 0; variant < 3; ++variant) {
      config::ControllerSpec spec;
      spec.type = variant == 2 ? "pd" : "pd_friction";
      spec.label = variant == 0 ? "proposed"
                                : (variant == 1 ? "simplified" : "none");
      spec.bandwidth = 10.0;
      std::optional<config::FrictionParamsFile> params;
      if (variant == 0) params = proposed;
      if (variant == 1) params = simplified;
      auto controller = config::make_controller(spec, cfg, params);
      sim::SimConfig sim_cfg = cfg.sim;
      sim_cfg.seed = 1;
      sim::SimTrace tr = sim::run_closed_loop(cfg.model, cfg.friction,
                                              *controller, *traj, sim_cfg);
      ASSERT_FALSE(tr.meta.fault);
      traces[variant].push_back(std::move(tr));
    }
  }
  double low[3];
  for (int variant = 0; variant < 3; ++variant) {
    std::vector<const sim::SimTrace*> ptrs;
    for (const auto& t : traces[variant]) ptrs.push_back(&t);
    low[variant] = pooled_abs_error_median(ptrs, true, 0.01);
  }
  const bool pass = low[0] < low[1] && low[1] < low[2];
  std::ostringstream d;
  d << "low-velocity median |err|: proposed " << low[0] << " < simplified "
    << low[1] << " < none " << low[2];
  report(8, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 9. Friction feedforward shrinks the ESO total-disturbance estimate.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion9EsoDisturbanceReduction) {
  config::ExperimentConfig cfg = one_dof_experiment();
  cfg.sim.plant_dt = 0.00025;
  cfg.sim.control_dt = 0.001;
  cfg.sim.duration = 20.0;
  const friction::FrictionParams& fp = cfg.friction.front();

  config::FrictionParamsFile exact;
  exact.pi_f = fp.linear_params();
  exact.v_brk = Eigen::VectorXd::Constant(1, fp.v_brk);
  exact.param_count = 3;
  exact.friction_model = "proposed";

  const auto traj = std::make_shared<trajectory::FourierTrajectoryRef>(
      trajectory::sample_random_fourier(1, 5, 2.0 * M_PI * 0.1, 0.05, 300,
                                        20.0));
  sim::SimTrace with, without;
  for (int variant = 0; variant < 2; ++variant) {
    config::ControllerSpec spec;
    spec.type = variant == 0 ? "adrc_friction" : "adrc";
    spec.label = spec.type;
    spec.adrc_bandwidth = 10.0;
    spec.omega_o = 100.0;
    auto controller = config::make_controller(
        spec, cfg,
        variant == 0 ? std::make_optional(exact) : std::nullopt);
    sim::SimConfig sim_cfg = cfg.sim;
    sim_cfg.seed = 1;
    sim::SimTrace tr = sim::run_closed_loop(cfg.model, cfg.friction,
                                            *controller, *traj, sim_cfg);
    ASSERT_FALSE(tr.meta.fault);
    tr.meta.trajectory_id = "paired";
    tr.meta.pairing_hash = 42;
    tr.meta.seed = 1;
    (variant == 0 ? with : without) = std::move(tr);
  }
  const auto cmp = eval::disturbance_comparison(with, without);
  const bool pass = !cmp.degenerate && cmp.ratio < 0.2;
  std::ostringstream d;
  d << "mean |z3| with feedforward " << cmp.mean_with << " vs without "
    << cmp.mean_without << ", ratio " << cmp.ratio << " (need < 0.2)";
  report(9, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 10. ISS trend under rigid-body mismatch; backstepping dominates.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion10IssTrend) {
  config::ExperimentConfig cfg = one_dof_experiment();
  cfg.sim.plant_dt = 0.00025;
  cfg.sim.control_dt = 0.001;
  cfg.sim.duration = 30.0;
  const friction::FrictionParams& fp = cfg.friction.front();

  // Reference biased away from the vertical: the gravity share of the rigid
  // mismatch then has a nonzero time-mean, which is what the integrator
  // variant is supposed to absorb.
  trajectory::FourierTrajectory ft =
      trajectory::sample_random_fourier(1, 5, 2.0 * M_PI * 0.1, 0.05, 900,
                                        30.0);
  ft.offset = Eigen::VectorXd::Constant(1, 0.8);
  const trajectory::FourierTrajectoryRef traj(ft);

  control::Gains gains = control::Gains::critically_damped(
      config::inertia_estimate(cfg.model), 10.0);
  gains.Gamma_f = Eigen::VectorXd::Constant(3, 1e-9);
  gains.Gamma_e = Eigen::VectorXd::Constant(1, 0.5);

  const double deltas[3] = {0.01, 0.05, 0.10};
  double ss[2][3];
  for (int variant = 0; variant < 2; ++variant) {
    for (int di = 0; di < 3; ++di) {
      control::AdaptiveController::Options opt;
      opt.gains = gains;
      opt.model = cfg.model;
      opt.pi_hat =
          sim::inject_mismatch(cfg.model.base_params(), deltas[di], 77);
      opt.scales = friction::RegressorScales::from_breakaway(
          Eigen::VectorXd::Constant(1, fp.v_brk));
      opt.kind = control::FrictionModelKind::Proposed;
      opt.backstepping = variant == 0;
      opt.pi_f_init = fp.linear_params();
      opt.label = opt.backstepping ? "bs" : "nobs";
      control::AdaptiveController controller(opt);
      sim::SimConfig sim_cfg = cfg.sim;
      sim_cfg.seed = 1;
      const sim::SimTrace tr = sim::run_closed_loop(
          cfg.model, cfg.friction, controller, traj, sim_cfg);
      ASSERT_FALSE(tr.meta.fault);
      const Eigen::Index k0 = (tr.ticks() * 4) / 5;
      ss[variant][di] = std::sqrt(
          tr.s.col(0).segment(k0, tr.ticks() - k0).squaredNorm() /
          static_cast<double>(tr.ticks() - k0));
    }
  }
  bool pass = true;
  for (int variant = 0; variant < 2; ++variant) {
    pass = pass && ss[variant][0] <= ss[variant][1] &&
           ss[variant][1] <= ss[variant][2];
  }
  for (int di = 0; di < 3; ++di) pass = pass && ss[0][di] <= ss[1][di];
  std::ostringstream d;
  d << "steady-state ||s|| backstepping [" << ss[0][0] << " " << ss[0][1]
    << " " << ss[0][2] << "] vs without [" << ss[1][0] << " " << ss[1][1]
    << " " << ss[1][2] << "] over delta {1%,5%,10%}";
  report(10, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 11. Analytic condition-number gradient matches central differences.
// ---------------------------------------------------------------------------
TEST(Acceptance, Criterion11GradientCheck) {
  excitation::ExcitationProblem problem;
  problem.model = dynamics::ManipulatorModel::one_dof(2.0, 0.5, 0.25, 0.05);
  problem.v_brk = Eigen::VectorXd::Constant(1, 0.15);
  problem.regressor = excitation::RegressorKind::Combined;
  problem.harmonics = 3;
  problem.omega = 2.0 * M_PI * 0.1;
  problem.duration = 10.0;
  problem.grid_dt = 0.05;
  problem.offset = Eigen::VectorXd::Zero(1);
  problem.fixed = {false};
  problem.fixed_pos = Eigen::VectorXd::Zero(1);
  problem.validate();

  std::mt19937_64 rng(4242);
  rng::NormalSampler normal(999);
  int checked = 0, attempts = 0;
  double worst = 0.0;
  while (checked < 20 && attempts < 200) {
    ++attempts;
    Eigen::VectorXd x(problem.n_vars());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = 0.05 * normal.next();
    const auto eval = excitation::condition_value_and_gradient(problem, x);
    if (eval.fd_fallback || !std::isfinite(eval.cond)) continue;

    Eigen::VectorXd fd(x.size());
    bool finite = true;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-5 * std::max(1.0, std::fabs(x[i]));
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double cp = excitation::condition_number(
          excitation::stacked_regressor(problem, xp));
      const double cm = excitation::condition_number(
          excitation::stacked_regressor(problem, xm));
      if (!std::isfinite(cp) || !std::isfinite(cm)) {
        finite = false;
        break;
      }
      fd[i] = (cp - cm) / (2.0 * h);
    }
    if (!finite) continue;
    ++checked;
    worst = std::max(worst, (eval.grad - fd).norm() / fd.norm());
  }
  const bool pass = checked == 20 && worst < 1e-4;
  std::ostringstream d;
  d << "max relative gradient error " << worst << " over " << checked
    << " non-degenerate points (tol 1e-4)";
  report(11, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}

// ---------------------------------------------------------------------------
// 12. CLI determinism: rerun => byte-identical hashed outputs.
// ---------------------------------------------------------------------------
namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(FRICEST_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Acceptance, Criterion12CliDeterminism) {
  const fs::path root =
      fs::temp_directory_path() /
      ("fricest-accept-" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  bool pass = true;
  std::ostringstream d;
  const auto cfg = [&](const char* name) {
    return (config_dir() / name).string();
  };
  const auto out = [&](const std::string& tag) {
    return (root / tag).string();
  };

  // excite twice
  for (int r = 1; r <= 2; ++r) {
    pass = pass && run_cli("excite --config " + cfg("ci_excite.json") +
                           " --out " + out("excite" + std::to_string(r))) == 0;
  }
  // estimate twice (consumes run 1's trajectory)
  const std::string traj = out("excite1") + "/trajectory.json";
  for (int r = 1; r <= 2; ++r) {
    pass = pass &&
           run_cli("estimate --config " + cfg("ci_estimate.json") +
                   " --trajectory " + traj + " --out " +
                   out("estimate" + std::to_string(r))) == 0;
  }
  // evaluate twice (consumes run 1's parameters)
  const std::string params = out("estimate1") + "/params.json";
  for (int r = 1; r <= 2; ++r) {
    pass = pass &&
           run_cli("evaluate --config " + cfg("ci_evaluate.json") +
                   " --params " + params + " --out " +
                   out("evaluate" + std::to_string(r))) == 0;
  }
  // demo-circle twice (exact-truth fallback parameters)
  for (int r = 1; r <= 2; ++r) {
    pass = pass && run_cli("demo-circle --config " + cfg("ci_circle.json") +
                           " --out " + out("circle" + std::to_string(r))) == 0;
  }
  if (!pass) d << "a CLI invocation failed; ";

  for (const char* stage : {"excite", "estimate", "evaluate", "circle"}) {
    const std::string m1 = slurp(root / (std::string(stage) + "1") /
                                 "manifest.json");
    const std::string m2 = slurp(root / (std::string(stage) + "2") /
                                 "manifest.json");
    const bool same = !m1.empty() && m1 == m2;
    pass = pass && same;
    d << stage << (same ? " identical; " : " DIFFERS; ");
  }
  // Spot-check raw artifact bytes, not just hashes.
  pass = pass && slurp(root / "excite1" / "trajectory.json") ==
                     slurp(root / "excite2" / "trajectory.json");
  pass = pass && slurp(root / "estimate1" / "params.json") ==
                     slurp(root / "estimate2" / "params.json");

  fs::remove_all(root);
  report(12, pass, d.str());
  EXPECT_TRUE(pass) << d.str();
}
