// Command-line front end: excitation generation, friction estimation,
// controller evaluation campaigns, and the two-link circle demo. Every
// command is a pure function of (config file, seed): artifacts depend only
// on those inputs, and a manifest of canonical content hashes is written so
// reruns can be compared byte-for-byte.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fricest/config.hpp"
#include "fricest/control.hpp"
#include "fricest/eval.hpp"
#include "fricest/excitation.hpp"
#include "fricest/io.hpp"
#include "fricest/simloop.hpp"
#include "fricest/svg.hpp"
#include "fricest/trace.hpp"
#include "fricest/trajectory.hpp"

namespace {

using fricest::config::ConfigError;
using fricest::config::ExperimentConfig;
using fricest::config::FrictionParamsFile;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitFile = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
  int workers = 0;  // 0 = hardware concurrency
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "experiment config file")
      ->required();
  cmd->add_option("--out", args->out_override,
                  "output directory (overrides config and FRICEST_OUT)");
  cmd->add_option("--seed", args->seed_override,
                  "seed override (replaces the config seed)");
  cmd->add_option("--workers", args->workers,
                  "parallel simulation workers (0 = auto)");
  cmd->add_flag("--verbose", args->verbose, "chatty progress output");
}

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = ExperimentConfig::load(args.config_path);
  if (args.seed_override.has_value()) cfg.seed = *args.seed_override;
  if (!args.out_override.empty()) {
    cfg.out_dir = args.out_override;
  } else if (const char* env = std::getenv("FRICEST_OUT");
             env != nullptr && *env != '\0') {
    cfg.out_dir = env;
  }
  std::filesystem::create_directories(cfg.out_dir);
  return cfg;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::filesystem::path>& files) {
  json manifest;
  manifest["command"] = command;
  manifest["config_hash"] = fricest::io::hash_hex(cfg.config_hash());
  json entries = json::object();
  for (const auto& p : files) {
    entries[p.filename().string()] =
        fricest::io::hash_hex(fricest::io::canonical_file_hash(p));
  }
  manifest["files"] = entries;
  fricest::io::atomic_write(cfg.out_dir / "manifest.json",
                            manifest.dump(2) + "\n");
}

// Deterministic per-task seed: depends only on the config seed and the task
// identity, never on scheduling.
std::uint64_t task_seed(const ExperimentConfig& cfg, const std::string& tag) {
  return fricest::io::fnv1a(tag, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
}

void run_parallel(std::vector<std::function<void()>> tasks, int workers) {
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) break;
        try {
          tasks[i]();
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void emit_history_svg(const fricest::excitation::ExcitationReport& report,
                      const std::filesystem::path& file) {
  fricest::svg::Document doc(560, 360);
  json d;
  d["initial_cond"] = report.initial_cond;
  d["final_cond"] = report.final_cond;
  d["history"] = report.history;
  doc.desc_json(d.dump());
  const auto n = report.history.size();
  double lo = report.final_cond, hi = report.initial_cond;
  for (double v : report.history) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;
  const double px0 = 70, px1 = 540, py0 = 40, py1 = 310;
  auto X = [&](double i) {
    return px0 + (n > 1 ? i / static_cast<double>(n - 1) : 0.5) * (px1 - px0);
  };
  auto Y = [&](double v) { return py1 - (v - lo) / (hi - lo) * (py1 - py0); };
  doc.line(px0, py1, px1, py1);
  doc.line(px0, py0, px0, py1);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "cond %.4g to %.4g", report.initial_cond,
                report.final_cond);
  doc.text(px0, 24, buf, "start", 13);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < n; ++i) {
    pts.emplace_back(X(static_cast<double>(i)), Y(report.history[i]));
  }
  if (!pts.empty()) doc.polyline(pts);
  doc.text((px0 + px1) / 2, py1 + 28, "accepted iteration", "middle", 11);
  doc.text(12, (py0 + py1) / 2, "cond", "middle", 11);
  doc.save(file);
}

// ---------------------------------------------------------------------------
// excite
// ---------------------------------------------------------------------------

int cmd_excite(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args);
  if (!cfg.excitation.has_value()) {
    throw ConfigError("config needs an 'excitation' section for excite");
  }
  const auto problem =
      cfg.excitation->to_problem(cfg.model, cfg.friction, cfg.seed);
  if (args.verbose) {
    std::cerr << "optimizing " << problem.n_vars() << " coefficients, "
              << problem.restarts << " starts x " << problem.max_iters
              << " iterations\n";
  }
  auto [traj, report] = fricest::excitation::optimize_excitation(problem);

  const auto traj_path = cfg.out_dir / "trajectory.json";
  const auto report_path = cfg.out_dir / "excitation_report.json";
  const auto svg_path = cfg.out_dir / "excitation_history.svg";
  fricest::io::atomic_write(traj_path, traj.to_json().dump(2) + "\n");
  fricest::io::atomic_write(report_path, report.to_json().dump(2) + "\n");
  emit_history_svg(report, svg_path);
  write_manifest(cfg, "excite", {traj_path, report_path, svg_path});
  std::cout << "condition number " << report.initial_cond << " -> "
            << report.final_cond << "\n"
            << "wrote " << traj_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

int cmd_estimate(const CommonArgs& args, const std::string& trajectory_path) {
  ExperimentConfig cfg = load_config(args);
  if (cfg.controllers.empty()) {
    throw ConfigError("config needs a 'controller' section for estimate");
  }
  const fricest::config::ControllerSpec& spec = cfg.controllers.front();
  if (spec.type != "adaptive") {
    throw ConfigError("estimate needs an adaptive controller");
  }

  fricest::config::TrajectorySpec tspec;
  tspec.type = "file";
  tspec.file = trajectory_path;
  auto traj = fricest::config::make_trajectory(tspec, cfg.model, cfg.seed);
  auto controller =
      fricest::config::make_controller(spec, cfg, std::nullopt, traj);

  fricest::sim::SimConfig sim_cfg = cfg.sim;
  sim_cfg.seed = cfg.seed;
  fricest::sim::SimTrace trace = fricest::sim::run_closed_loop(
      cfg.model, cfg.friction, *controller, *traj, sim_cfg);
  trace.meta.trajectory_id =
      std::filesystem::path(trajectory_path).stem().string();
  trace.meta.config_hash = cfg.config_hash();
  trace.meta.pairing_hash = cfg.pairing_hash();
  if (trace.meta.fault) {
    std::cerr << "run faulted at t = " << trace.meta.fault_time << " s\n";
    return kExitOther;
  }

  const auto convergence = fricest::eval::parameter_convergence(trace);
  const int n = cfg.model.n_joints();
  const int k = fricest::control::friction_param_count(
      spec.friction_model == "simplified"
          ? fricest::control::FrictionModelKind::Simplified
          : fricest::control::FrictionModelKind::Proposed);

  Eigen::VectorXd v_brk_true(n);
  for (int j = 0; j < n; ++j) {
    v_brk_true[j] = cfg.friction[static_cast<std::size_t>(j)].v_brk;
  }
  FrictionParamsFile params;
  params.pi_f = convergence.terminal;
  params.v_brk = fricest::sim::inject_mismatch(
      v_brk_true, cfg.sim.mismatch.v_brk_scale, cfg.sim.mismatch.seed + 1);
  params.param_count = k;
  params.friction_model = spec.friction_model;
  params.settling_time_s = convergence.settling_time;

  fricest::eval::EvalReport report;
  report.controller_id = trace.meta.controller_id;
  report.trajectory_id = trace.meta.trajectory_id;
  report.seed = cfg.seed;
  report.low_velocity_threshold = cfg.eval.low_velocity_threshold;
  report.full = fricest::eval::tracking_error_stats(trace);
  report.low_velocity = fricest::eval::tracking_error_stats(
      trace,
      fricest::eval::low_velocity_filter(trace,
                                         cfg.eval.low_velocity_threshold));
  report.convergence = convergence;
  if (spec.friction_model == "proposed") {
    // Simulation knows the true parameters; monitor the storage function.
    Eigen::VectorXd pi_f_true(3 * n);
    for (int j = 0; j < n; ++j) {
      pi_f_true.segment(3 * j, 3) =
          cfg.friction[static_cast<std::size_t>(j)].linear_params();
    }
    auto* adaptive =
        dynamic_cast<fricest::control::AdaptiveController*>(controller.get());
    if (adaptive != nullptr) {
      report.lyapunov = fricest::eval::lyapunov_series(
          trace, cfg.model, adaptive->gains(), pi_f_true);
    }
  }

  const auto csv_path = cfg.out_dir / "trace.csv";
  const auto journal_path = cfg.out_dir / "trace.frtj";
  const auto params_path = cfg.out_dir / "params.json";
  const auto report_path = cfg.out_dir / "report.json";
  trace.save_csv(csv_path);
  trace.save_journal(journal_path);
  params.save(params_path);
  fricest::io::atomic_write(report_path, report.to_json_string() + "\n");
  auto plots = fricest::eval::emit_plots(report, {&trace}, cfg.out_dir,
                                         "estimate");
  std::vector<std::filesystem::path> files = {csv_path, journal_path,
                                              params_path, report_path};
  files.insert(files.end(), plots.begin(), plots.end());
  write_manifest(cfg, "estimate", files);

  std::cout << "terminal friction parameters:";
  for (Eigen::Index i = 0; i < params.pi_f.size(); ++i) {
    std::cout << " " << params.pi_f[i];
  }
  std::cout << "\nsettling time " << params.settling_time_s << " s\n"
            << "wrote " << params_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct CampaignRun {
  std::string label;
  int traj_index = 0;
  std::uint64_t run_seed = 0;
  fricest::sim::SimTrace trace;
  fricest::eval::EvalReport report;
};

int cmd_evaluate(const CommonArgs& args, const std::string& params_path) {
  ExperimentConfig cfg = load_config(args);
  if (cfg.controllers.empty()) {
    throw ConfigError("config needs a 'controllers' list for evaluate");
  }
  std::optional<FrictionParamsFile> params;
  if (!params_path.empty()) params = FrictionParamsFile::load(params_path);

  // Shared trajectory set: one random Fourier trajectory per index, used by
  // every controller and seed (paired comparisons share the realization).
  std::vector<std::shared_ptr<const fricest::trajectory::Trajectory>> trajs;
  std::vector<std::string> traj_ids;
  for (int ti = 0; ti < cfg.eval.trajectories; ++ti) {
    fricest::config::TrajectorySpec tspec;
    if (cfg.trajectory.has_value()) tspec = *cfg.trajectory;
    const std::uint64_t tseed =
        task_seed(cfg, "trajectory-" + std::to_string(ti));
    if (!cfg.trajectory.has_value()) {
      tspec.type = "random_fourier";
      tspec.harmonics = cfg.eval.traj_harmonics;
      tspec.omega = cfg.eval.traj_omega;
      tspec.std_dev = cfg.eval.traj_std;
      tspec.duration = cfg.eval.traj_duration;
    }
    trajs.push_back(
        fricest::config::make_trajectory(tspec, cfg.model, tseed));
    traj_ids.push_back(tspec.type == "circle"
                           ? "circle"
                           : "fourier-" + std::to_string(ti));
  }

  std::vector<CampaignRun> runs;
  for (const auto& spec : cfg.controllers) {
    for (int ti = 0; ti < cfg.eval.trajectories; ++ti) {
      for (std::uint64_t s : cfg.eval.seeds) {
        CampaignRun r;
        r.label = spec.label;
        r.traj_index = ti;
        r.run_seed = s;
        runs.push_back(std::move(r));
      }
    }
  }

  std::vector<std::function<void()>> tasks;
  std::size_t idx = 0;
  for (const auto& spec : cfg.controllers) {
    for (int ti = 0; ti < cfg.eval.trajectories; ++ti) {
      for (std::uint64_t s : cfg.eval.seeds) {
        CampaignRun* slot = &runs[idx++];
        const auto traj = trajs[static_cast<std::size_t>(ti)];
        tasks.emplace_back([&cfg, &params, spec, ti, s, slot, traj] {
          auto controller =
              fricest::config::make_controller(spec, cfg, params, traj);
          fricest::sim::SimConfig sim_cfg = cfg.sim;
          sim_cfg.seed = task_seed(
              cfg, "run-" + std::to_string(ti) + "-" + std::to_string(s));
          fricest::sim::SimTrace trace = fricest::sim::run_closed_loop(
              cfg.model, cfg.friction, *controller, *traj, sim_cfg);
          trace.meta.trajectory_id =
              "fourier-" + std::to_string(ti) + "-s" + std::to_string(s);
          trace.meta.config_hash = cfg.config_hash();
          trace.meta.pairing_hash = fricest::io::fnv1a(
              trace.meta.trajectory_id, cfg.pairing_hash());

          fricest::eval::EvalReport rep;
          rep.controller_id = trace.meta.controller_id;
          rep.trajectory_id = trace.meta.trajectory_id;
          rep.seed = s;
          rep.low_velocity_threshold = cfg.eval.low_velocity_threshold;
          rep.full = fricest::eval::tracking_error_stats(trace);
          rep.low_velocity = fricest::eval::tracking_error_stats(
              trace, fricest::eval::low_velocity_filter(
                         trace, cfg.eval.low_velocity_threshold));
          if (trace.meta.has_adaptive) {
            rep.convergence = fricest::eval::parameter_convergence(trace);
          }
          slot->trace = std::move(trace);
          slot->report = std::move(rep);
        });
      }
    }
  }
  run_parallel(std::move(tasks), args.workers);

  std::vector<std::filesystem::path> files;
  for (const auto& r : runs) {
    if (r.trace.meta.fault) {
      std::cerr << "run " << r.label << " t" << r.traj_index << " s"
                << r.run_seed << " faulted at " << r.trace.meta.fault_time
                << " s\n";
      return kExitOther;
    }
    const std::string stem = r.label + "_t" + std::to_string(r.traj_index) +
                             "_s" + std::to_string(r.run_seed);
    const auto trace_path = cfg.out_dir / ("trace_" + stem + ".frtj");
    const auto report_path = cfg.out_dir / ("report_" + stem + ".json");
    r.trace.save_journal(trace_path);
    fricest::io::atomic_write(report_path, r.report.to_json_string() + "\n");
    files.push_back(trace_path);
    files.push_back(report_path);
  }

  // Per (trajectory, seed) comparison plot across controllers, plus pooled
  // per-controller medians.
  for (int ti = 0; ti < cfg.eval.trajectories; ++ti) {
    for (std::uint64_t s : cfg.eval.seeds) {
      std::vector<std::pair<std::string, fricest::eval::ErrorStats>> entries;
      for (const auto& r : runs) {
        if (r.traj_index == ti && r.run_seed == s) {
          entries.emplace_back(r.label, r.report.full);
        }
      }
      const auto path =
          cfg.out_dir / ("compare_t" + std::to_string(ti) + "_s" +
                         std::to_string(s) + ".svg");
      fricest::eval::emit_comparison_box(
          entries,
          "tracking error, trajectory " + std::to_string(ti) + ", seed " +
              std::to_string(s),
          path);
      files.push_back(path);
    }
  }

  json summary;
  summary["low_velocity_threshold"] = cfg.eval.low_velocity_threshold;
  json per_controller = json::object();
  for (const auto& spec : cfg.controllers) {
    std::vector<double> pooled, pooled_low;
    for (const auto& r : runs) {
      if (r.label != spec.label) continue;
      for (Eigen::Index k = 0; k < r.trace.ticks(); ++k) {
        for (int j = 0; j < r.trace.meta.n_joints; ++j) {
          pooled.push_back(std::abs(r.trace.q(k, j) - r.trace.q_des(k, j)));
          if (std::abs(r.trace.qd_des(k, j)) < cfg.eval.low_velocity_threshold) {
            pooled_low.push_back(
                std::abs(r.trace.q(k, j) - r.trace.q_des(k, j)));
          }
        }
      }
    }
    json c;
    c["median"] = pooled.empty()
                      ? json(nullptr)
                      : json(fricest::eval::quantile(pooled, 0.5));
    c["low_velocity_median"] =
        pooled_low.empty() ? json(nullptr)
                           : json(fricest::eval::quantile(pooled_low, 0.5));
    c["runs"] = static_cast<int>(cfg.eval.seeds.size()) *
                cfg.eval.trajectories;
    per_controller[spec.label] = c;
  }
  summary["controllers"] = per_controller;
  const auto summary_path = cfg.out_dir / "summary.json";
  fricest::io::atomic_write(summary_path, summary.dump(2) + "\n");
  files.push_back(summary_path);
  write_manifest(cfg, "evaluate", files);
  std::cout << "wrote " << files.size() << " artifacts to "
            << cfg.out_dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// demo-circle
// ---------------------------------------------------------------------------

int cmd_demo_circle(const CommonArgs& args, const std::string& params_path) {
  ExperimentConfig cfg = load_config(args);
  if (cfg.model.kind != fricest::dynamics::ModelKind::TwoLinkPlanar) {
    throw ConfigError("demo-circle needs the two-link model");
  }
  if (!cfg.trajectory.has_value() || cfg.trajectory->type != "circle") {
    throw ConfigError("demo-circle needs a circle trajectory section");
  }
  if (cfg.controllers.empty()) {
    throw ConfigError("demo-circle needs a 'controllers' list");
  }

  std::optional<FrictionParamsFile> params;
  if (!params_path.empty()) {
    params = FrictionParamsFile::load(params_path);
  } else {
    // Fall back to the exact linearized truth so the demo runs standalone.
    const int n = cfg.model.n_joints();
    FrictionParamsFile p;
    p.pi_f.resize(3 * n);
    p.v_brk.resize(n);
    for (int j = 0; j < n; ++j) {
      p.pi_f.segment(3 * j, 3) =
          cfg.friction[static_cast<std::size_t>(j)].linear_params();
      p.v_brk[j] = cfg.friction[static_cast<std::size_t>(j)].v_brk;
    }
    p.param_count = 3;
    params = p;
  }

  auto traj =
      fricest::config::make_trajectory(*cfg.trajectory, cfg.model, cfg.seed);
  const double l1 = cfg.model.links[0].length;
  const double l2 = cfg.model.links[1].length;

  std::vector<std::filesystem::path> files;
  std::vector<std::pair<std::string, fricest::eval::ErrorStats>> entries;
  std::vector<fricest::sim::SimTrace> traces;
  for (const auto& spec : cfg.controllers) {
    auto controller =
        fricest::config::make_controller(spec, cfg, params, traj);
    fricest::sim::SimConfig sim_cfg = cfg.sim;
    sim_cfg.seed = cfg.seed;
    fricest::sim::SimTrace trace = fricest::sim::run_closed_loop(
        cfg.model, cfg.friction, *controller, *traj, sim_cfg);
    trace.meta.trajectory_id = "circle";
    trace.meta.config_hash = cfg.config_hash();
    trace.meta.pairing_hash = cfg.pairing_hash();
    if (trace.meta.fault) {
      std::cerr << "run " << spec.label << " faulted at "
                << trace.meta.fault_time << " s\n";
      return kExitOther;
    }

    fricest::eval::EvalReport rep;
    rep.controller_id = spec.label;
    rep.trajectory_id = "circle";
    rep.seed = cfg.seed;
    rep.low_velocity_threshold = cfg.eval.low_velocity_threshold;
    rep.full = fricest::eval::tracking_error_stats(trace);
    rep.low_velocity = fricest::eval::tracking_error_stats(
        trace, fricest::eval::low_velocity_filter(
                   trace, cfg.eval.low_velocity_threshold));
    const auto report_path = cfg.out_dir / ("report_" + spec.label + ".json");
    fricest::io::atomic_write(report_path, rep.to_json_string() + "\n");
    const auto trace_path = cfg.out_dir / ("trace_" + spec.label + ".frtj");
    trace.save_journal(trace_path);
    files.push_back(report_path);
    files.push_back(trace_path);
    entries.emplace_back(spec.label, rep.full);
    traces.push_back(std::move(trace));
  }

  // Cartesian path plot: desired circle plus the simulated tool paths.
  {
    fricest::svg::Document doc(480, 480);
    json d;
    d["center"] = {cfg.trajectory->center[0], cfg.trajectory->center[1]};
    d["radius"] = cfg.trajectory->radius;
    json medians = json::object();
    for (const auto& [label, stats] : entries) {
      json per_joint = json::array();
      for (const auto& js : stats.joints) per_joint.push_back(js.median);
      medians[label] = per_joint;
    }
    d["median_error"] = medians;
    doc.desc_json(d.dump());

    const double reach = l1 + l2;
    auto X = [&](double x) { return 240.0 + 200.0 * x / reach; };
    auto Y = [&](double y) { return 240.0 - 200.0 * y / reach; };
    std::vector<std::pair<double, double>> desired;
    for (int i = 0; i <= 256; ++i) {
      const double ph = 2.0 * M_PI * i / 256.0;
      desired.emplace_back(
          X(cfg.trajectory->center[0] + cfg.trajectory->radius * std::cos(ph)),
          Y(cfg.trajectory->center[1] + cfg.trajectory->radius * std::sin(ph)));
    }
    doc.polyline(desired, "#999", 1.0);
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    for (std::size_t c = 0; c < traces.size(); ++c) {
      std::vector<std::pair<double, double>> pts;
      const auto& tr = traces[c];
      const Eigen::Index stride =
          std::max<Eigen::Index>(1, tr.ticks() / 2000);
      for (Eigen::Index k = 0; k < tr.ticks(); k += stride) {
        const Eigen::Vector2d p = fricest::trajectory::two_link_fk(
            l1, l2, tr.q.row(k).transpose());
        pts.emplace_back(X(p[0]), Y(p[1]));
      }
      doc.polyline(pts, palette[c % 4]);
      doc.text(16, 20 + 14 * static_cast<double>(c), entries[c].first,
               "start", 11, palette[c % 4]);
    }
    const auto path = cfg.out_dir / "circle_path.svg";
    doc.save(path);
    files.push_back(path);
  }
  const auto compare_path = cfg.out_dir / "compare_circle.svg";
  fricest::eval::emit_comparison_box(entries, "circle tracking error",
                                     compare_path);
  files.push_back(compare_path);
  write_manifest(cfg, "demo-circle", files);
  std::cout << "wrote " << files.size() << " artifacts to "
            << cfg.out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"friction estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs excite_args;
  CLI::App* excite = app.add_subcommand(
      "excite", "optimize an excitation trajectory");
  add_common(excite, &excite_args);

  CommonArgs estimate_args;
  std::string estimate_traj;
  CLI::App* estimate = app.add_subcommand(
      "estimate", "run adaptive friction estimation on a trajectory");
  add_common(estimate, &estimate_args);
  estimate->add_option("--trajectory", estimate_traj,
                       "trajectory file from the excite stage")
      ->required();

  CommonArgs evaluate_args;
  std::string evaluate_params;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "run a controller-comparison campaign");
  add_common(evaluate, &evaluate_args);
  evaluate->add_option("--params", evaluate_params,
                       "friction parameters from the estimate stage");

  CommonArgs circle_args;
  std::string circle_params;
  CLI::App* circle = app.add_subcommand(
      "demo-circle", "two-link circle-drawing comparison");
  add_common(circle, &circle_args);
  circle->add_option("--params", circle_params,
                     "friction parameters from the estimate stage");

  CLI11_PARSE(app, argc, argv);

  try {
    if (excite->parsed()) return cmd_excite(excite_args);
    if (estimate->parsed()) return cmd_estimate(estimate_args, estimate_traj);
    if (evaluate->parsed()) return cmd_evaluate(evaluate_args, evaluate_params);
    if (circle->parsed()) return cmd_demo_circle(circle_args, circle_params);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fricest::excitation::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const fricest::io::FileError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kExitFile;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
