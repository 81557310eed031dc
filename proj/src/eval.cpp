#include "fricest/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "fricest/io.hpp"
#include "fricest/svg.hpp"

namespace fricest::eval {

namespace {

using nlohmann::json;

JointStats stats_of(std::vector<double> vals) {
  JointStats st;
  st.count = static_cast<Eigen::Index>(vals.size());
  if (vals.empty()) {
    st.absent = true;
    return st;
  }
  std::sort(vals.begin(), vals.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(vals.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= vals.size()) return vals.back();
    return vals[lo] + frac * (vals[lo + 1] - vals[lo]);
  };
  st.min = vals.front();
  st.max = vals.back();
  st.q25 = q(0.25);
  st.median = q(0.5);
  st.q75 = q(0.75);
  st.iqr = st.q75 - st.q25;
  double sum = 0.0, sq = 0.0;
  for (double v : vals) {
    sum += v;
    sq += v * v;
  }
  st.mean = sum / static_cast<double>(vals.size());
  st.rms = std::sqrt(sq / static_cast<double>(vals.size()));
  return st;
}

json stats_json(const ErrorStats& stats) {
  json arr = json::array();
  for (const auto& j : stats.joints) {
    json o;
    o["count"] = j.count;
    o["absent"] = j.absent;
    if (j.absent) {
      for (const char* k :
           {"median", "iqr", "q25", "q75", "min", "max", "mean", "rms"}) {
        o[k] = nullptr;
      }
    } else {
      o["median"] = j.median;
      o["iqr"] = j.iqr;
      o["q25"] = j.q25;
      o["q75"] = j.q75;
      o["min"] = j.min;
      o["max"] = j.max;
      o["mean"] = j.mean;
      o["rms"] = j.rms;
    }
    arr.push_back(o);
  }
  return arr;
}

// Linear data->pixel mapping for one plot frame.
struct Frame {
  double x0, x1, y0, y1;      // data range
  double px0, px1, py0, py1;  // pixel range (py0 is the TOP edge)

  double X(double x) const {
    return px0 + (x - x0) / (x1 - x0 + (x1 == x0 ? 1.0 : 0.0)) * (px1 - px0);
  }
  double Y(double y) const {
    return py1 - (y - y0) / (y1 - y0 + (y1 == y0 ? 1.0 : 0.0)) * (py1 - py0);
  }
};

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

void draw_axes(svg::Document& doc, const Frame& f, const std::string& xlabel,
               const std::string& ylabel) {
  doc.line(f.px0, f.py1, f.px1, f.py1);  // x axis
  doc.line(f.px0, f.py0, f.px0, f.py1);  // y axis
  for (int i = 0; i <= 4; ++i) {
    const double fx = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double fy = f.y0 + (f.y1 - f.y0) * i / 4.0;
    doc.line(f.X(fx), f.py1, f.X(fx), f.py1 + 4);
    doc.text(f.X(fx), f.py1 + 16, label(fx), "middle", 10);
    doc.line(f.px0 - 4, f.Y(fy), f.px0, f.Y(fy));
    doc.text(f.px0 - 6, f.Y(fy) + 3, label(fy), "end", 10);
  }
  doc.text((f.px0 + f.px1) / 2, f.py1 + 32, xlabel, "middle", 11);
  doc.text(12, (f.py0 + f.py1) / 2, ylabel, "middle", 11);
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::vector<std::pair<double, double>> sampled_curve(
    const Frame& f, const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
  std::vector<std::pair<double, double>> pts;
  const Eigen::Index n = t.size();
  const Eigen::Index stride = std::max<Eigen::Index>(1, n / 2000);
  for (Eigen::Index i = 0; i < n; i += stride) {
    pts.emplace_back(f.X(t[i]), f.Y(y[i]));
  }
  if (n > 0 && (n - 1) % stride != 0) {
    pts.emplace_back(f.X(t[n - 1]), f.Y(y[n - 1]));
  }
  return pts;
}

void draw_box(svg::Document& doc, const Frame& f, double cx,
              const JointStats& st, const std::string& color) {
  const double half = 11.0;
  doc.line(cx, f.Y(st.min), cx, f.Y(st.q25), color);
  doc.line(cx, f.Y(st.q75), cx, f.Y(st.max), color);
  doc.line(cx - half / 2, f.Y(st.min), cx + half / 2, f.Y(st.min), color);
  doc.line(cx - half / 2, f.Y(st.max), cx + half / 2, f.Y(st.max), color);
  doc.rect(cx - half, f.Y(st.q75), 2 * half, f.Y(st.q25) - f.Y(st.q75),
           "none", color);
  doc.line(cx - half, f.Y(st.median), cx + half, f.Y(st.median), "#ff7f0e",
           2.0);
}

}  // namespace

TraceSubset TraceSubset::full(const sim::SimTrace& trace) {
  TraceSubset out;
  out.idx.resize(static_cast<std::size_t>(trace.meta.n_joints));
  for (auto& v : out.idx) {
    v.resize(static_cast<std::size_t>(trace.ticks()));
    for (Eigen::Index k = 0; k < trace.ticks(); ++k) {
      v[static_cast<std::size_t>(k)] = k;
    }
  }
  return out;
}

double quantile(std::vector<double> samples, double p) {
  if (samples.empty()) throw std::domain_error("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("p outside [0, 1]");
  std::sort(samples.begin(), samples.end());
  const double pos = p * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= samples.size()) return samples.back();
  return samples[lo] + frac * (samples[lo + 1] - samples[lo]);
}

ErrorStats tracking_error_stats(const sim::SimTrace& trace) {
  if (trace.ticks() == 0) throw EvalError("empty trace");
  return tracking_error_stats(trace, TraceSubset::full(trace));
}

ErrorStats tracking_error_stats(const sim::SimTrace& trace,
                                const TraceSubset& subset) {
  const int n = trace.meta.n_joints;
  if (static_cast<int>(subset.idx.size()) != n) {
    throw EvalError("subset joint count disagrees with the trace");
  }
  ErrorStats out;
  out.joints.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    std::vector<double> vals;
    vals.reserve(subset.idx[static_cast<std::size_t>(j)].size());
    for (Eigen::Index k : subset.idx[static_cast<std::size_t>(j)]) {
      if (k < 0 || k >= trace.ticks()) {
        throw EvalError("subset index outside the trace");
      }
      vals.push_back(std::abs(trace.q(k, j) - trace.q_des(k, j)));
    }
    out.joints[static_cast<std::size_t>(j)] = stats_of(std::move(vals));
  }
  return out;
}

TraceSubset low_velocity_filter(const sim::SimTrace& trace, double threshold) {
  if (!(threshold > 0.0)) throw std::domain_error("threshold must be positive");
  TraceSubset out;
  out.idx.resize(static_cast<std::size_t>(trace.meta.n_joints));
  for (int j = 0; j < trace.meta.n_joints; ++j) {
    for (Eigen::Index k = 0; k < trace.ticks(); ++k) {
      if (std::abs(trace.qd_des(k, j)) < threshold) {
        out.idx[static_cast<std::size_t>(j)].push_back(k);
      }
    }
  }
  return out;
}

LyapunovSeries lyapunov_series(const sim::SimTrace& trace,
                               const dynamics::ManipulatorModel& model,
                               const control::Gains& gains,
                               const Eigen::VectorXd& pi_f_true) {
  if (!trace.meta.has_s || !trace.meta.has_adaptive) {
    throw EvalError("trace lacks the s / adaptive streams");
  }
  const int n = trace.meta.n_joints;
  const Eigen::Index width = trace.pi_f_hat.cols();
  if (pi_f_true.size() != width) {
    throw EvalError("pi_f_true width disagrees with the trace");
  }
  if (gains.Gamma_f.size() != width || gains.Gamma_e.size() != n) {
    throw EvalError("gain widths disagree with the trace");
  }
  LyapunovSeries out;
  out.t = trace.t;
  out.V.resize(trace.ticks());
  for (Eigen::Index k = 0; k < trace.ticks(); ++k) {
    const Eigen::VectorXd qk = trace.q.row(k).transpose();
    const Eigen::VectorXd sk = trace.s.row(k).transpose();
    const Eigen::VectorXd pt =
        trace.pi_f_hat.row(k).transpose() - pi_f_true;
    const Eigen::VectorXd ek = trace.eps.row(k).transpose();
    const Eigen::MatrixXd M = dynamics::mass_matrix_raw(model, qk);
    out.V[k] = 0.5 * sk.dot(M * sk) +
               0.5 * pt.dot(pt.cwiseQuotient(gains.Gamma_f)) +
               0.5 * ek.dot(ek.cwiseQuotient(gains.Gamma_e));
  }
  out.max_increment = 0.0;
  for (Eigen::Index k = 0; k + 1 < trace.ticks(); ++k) {
    out.max_increment = std::max(out.max_increment, out.V[k + 1] - out.V[k]);
  }
  return out;
}

DisturbanceComparison disturbance_comparison(
    const sim::SimTrace& trace_with, const sim::SimTrace& trace_without) {
  if (!trace_with.meta.has_eso || !trace_without.meta.has_eso) {
    throw EvalError("observer stream missing from a compared trace");
  }
  if (trace_with.meta.trajectory_id != trace_without.meta.trajectory_id ||
      trace_with.meta.seed != trace_without.meta.seed ||
      trace_with.meta.pairing_hash != trace_without.meta.pairing_hash ||
      trace_with.ticks() != trace_without.ticks()) {
    throw EvalError("compared traces come from different experiments");
  }
  auto mean_z3 = [](const sim::SimTrace& tr) {
    const int n = tr.meta.n_joints;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < tr.ticks(); ++k) {
      for (int j = 0; j < n; ++j) sum += std::abs(tr.eso(k, 3 * j + 2));
    }
    return sum / (static_cast<double>(tr.ticks()) * n);
  };
  DisturbanceComparison out;
  out.mean_with = mean_z3(trace_with);
  out.mean_without = mean_z3(trace_without);
  constexpr double kDegenerate = 1e-9;
  if (out.mean_with < kDegenerate && out.mean_without < kDegenerate) {
    out.ratio = 1.0;
    out.degenerate = true;
  } else if (out.mean_without <= 0.0) {
    out.ratio = std::numeric_limits<double>::infinity();
  } else {
    out.ratio = out.mean_with / out.mean_without;
  }
  return out;
}

ConvergenceSummary parameter_convergence(const sim::SimTrace& trace) {
  if (!trace.meta.has_adaptive) throw EvalError("trace lacks pi_f_hat");
  if (trace.ticks() == 0) throw EvalError("empty trace");
  ConvergenceSummary out;
  const Eigen::Index T = trace.ticks();
  out.terminal = trace.pi_f_hat.row(T - 1).transpose();
  Eigen::VectorXd tol = out.terminal.cwiseAbs() * 0.05;
  tol = tol.cwiseMax(1e-6);
  Eigen::Index settled = 0;  // first row from which everything stays in band
  for (Eigen::Index k = T - 1; k >= 0; --k) {
    const Eigen::VectorXd dev =
        (trace.pi_f_hat.row(k).transpose() - out.terminal).cwiseAbs();
    if ((dev.array() > tol.array()).any()) {
      settled = k + 1;
      break;
    }
  }
  out.settling_time = trace.t[std::min(settled, T - 1)];
  return out;
}

std::string EvalReport::to_json_string() const {
  json j;
  j["controller_id"] = controller_id;
  j["trajectory_id"] = trajectory_id;
  j["seed"] = seed;
  j["low_velocity_threshold"] = low_velocity_threshold;
  j["full"] = stats_json(full);
  j["low_velocity"] = stats_json(low_velocity);
  if (lyapunov.has_value()) {
    // max_increment is exact (computed on the full series); the stored
    // curve is decimated so reports stay small at fine control rates.
    json l;
    l["max_increment"] = lyapunov->max_increment;
    l["max_value"] = lyapunov->V.size() > 0 ? lyapunov->V.maxCoeff() : 0.0;
    const Eigen::Index count = lyapunov->t.size();
    const Eigen::Index stride = count > 4000 ? (count - 1) / 4000 + 1 : 1;
    std::vector<double> td, Vd;
    for (Eigen::Index i = 0; i < count; i += stride) {
      td.push_back(lyapunov->t[i]);
      Vd.push_back(lyapunov->V[i]);
    }
    if (count > 0 && (count - 1) % stride != 0) {
      td.push_back(lyapunov->t[count - 1]);
      Vd.push_back(lyapunov->V[count - 1]);
    }
    l["stride"] = static_cast<std::int64_t>(stride);
    l["t"] = td;
    l["V"] = Vd;
    j["lyapunov"] = l;
  }
  if (disturbance.has_value()) {
    json d;
    d["mean_with"] = disturbance->mean_with;
    d["mean_without"] = disturbance->mean_without;
    d["ratio"] = disturbance->ratio;  // non-finite dumps as null
    d["degenerate"] = disturbance->degenerate;
    j["disturbance"] = d;
  }
  if (convergence.has_value()) {
    json c;
    c["terminal"] = std::vector<double>(convergence->terminal.begin(),
                                        convergence->terminal.end());
    c["settling_time"] = convergence->settling_time;
    j["convergence"] = c;
  }
  return j.dump(2);
}

namespace {

void emit_tracking_box(const EvalReport& report,
                       const std::filesystem::path& file) {
  const auto n = report.full.joints.size();
  svg::Document doc(120.0 + 90.0 * static_cast<double>(n), 360);
  json d;
  d["full"] = stats_json(report.full);
  d["low_velocity"] = stats_json(report.low_velocity);
  d["threshold"] = report.low_velocity_threshold;
  doc.desc_json(d.dump());

  double ymax = 0.0;
  for (const auto& s : report.full.joints) {
    if (!s.absent) ymax = std::max(ymax, s.max);
  }
  for (const auto& s : report.low_velocity.joints) {
    if (!s.absent) ymax = std::max(ymax, s.max);
  }
  if (ymax <= 0.0) ymax = 1.0;
  Frame f{0.0, static_cast<double>(n), 0.0, ymax * 1.05,
          70.0, 90.0 + 90.0 * static_cast<double>(n) - 20.0, 40.0, 310.0};
  draw_axes(doc, f, "joint", "|error| rad");
  doc.text(f.px0, 24, report.controller_id + " tracking error", "start", 13);
  doc.text(f.px1 - 150, 24, "left: full, right: slow", "start", 10, "#777");
  for (std::size_t j = 0; j < n; ++j) {
    const double cx = f.X(static_cast<double>(j) + 0.5);
    doc.text(cx, f.py1 + 16, std::to_string(j), "middle", 10);
    draw_box(doc, f, cx - 16, report.full.joints[j], kPalette[0]);
    if (j < report.low_velocity.joints.size() &&
        !report.low_velocity.joints[j].absent) {
      draw_box(doc, f, cx + 16, report.low_velocity.joints[j], kPalette[1]);
    } else {
      doc.text(cx + 16, (f.py0 + f.py1) / 2, "no samples", "middle", 9,
               "#999");
    }
  }
  doc.save(file);
}

void emit_convergence(const EvalReport& report, const sim::SimTrace& trace,
                      const std::filesystem::path& file) {
  svg::Document doc(560, 360);
  json d;
  d["terminal"] = std::vector<double>(report.convergence->terminal.begin(),
                                      report.convergence->terminal.end());
  d["settling_time"] = report.convergence->settling_time;
  doc.desc_json(d.dump());

  const Eigen::Index T = trace.ticks();
  double lo = trace.pi_f_hat.minCoeff();
  double hi = trace.pi_f_hat.maxCoeff();
  if (hi <= lo) hi = lo + 1.0;
  Frame f{trace.t[0], trace.t[T - 1], lo, hi, 70.0, 540.0, 40.0, 310.0};
  draw_axes(doc, f, "t s", "friction parameter estimate");
  doc.text(f.px0, 24, report.controller_id + " parameter convergence",
           "start", 13);
  for (Eigen::Index c = 0; c < trace.pi_f_hat.cols(); ++c) {
    doc.polyline(sampled_curve(f, trace.t, trace.pi_f_hat.col(c)),
                 kPalette[c % 8]);
  }
  const double st = report.convergence->settling_time;
  doc.line(f.X(st), f.py0, f.X(st), f.py1, "#999", 1.0);
  doc.text(f.X(st), f.py0 - 4, "settled " + label(st) + " s", "middle", 10,
           "#777");
  doc.save(file);
}

void emit_lyapunov(const EvalReport& report,
                   const std::filesystem::path& file) {
  const LyapunovSeries& l = *report.lyapunov;
  svg::Document doc(560, 360);
  json d;
  d["max_increment"] = l.max_increment;
  d["V_first"] = l.V.size() > 0 ? json(l.V[0]) : json(nullptr);
  d["V_last"] = l.V.size() > 0 ? json(l.V[l.V.size() - 1]) : json(nullptr);
  doc.desc_json(d.dump());

  const Eigen::Index T = l.t.size();
  double lo = l.V.minCoeff(), hi = l.V.maxCoeff();
  if (hi <= lo) hi = lo + 1.0;
  Frame f{l.t[0], l.t[T - 1], std::min(0.0, lo), hi, 70.0, 540.0, 40.0,
          310.0};
  draw_axes(doc, f, "t s", "V1 J");
  doc.text(f.px0, 24, "storage function", "start", 13);
  doc.polyline(sampled_curve(f, l.t, l.V), kPalette[0]);
  doc.text(f.px1 - 4, f.py0 - 4,
           "max increment " + label(l.max_increment), "end", 10, "#777");
  doc.save(file);
}

void emit_z3(const EvalReport& report, const sim::SimTrace& with_trace,
             const sim::SimTrace& without_trace,
             const std::filesystem::path& file) {
  svg::Document doc(560, 360);
  json d;
  d["mean_with"] = report.disturbance->mean_with;
  d["mean_without"] = report.disturbance->mean_without;
  d["ratio"] = report.disturbance->ratio;
  d["degenerate"] = report.disturbance->degenerate;
  doc.desc_json(d.dump());

  const int n = with_trace.meta.n_joints;
  const Eigen::Index T = with_trace.ticks();
  double hi = 0.0;
  for (const sim::SimTrace* tr : {&with_trace, &without_trace}) {
    for (int j = 0; j < n; ++j) {
      hi = std::max(hi, tr->eso.col(3 * j + 2).cwiseAbs().maxCoeff());
    }
  }
  if (hi <= 0.0) hi = 1.0;
  Frame f{with_trace.t[0], with_trace.t[T - 1], 0.0, hi * 1.05, 70.0, 540.0,
          40.0, 310.0};
  draw_axes(doc, f, "t s", "|z3| rad/s^2");
  doc.text(f.px0, 24, "observer disturbance estimate", "start", 13);
  for (int j = 0; j < n; ++j) {
    doc.polyline(
        sampled_curve(f, with_trace.t,
                      with_trace.eso.col(3 * j + 2).cwiseAbs()),
        kPalette[0]);
    doc.polyline(
        sampled_curve(f, without_trace.t,
                      without_trace.eso.col(3 * j + 2).cwiseAbs()),
        kPalette[1]);
  }
  doc.text(f.px1 - 4, f.py0 - 4,
           "with  " + label(report.disturbance->mean_with) + "   without " +
               label(report.disturbance->mean_without),
           "end", 10, "#777");
  doc.save(file);
}

}  // namespace

std::filesystem::path emit_comparison_box(
    const std::vector<std::pair<std::string, ErrorStats>>& entries,
    const std::string& title, const std::filesystem::path& out_file) {
  if (entries.empty()) throw EvalError("nothing to compare");
  const std::size_t n = entries.front().second.joints.size();
  for (const auto& [label_, stats] : entries) {
    (void)label_;
    if (stats.joints.size() != n) {
      throw EvalError("compared stats have different joint counts");
    }
  }
  const auto m = entries.size();
  const double group_w = 36.0 * static_cast<double>(m) + 24.0;
  svg::Document doc(110.0 + group_w * static_cast<double>(n),
                    380 + 14.0 * static_cast<double>(m));
  json d;
  d["entries"] = json::array();
  for (const auto& [name, stats] : entries) {
    json e;
    e["label"] = name;
    e["stats"] = stats_json(stats);
    d["entries"].push_back(e);
  }
  doc.desc_json(d.dump());

  double ymax = 0.0;
  for (const auto& [name, stats] : entries) {
    (void)name;
    for (const auto& s : stats.joints) {
      if (!s.absent) ymax = std::max(ymax, s.max);
    }
  }
  if (ymax <= 0.0) ymax = 1.0;
  Frame f{0.0, static_cast<double>(n), 0.0, ymax * 1.05,
          70.0, 90.0 + group_w * static_cast<double>(n) - 20.0, 40.0, 310.0};
  draw_axes(doc, f, "joint", "|error| rad");
  doc.text(f.px0, 24, title, "start", 13);
  for (std::size_t e = 0; e < m; ++e) {
    doc.text(f.px0 + 8, 330 + 14.0 * static_cast<double>(e + 1),
             entries[e].first, "start", 10, kPalette[e % 8]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double base = f.X(static_cast<double>(j));
    doc.text(f.X(static_cast<double>(j) + 0.5), f.py1 + 16, std::to_string(j),
             "middle", 10);
    for (std::size_t e = 0; e < m; ++e) {
      const double cx = base + 24.0 + 36.0 * static_cast<double>(e);
      const JointStats& st = entries[e].second.joints[j];
      if (st.absent) {
        doc.text(cx, (f.py0 + f.py1) / 2, "no samples", "middle", 9, "#999");
      } else {
        draw_box(doc, f, cx, st, kPalette[e % 8]);
      }
    }
  }
  doc.save(out_file);
  return out_file;
}

std::vector<std::filesystem::path> emit_plots(
    const EvalReport& report, const std::vector<const sim::SimTrace*>& traces,
    const std::filesystem::path& out_dir, const std::string& prefix) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  const auto path_of = [&](const char* stem) {
    return out_dir / (prefix + "_" + stem + ".svg");
  };

  if (!report.full.joints.empty()) {
    emit_tracking_box(report, path_of("tracking_box"));
    written.push_back(path_of("tracking_box"));
  }
  if (report.convergence.has_value()) {
    const sim::SimTrace* adaptive = nullptr;
    for (const sim::SimTrace* tr : traces) {
      if (tr != nullptr && tr->meta.has_adaptive && tr->ticks() > 0) {
        adaptive = tr;
        break;
      }
    }
    if (adaptive != nullptr) {
      emit_convergence(report, *adaptive, path_of("convergence"));
      written.push_back(path_of("convergence"));
    }
  }
  if (report.lyapunov.has_value() && report.lyapunov->t.size() > 0) {
    emit_lyapunov(report, path_of("lyapunov"));
    written.push_back(path_of("lyapunov"));
  }
  if (report.disturbance.has_value()) {
    std::vector<const sim::SimTrace*> eso_traces;
    for (const sim::SimTrace* tr : traces) {
      if (tr != nullptr && tr->meta.has_eso && tr->ticks() > 0) {
        eso_traces.push_back(tr);
      }
    }
    if (eso_traces.size() >= 2) {
      emit_z3(report, *eso_traces[0], *eso_traces[1], path_of("z3"));
      written.push_back(path_of("z3"));
    }
  }
  return written;
}

}  // namespace fricest::eval
