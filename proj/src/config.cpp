#include "fricest/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fricest/io.hpp"

namespace fricest::config {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) {
    throw ConfigError(context + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + context);
    }
  }
}

double get_number(const json& j, const std::string& key,
                  const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(context + "." + key + " must be a number");
  }
  return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback,
                     const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) {
    throw ConfigError(context + "." + key + " must be a number");
  }
  return j.at(key).get<double>();
}

int get_int_or(const json& j, const std::string& key, int fallback,
               const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) {
    throw ConfigError(context + "." + key + " must be an integer");
  }
  return j.at(key).get<int>();
}

bool get_bool_or(const json& j, const std::string& key, bool fallback,
                 const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) {
    throw ConfigError(context + "." + key + " must be a boolean");
  }
  return j.at(key).get<bool>();
}

std::string get_string_or(const json& j, const std::string& key,
                          const std::string& fallback,
                          const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) {
    throw ConfigError(context + "." + key + " must be a string");
  }
  return j.at(key).get<std::string>();
}

Eigen::VectorXd get_vector(const json& j, const std::string& key,
                           const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ConfigError(context + "." + key + " must be an array of numbers");
  }
  const json& arr = j.at(key);
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ConfigError(context + "." + key + " must hold numbers only");
    }
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

Eigen::VectorXd get_vector_or(const json& j, const std::string& key,
                              const Eigen::VectorXd& fallback,
                              const std::string& context) {
  if (!j.contains(key)) return fallback;
  return get_vector(j, key, context);
}

dynamics::LinkParams parse_link(const json& j, const std::string& context) {
  check_keys(j, {"mass", "length", "com", "inertia"}, context);
  dynamics::LinkParams link;
  link.mass = get_number(j, "mass", context);
  link.com = get_number(j, "com", context);
  link.inertia = get_number(j, "inertia", context);
  link.length = get_number_or(j, "length", 2.0 * link.com, context);
  return link;
}

dynamics::ManipulatorModel parse_model(const json& j) {
  check_keys(j,
             {"kind", "links", "gravity", "q_min", "q_max", "qd_min", "qd_max",
              "tau_max"},
             "model");
  const std::string kind = get_string_or(j, "kind", "", "model");
  if (!j.contains("links") || !j.at("links").is_array()) {
    throw ConfigError("model.links must be an array");
  }
  const json& links = j.at("links");
  const double gravity = get_number_or(j, "gravity", 9.81, "model");

  dynamics::ManipulatorModel model;
  if (kind == "one_dof") {
    if (links.size() != 1) throw ConfigError("one_dof model needs 1 link");
    const dynamics::LinkParams l = parse_link(links[0], "model.links[0]");
    model = dynamics::ManipulatorModel::one_dof(l.mass, l.length, l.com,
                                                l.inertia, gravity);
  } else if (kind == "two_link") {
    if (links.size() != 2) throw ConfigError("two_link model needs 2 links");
    model = dynamics::ManipulatorModel::two_link(
        parse_link(links[0], "model.links[0]"),
        parse_link(links[1], "model.links[1]"), gravity);
  } else {
    throw ConfigError("model.kind must be 'one_dof' or 'two_link'");
  }
  model.q_min = get_vector_or(j, "q_min", model.q_min, "model");
  model.q_max = get_vector_or(j, "q_max", model.q_max, "model");
  model.qd_min = get_vector_or(j, "qd_min", model.qd_min, "model");
  model.qd_max = get_vector_or(j, "qd_max", model.qd_max, "model");
  model.tau_max = get_vector_or(j, "tau_max", model.tau_max, "model");
  try {
    model.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return model;
}

std::vector<friction::FrictionParams> parse_friction(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError("friction must be a non-empty array");
  }
  std::vector<friction::FrictionParams> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = "friction[" + std::to_string(i) + "]";
    check_keys(j[i], {"f_brk", "f_c", "f_vis", "v_brk"}, ctx);
    friction::FrictionParams p;
    p.f_brk = get_number(j[i], "f_brk", ctx);
    p.f_c = get_number(j[i], "f_c", ctx);
    p.f_vis = get_number(j[i], "f_vis", ctx);
    p.v_brk = get_number_or(j[i], "v_brk", 0.1, ctx);
    try {
      p.validate();
    } catch (const std::domain_error& e) {
      throw ConfigError(ctx + ": " + e.what());
    }
    out.push_back(p);
  }
  return out;
}

ExcitationSpec parse_excitation(const json& j) {
  check_keys(j,
             {"regressor", "harmonics", "omega", "duration", "grid_dt",
              "offset", "fixed", "fixed_pos", "init_std", "max_iters",
              "restarts", "feas_tol", "vel_margin"},
             "excitation");
  ExcitationSpec spec;
  spec.regressor = get_string_or(j, "regressor", spec.regressor, "excitation");
  spec.harmonics = get_int_or(j, "harmonics", spec.harmonics, "excitation");
  spec.omega = get_number_or(j, "omega", spec.omega, "excitation");
  spec.duration = get_number_or(j, "duration", spec.duration, "excitation");
  spec.grid_dt = get_number_or(j, "grid_dt", spec.grid_dt, "excitation");
  spec.offset = get_vector_or(j, "offset", spec.offset, "excitation");
  if (j.contains("fixed")) {
    if (!j.at("fixed").is_array()) {
      throw ConfigError("excitation.fixed must be an array of booleans");
    }
    for (const auto& e : j.at("fixed")) {
      if (!e.is_boolean()) {
        throw ConfigError("excitation.fixed must hold booleans only");
      }
      spec.fixed.push_back(e.get<bool>());
    }
  }
  spec.fixed_pos = get_vector_or(j, "fixed_pos", spec.fixed_pos, "excitation");
  spec.init_std = get_number_or(j, "init_std", spec.init_std, "excitation");
  spec.max_iters = get_int_or(j, "max_iters", spec.max_iters, "excitation");
  spec.restarts = get_int_or(j, "restarts", spec.restarts, "excitation");
  spec.feas_tol = get_number_or(j, "feas_tol", spec.feas_tol, "excitation");
  spec.vel_margin =
      get_number_or(j, "vel_margin", spec.vel_margin, "excitation");
  return spec;
}

sim::SimConfig parse_sim(const json& j) {
  check_keys(j,
             {"plant_dt", "control_dt", "duration", "noise", "disturbance",
              "mismatch", "continuous_feedforward"},
             "sim");
  sim::SimConfig cfg;
  cfg.plant_dt = get_number_or(j, "plant_dt", cfg.plant_dt, "sim");
  cfg.control_dt = get_number_or(j, "control_dt", cfg.control_dt, "sim");
  cfg.duration = get_number_or(j, "duration", cfg.duration, "sim");
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    check_keys(n, {"q_std", "qd_std"}, "sim.noise");
    cfg.noise.q_std = get_number_or(n, "q_std", 0.0, "sim.noise");
    cfg.noise.qd_std = get_number_or(n, "qd_std", 0.0, "sim.noise");
  }
  if (j.contains("disturbance")) {
    const json& d = j.at("disturbance");
    check_keys(d, {"constant", "sin_amplitude", "sin_freq_hz"},
               "sim.disturbance");
    cfg.disturbance.constant =
        get_vector_or(d, "constant", cfg.disturbance.constant,
                      "sim.disturbance");
    cfg.disturbance.sin_amplitude =
        get_vector_or(d, "sin_amplitude", cfg.disturbance.sin_amplitude,
                      "sim.disturbance");
    cfg.disturbance.sin_freq_hz =
        get_number_or(d, "sin_freq_hz", 0.0, "sim.disturbance");
  }
  if (j.contains("mismatch")) {
    const json& m = j.at("mismatch");
    check_keys(m, {"pi_scale", "v_brk_scale", "seed"}, "sim.mismatch");
    cfg.mismatch.pi_scale = get_number_or(m, "pi_scale", 0.0, "sim.mismatch");
    cfg.mismatch.v_brk_scale =
        get_number_or(m, "v_brk_scale", 0.0, "sim.mismatch");
    if (m.contains("seed")) {
      if (!m.at("seed").is_number_unsigned()) {
        throw ConfigError("sim.mismatch.seed must be a nonnegative integer");
      }
      cfg.mismatch.seed = m.at("seed").get<std::uint64_t>();
    }
  }
  cfg.continuous_feedforward =
      get_bool_or(j, "continuous_feedforward", false, "sim");
  try {
    cfg.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("sim: ") + e.what());
  }
  return cfg;
}

ControllerSpec parse_controller(const json& j, const std::string& context) {
  check_keys(j,
             {"type", "label", "bandwidth", "gamma_f", "gamma_e",
              "backstepping", "friction_model", "velocity_source", "omega_o",
              "adrc_bandwidth"},
             context);
  ControllerSpec spec;
  spec.type = get_string_or(j, "type", "", context);
  static const std::set<std::string> kTypes = {
      "pd",   "pid",           "pd_friction", "adaptive",
      "adrc", "adrc_friction", "feedforward"};
  if (kTypes.find(spec.type) == kTypes.end()) {
    throw ConfigError(context + ".type '" + spec.type + "' is not supported");
  }
  spec.label = get_string_or(j, "label", spec.type, context);
  spec.bandwidth = get_number_or(j, "bandwidth", spec.bandwidth, context);
  if (j.contains("gamma_f")) {
    spec.gamma_f = get_vector(j, "gamma_f", context);
  }
  if (j.contains("gamma_e")) {
    spec.gamma_e = get_vector(j, "gamma_e", context);
  }
  spec.backstepping = get_bool_or(j, "backstepping", false, context);
  spec.friction_model =
      get_string_or(j, "friction_model", spec.friction_model, context);
  if (spec.friction_model != "proposed" &&
      spec.friction_model != "simplified") {
    throw ConfigError(context + ".friction_model must be proposed|simplified");
  }
  spec.velocity_source =
      get_string_or(j, "velocity_source", spec.velocity_source, context);
  if (spec.velocity_source != "observer" &&
      spec.velocity_source != "measured") {
    throw ConfigError(context + ".velocity_source must be observer|measured");
  }
  spec.omega_o = get_number_or(j, "omega_o", spec.omega_o, context);
  spec.adrc_bandwidth =
      get_number_or(j, "adrc_bandwidth", spec.adrc_bandwidth, context);
  return spec;
}

TrajectorySpec parse_trajectory(const json& j) {
  check_keys(j,
             {"type", "file", "harmonics", "omega", "std", "duration",
              "center", "radius", "period", "elbow"},
             "trajectory");
  TrajectorySpec spec;
  spec.type = get_string_or(j, "type", spec.type, "trajectory");
  if (spec.type != "file" && spec.type != "random_fourier" &&
      spec.type != "circle") {
    throw ConfigError("trajectory.type must be file|random_fourier|circle");
  }
  spec.file = get_string_or(j, "file", "", "trajectory");
  if (spec.type == "file" && spec.file.empty()) {
    throw ConfigError("trajectory.file is required for type 'file'");
  }
  spec.harmonics = get_int_or(j, "harmonics", spec.harmonics, "trajectory");
  spec.omega = get_number_or(j, "omega", spec.omega, "trajectory");
  spec.std_dev = get_number_or(j, "std", spec.std_dev, "trajectory");
  spec.duration = get_number_or(j, "duration", spec.duration, "trajectory");
  if (j.contains("center")) {
    const Eigen::VectorXd c = get_vector(j, "center", "trajectory");
    if (c.size() != 2) throw ConfigError("trajectory.center needs 2 entries");
    spec.center = c;
  }
  spec.radius = get_number_or(j, "radius", spec.radius, "trajectory");
  spec.period = get_number_or(j, "period", spec.period, "trajectory");
  spec.elbow = get_int_or(j, "elbow", spec.elbow, "trajectory");
  return spec;
}

EvalSpec parse_eval(const json& j) {
  check_keys(j,
             {"low_velocity_threshold", "seeds", "trajectories",
              "traj_harmonics", "traj_omega", "traj_std", "traj_duration"},
             "eval");
  EvalSpec spec;
  spec.low_velocity_threshold = get_number_or(
      j, "low_velocity_threshold", spec.low_velocity_threshold, "eval");
  if (j.contains("seeds")) {
    if (!j.at("seeds").is_array() || j.at("seeds").empty()) {
      throw ConfigError("eval.seeds must be a non-empty array");
    }
    spec.seeds.clear();
    for (const auto& s : j.at("seeds")) {
      if (!s.is_number_unsigned()) {
        throw ConfigError("eval.seeds must hold nonnegative integers");
      }
      spec.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  spec.trajectories =
      get_int_or(j, "trajectories", spec.trajectories, "eval");
  if (spec.trajectories < 1) {
    throw ConfigError("eval.trajectories must be at least 1");
  }
  spec.traj_harmonics =
      get_int_or(j, "traj_harmonics", spec.traj_harmonics, "eval");
  spec.traj_omega = get_number_or(j, "traj_omega", spec.traj_omega, "eval");
  spec.traj_std = get_number_or(j, "traj_std", spec.traj_std, "eval");
  spec.traj_duration =
      get_number_or(j, "traj_duration", spec.traj_duration, "eval");
  return spec;
}

std::uint64_t hash_with_seed(const json& doc, std::uint64_t seed) {
  return io::fnv1a(doc.dump() + "|seed=" + std::to_string(seed));
}

}  // namespace

excitation::ExcitationProblem ExcitationSpec::to_problem(
    const dynamics::ManipulatorModel& model,
    const std::vector<friction::FrictionParams>& friction,
    std::uint64_t seed) const {
  const int n = model.n_joints();
  if (static_cast<int>(friction.size()) != n) {
    throw ConfigError("friction entries must match the model joint count");
  }
  excitation::ExcitationProblem p;
  p.model = model;
  p.v_brk.resize(n);
  for (int j = 0; j < n; ++j) {
    p.v_brk[j] = friction[static_cast<std::size_t>(j)].v_brk;
  }
  try {
    p.regressor = excitation::regressor_kind_from_string(regressor);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("excitation.regressor: ") + e.what());
  }
  p.harmonics = harmonics;
  p.omega = omega;
  p.duration = duration;
  p.grid_dt = grid_dt;
  p.offset = offset.size() > 0 ? offset : Eigen::VectorXd::Zero(n);
  p.fixed = fixed.empty() ? std::vector<bool>(static_cast<std::size_t>(n), false)
                          : fixed;
  p.fixed_pos = fixed_pos.size() > 0 ? fixed_pos : Eigen::VectorXd::Zero(n);
  p.init_std = init_std;
  p.seed = seed;
  p.max_iters = max_iters;
  p.restarts = restarts;
  p.feas_tol = feas_tol;
  p.vel_margin = vel_margin;
  try {
    p.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("excitation: ") + e.what());
  }
  return p;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  json doc;
  try {
    doc = json::parse(bytes, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return parse(doc);
}

ExperimentConfig ExperimentConfig::parse(const json& doc) {
  check_keys(doc,
             {"model", "friction", "excitation", "sim", "controller",
              "controllers", "trajectory", "eval", "out_dir", "seed"},
             "config");
  if (!doc.contains("model")) throw ConfigError("config.model is required");
  if (!doc.contains("friction")) {
    throw ConfigError("config.friction is required");
  }
  ExperimentConfig cfg;
  cfg.model = parse_model(doc.at("model"));
  cfg.friction = parse_friction(doc.at("friction"));
  if (static_cast<int>(cfg.friction.size()) != cfg.model.n_joints()) {
    throw ConfigError("friction entries must match the model joint count");
  }
  if (doc.contains("excitation")) {
    cfg.excitation = parse_excitation(doc.at("excitation"));
  }
  if (doc.contains("sim")) cfg.sim = parse_sim(doc.at("sim"));
  if (doc.contains("controller") && doc.contains("controllers")) {
    throw ConfigError("give either 'controller' or 'controllers', not both");
  }
  if (doc.contains("controller")) {
    cfg.controllers.push_back(
        parse_controller(doc.at("controller"), "controller"));
  }
  if (doc.contains("controllers")) {
    const json& arr = doc.at("controllers");
    if (!arr.is_array() || arr.empty()) {
      throw ConfigError("controllers must be a non-empty array");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      cfg.controllers.push_back(parse_controller(
          arr[i], "controllers[" + std::to_string(i) + "]"));
    }
    std::set<std::string> labels;
    for (const auto& c : cfg.controllers) {
      if (!labels.insert(c.label).second) {
        throw ConfigError("duplicate controller label '" + c.label + "'");
      }
    }
  }
  if (doc.contains("trajectory")) {
    cfg.trajectory = parse_trajectory(doc.at("trajectory"));
  }
  if (doc.contains("eval")) cfg.eval = parse_eval(doc.at("eval"));
  if (doc.contains("out_dir")) {
    if (!doc.at("out_dir").is_string()) {
      throw ConfigError("out_dir must be a string");
    }
    cfg.out_dir = doc.at("out_dir").get<std::string>();
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  cfg.canonical = doc;
  cfg.canonical.erase("out_dir");
  cfg.canonical.erase("seed");
  return cfg;
}

std::uint64_t ExperimentConfig::config_hash() const {
  return hash_with_seed(canonical, seed);
}

std::uint64_t ExperimentConfig::pairing_hash() const {
  json doc = canonical;
  doc.erase("controller");
  doc.erase("controllers");
  return hash_with_seed(doc, seed);
}

nlohmann::json FrictionParamsFile::to_json() const {
  json j;
  j["format"] = "fricest-friction-params-v1";
  j["pi_f"] = std::vector<double>(pi_f.begin(), pi_f.end());
  j["v_brk"] = std::vector<double>(v_brk.begin(), v_brk.end());
  j["param_count"] = param_count;
  j["friction_model"] = friction_model;
  j["settling_time_s"] = settling_time_s;
  return j;
}

FrictionParamsFile FrictionParamsFile::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "fricest-friction-params-v1") {
    throw ConfigError("not a friction-parameter file");
  }
  check_keys(j,
             {"format", "pi_f", "v_brk", "param_count", "friction_model",
              "settling_time_s"},
             "params");
  FrictionParamsFile f;
  f.pi_f = get_vector(j, "pi_f", "params");
  f.v_brk = get_vector(j, "v_brk", "params");
  f.param_count = get_int_or(j, "param_count", 3, "params");
  f.friction_model =
      get_string_or(j, "friction_model", "proposed", "params");
  f.settling_time_s = get_number_or(j, "settling_time_s", 0.0, "params");
  if (f.param_count < 1 || f.v_brk.size() < 1 ||
      f.pi_f.size() != f.param_count * f.v_brk.size()) {
    throw ConfigError("friction-parameter file has inconsistent shapes");
  }
  return f;
}

void FrictionParamsFile::save(const std::filesystem::path& path) const {
  io::atomic_write(path, to_json().dump(2) + "\n");
}

FrictionParamsFile FrictionParamsFile::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path), nullptr, true,
                      /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("params parse error: " + std::string(e.what()));
  }
  return from_json(doc);
}

Eigen::VectorXd inertia_estimate(const dynamics::ManipulatorModel& model) {
  const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(model.n_joints());
  return dynamics::mass_matrix_raw(model, q0).diagonal();
}

namespace {

// Tile or pass through a gain override: size k*n, or size k to repeat per
// joint.
Eigen::VectorXd expand_gain(const Eigen::VectorXd& given, int per_joint,
                            int n, const std::string& what) {
  if (given.size() == static_cast<Eigen::Index>(per_joint) * n) return given;
  if (given.size() == per_joint) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(per_joint) * n);
    for (int j = 0; j < n; ++j) out.segment(per_joint * j, per_joint) = given;
    return out;
  }
  throw ConfigError(what + " must have " + std::to_string(per_joint) +
                    " or " + std::to_string(per_joint * n) + " entries");
}

}  // namespace

std::unique_ptr<control::Controller> make_controller(
    const ControllerSpec& spec, const ExperimentConfig& config,
    const std::optional<FrictionParamsFile>& params,
    std::shared_ptr<const trajectory::Trajectory> traj) {
  const dynamics::ManipulatorModel& model = config.model;
  const int n = model.n_joints();
  const Eigen::VectorXd inertia = inertia_estimate(model);
  const control::FrictionModelKind kind =
      spec.friction_model == "simplified"
          ? control::FrictionModelKind::Simplified
          : control::FrictionModelKind::Proposed;
  const int k = control::friction_param_count(kind);

  // Controller-side regressor scales: true v_brk, perturbed when the config
  // injects breakaway mismatch.
  Eigen::VectorXd v_brk_true(n);
  for (int j = 0; j < n; ++j) {
    v_brk_true[j] = config.friction[static_cast<std::size_t>(j)].v_brk;
  }
  const Eigen::VectorXd v_brk_ctrl = sim::inject_mismatch(
      v_brk_true, config.sim.mismatch.v_brk_scale, config.sim.mismatch.seed + 1);
  friction::RegressorScales scales =
      friction::RegressorScales::from_breakaway(v_brk_ctrl);

  control::Gains gains = control::Gains::critically_damped(inertia,
                                                           spec.bandwidth);
  gains.omega_o = spec.omega_o;
  gains.adrc_bandwidth = spec.adrc_bandwidth;
  if (kind == control::FrictionModelKind::Simplified && !spec.gamma_f) {
    gains.Gamma_f.resize(2 * n);
    for (int j = 0; j < n; ++j) gains.Gamma_f.segment(2 * j, 2) << 1.0, 0.1;
  }
  if (spec.gamma_f) {
    gains.Gamma_f = expand_gain(*spec.gamma_f, k, n, "gamma_f");
  }
  if (spec.gamma_e) {
    gains.Gamma_e = expand_gain(*spec.gamma_e, 1, n, "gamma_e");
  }

  // Compensation parameters from the estimate stage (scales travel along).
  std::optional<Eigen::VectorXd> pi_f_ff;
  if (spec.type == "pd_friction" || spec.type == "adrc_friction") {
    if (!params.has_value()) {
      throw ConfigError("controller '" + spec.label +
                        "' needs a friction-parameter file");
    }
    if (params->v_brk.size() != n) {
      throw ConfigError("friction-parameter file joint count mismatch");
    }
    pi_f_ff = params->pi_f;
    scales = friction::RegressorScales::from_breakaway(params->v_brk);
  }

  if (spec.type == "pd" || spec.type == "pid" || spec.type == "pd_friction") {
    control::PdController::Options opt;
    opt.gains = gains;
    opt.inertia_estimate = inertia;
    opt.tau_limit = model.tau_max;
    opt.integral = spec.type == "pid";
    opt.velocity = spec.velocity_source == "measured"
                       ? control::VelocitySource::Measured
                       : control::VelocitySource::Observer;
    opt.friction_feedforward = pi_f_ff;
    if (pi_f_ff.has_value()) {
      opt.friction_kind = params->param_count == 2
                              ? control::FrictionModelKind::Simplified
                              : control::FrictionModelKind::Proposed;
    }
    opt.scales = scales;
    opt.label = spec.label;
    return std::make_unique<control::PdController>(opt);
  }
  if (spec.type == "adaptive") {
    control::AdaptiveController::Options opt;
    opt.gains = gains;
    opt.model = model;
    opt.pi_hat = sim::inject_mismatch(model.base_params(),
                                      config.sim.mismatch.pi_scale,
                                      config.sim.mismatch.seed);
    opt.scales = scales;
    opt.kind = kind;
    opt.backstepping = spec.backstepping;
    // A parameter file warm-starts the friction estimate (and pins the
    // regressor scales it was estimated with).
    if (params.has_value()) {
      if (params->v_brk.size() != n) {
        throw ConfigError("friction-parameter file joint count mismatch");
      }
      if (params->param_count != control::friction_param_count(kind)) {
        throw ConfigError(
            "friction-parameter file width disagrees with friction_model");
      }
      opt.pi_f_init = params->pi_f;
      opt.scales = friction::RegressorScales::from_breakaway(params->v_brk);
    }
    opt.label = spec.label;
    return std::make_unique<control::AdaptiveController>(opt);
  }
  if (spec.type == "adrc" || spec.type == "adrc_friction") {
    control::AdrcController::Options opt;
    opt.gains = gains;
    opt.model = model;
    opt.inertia_estimate = inertia;
    opt.friction_feedforward = pi_f_ff;
    if (pi_f_ff.has_value()) {
      opt.friction_kind = params->param_count == 2
                              ? control::FrictionModelKind::Simplified
                              : control::FrictionModelKind::Proposed;
    }
    opt.scales = scales;
    opt.label = spec.label;
    return std::make_unique<control::AdrcController>(opt);
  }
  if (spec.type == "feedforward") {
    if (traj == nullptr) {
      throw ConfigError("feedforward controller needs the trajectory");
    }
    return std::make_unique<control::FeedforwardController>(
        model, config.friction, std::move(traj));
  }
  throw ConfigError("controller type '" + spec.type + "' is not supported");
}

std::shared_ptr<const trajectory::Trajectory> make_trajectory(
    const TrajectorySpec& spec, const dynamics::ManipulatorModel& model,
    std::uint64_t seed) {
  if (spec.type == "file") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(io::read_file(spec.file), nullptr, true,
                                  /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("trajectory parse error: " + std::string(e.what()));
    }
    trajectory::FourierTrajectory traj =
        trajectory::FourierTrajectory::from_json(doc);
    if (traj.n_joints() != model.n_joints()) {
      throw ConfigError("trajectory joint count disagrees with the model");
    }
    return std::make_shared<trajectory::FourierTrajectoryRef>(std::move(traj));
  }
  if (spec.type == "random_fourier") {
    trajectory::FourierTrajectory traj = trajectory::sample_random_fourier(
        model.n_joints(), spec.harmonics, spec.omega, spec.std_dev, seed,
        spec.duration);
    return std::make_shared<trajectory::FourierTrajectoryRef>(std::move(traj));
  }
  if (spec.type == "circle") {
    if (model.kind != dynamics::ModelKind::TwoLinkPlanar) {
      throw ConfigError("circle trajectories need the two-link model");
    }
    const double l1 = model.links[0].length;
    const double l2 = model.links[1].length;
    try {
      return std::make_shared<trajectory::CircleTrajectory>(
          spec.center, spec.radius, spec.period, l1, l2, spec.duration,
          spec.elbow);
    } catch (const std::domain_error& e) {
      throw ConfigError(std::string("trajectory: ") + e.what());
    }
  }
  throw ConfigError("trajectory.type '" + spec.type + "' is not supported");
}

}  // namespace fricest::config
