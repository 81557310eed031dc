#include "fricest/trajectory.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "fricest/rng.hpp"

namespace fricest::trajectory {

namespace {

// Tolerance for time-range checks: RK4 stage times accumulate rounding.
constexpr double kTimeSlack = 1e-9;

// Both trajectory families are periodic, so any t >= 0 is well-defined;
// `duration` is advisory (the span the trajectory was designed over).
void check_time(double t, double duration) {
  (void)duration;
  if (!(t >= -kTimeSlack)) {
    throw std::domain_error("trajectory evaluated at negative time");
  }
}

}  // namespace

void FourierTrajectory::validate() const {
  if (harmonics() < 1) throw std::domain_error("need at least one harmonic");
  if (!(omega > 0.0)) throw std::domain_error("omega must be positive");
  if (!(duration > 0.0)) throw std::domain_error("duration must be positive");
  const int n = n_joints();
  if (b.rows() != n || b.cols() != harmonics() || offset.size() != n ||
      static_cast<int>(fixed.size()) != n || fixed_pos.size() != n) {
    throw std::domain_error("trajectory coefficient shapes disagree");
  }
}

Eigen::VectorXd FourierTrajectory::position0() const {
  Eigen::VectorXd q0 = offset;
  for (int j = 0; j < n_joints(); ++j) {
    if (fixed[j]) {
      q0[j] = fixed_pos[j];
      continue;
    }
    for (int i = 0; i < harmonics(); ++i) {
      q0[j] -= b(j, i) / ((i + 1) * omega);
    }
  }
  return q0;
}

void FourierTrajectory::set_start(const Eigen::VectorXd& q0) {
  const Eigen::VectorXd current = position0();
  for (int j = 0; j < n_joints(); ++j) {
    if (fixed[j]) {
      fixed_pos[j] = q0[j];
    } else {
      offset[j] += q0[j] - current[j];
    }
  }
}

nlohmann::json FourierTrajectory::to_json() const {
  nlohmann::json j;
  j["format"] = "fricest-fourier-v1";
  j["omega"] = omega;
  j["duration"] = duration;
  auto matrix_rows = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  j["a"] = matrix_rows(a);
  j["b"] = matrix_rows(b);
  j["offset"] = std::vector<double>(offset.data(), offset.data() + offset.size());
  j["fixed"] = fixed;
  j["fixed_pos"] = std::vector<double>(fixed_pos.data(),
                                       fixed_pos.data() + fixed_pos.size());
  return j;
}

FourierTrajectory FourierTrajectory::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "fricest-fourier-v1") {
    throw std::domain_error("not a fricest-fourier-v1 document");
  }
  FourierTrajectory traj;
  traj.omega = j.at("omega").get<double>();
  traj.duration = j.at("duration").get<double>();
  auto rows_matrix = [](const nlohmann::json& rows) {
    const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index nc =
        nr > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    Eigen::MatrixXd m(nr, nc);
    for (Eigen::Index r = 0; r < nr; ++r) {
      for (Eigen::Index c = 0; c < nc; ++c) {
        m(r, c) = rows.at(r).at(c).get<double>();
      }
    }
    return m;
  };
  traj.a = rows_matrix(j.at("a"));
  traj.b = rows_matrix(j.at("b"));
  const auto offset = j.at("offset").get<std::vector<double>>();
  const auto fixed_pos = j.at("fixed_pos").get<std::vector<double>>();
  traj.offset = Eigen::Map<const Eigen::VectorXd>(
      offset.data(), static_cast<Eigen::Index>(offset.size()));
  traj.fixed = j.at("fixed").get<std::vector<bool>>();
  traj.fixed_pos = Eigen::Map<const Eigen::VectorXd>(
      fixed_pos.data(), static_cast<Eigen::Index>(fixed_pos.size()));
  traj.validate();
  return traj;
}

TrajectorySample fourier_eval(const FourierTrajectory& traj, double t) {
  check_time(t, traj.duration);
  const int n = traj.n_joints();
  TrajectorySample out;
  out.q.setZero(n);
  out.qd.setZero(n);
  out.qdd.setZero(n);
  for (int j = 0; j < n; ++j) {
    if (traj.fixed[j]) {
      out.q[j] = traj.fixed_pos[j];
      continue;
    }
    double q = traj.offset[j];
    double qd = 0.0;
    double qdd = 0.0;
    for (int i = 0; i < traj.harmonics(); ++i) {
      const double w = (i + 1) * traj.omega;
      const double sw = std::sin(w * t);
      const double cw = std::cos(w * t);
      const double ai = traj.a(j, i);
      const double bi = traj.b(j, i);
      q += ai / w * sw - bi / w * cw;
      qd += ai * cw + bi * sw;
      qdd += -ai * w * sw + bi * w * cw;
    }
    out.q[j] = q;
    out.qd[j] = qd;
    out.qdd[j] = qdd;
  }
  return out;
}

FourierTrajectory sample_random_fourier(int n_joints, int N, double omega,
                                        double std, std::uint64_t seed,
                                        double duration) {
  if (!(std > 0.0)) throw std::domain_error("std must be strictly positive");
  if (n_joints < 1) throw std::domain_error("need at least one joint");
  FourierTrajectory traj;
  traj.a.resize(n_joints, N);
  traj.b.resize(n_joints, N);
  traj.omega = omega;
  traj.duration = duration;
  traj.offset = Eigen::VectorXd::Zero(n_joints);
  traj.fixed.assign(static_cast<std::size_t>(n_joints), false);
  traj.fixed_pos = Eigen::VectorXd::Zero(n_joints);

  rng::NormalSampler normal(seed);
  for (int j = 0; j < n_joints; ++j) {
    for (int i = 0; i < N; ++i) {
      traj.a(j, i) = std * normal.next();
      traj.b(j, i) = std * normal.next();
    }
  }
  traj.validate();
  return traj;
}

FourierTrajectoryRef::FourierTrajectoryRef(FourierTrajectory traj)
    : traj_(std::move(traj)) {
  traj_.validate();
}

TrajectorySample FourierTrajectoryRef::eval(double t) const {
  return fourier_eval(traj_, t);
}

Eigen::Vector2d two_link_fk(double l1, double l2, const Eigen::Vector2d& q) {
  return Eigen::Vector2d(
      l1 * std::sin(q[0]) + l2 * std::sin(q[0] + q[1]),
      -l1 * std::cos(q[0]) - l2 * std::cos(q[0] + q[1]));
}

Eigen::Vector2d two_link_ik(double l1, double l2, const Eigen::Vector2d& p,
                            int elbow) {
  const double r2 = p.squaredNorm();
  const double c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  if (!(c2 > -1.0 && c2 < 1.0)) {
    throw std::domain_error(
        "point unreachable or at a kinematic singularity");
  }
  const double q2 = (elbow >= 0 ? 1.0 : -1.0) * std::acos(c2);
  const double alpha = std::atan2(p[0], -p[1]);
  const double beta = std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
  return Eigen::Vector2d(alpha - beta, q2);
}

Eigen::Matrix2d two_link_jacobian(double l1, double l2,
                                  const Eigen::Vector2d& q) {
  const double c1 = std::cos(q[0]);
  const double s1 = std::sin(q[0]);
  const double c12 = std::cos(q[0] + q[1]);
  const double s12 = std::sin(q[0] + q[1]);
  Eigen::Matrix2d J;
  J << l1 * c1 + l2 * c12, l2 * c12, l1 * s1 + l2 * s12, l2 * s12;
  return J;
}

CircleTrajectory::CircleTrajectory(const Eigen::Vector2d& center,
                                   double radius, double period, double l1,
                                   double l2, double duration, int elbow)
    : center_(center),
      radius_(radius),
      period_(period),
      l1_(l1),
      l2_(l2),
      duration_(duration),
      elbow_(elbow >= 0 ? 1 : -1) {
  if (!(radius >= 0.0) || !(period > 0.0) || !(duration > 0.0)) {
    throw std::domain_error("radius must be >= 0, period and duration > 0");
  }
  // Distance from the shoulder to circle points spans
  // [| |center| - radius |, |center| + radius]; the whole range must sit
  // strictly inside the reachable annulus to keep the IK nonsingular.
  const double rc = center.norm();
  const double r_far = rc + radius;
  const double r_near = std::abs(rc - radius);
  const double margin = 1e-9;
  if (!(r_far < l1 + l2 - margin) || !(r_near > std::abs(l1 - l2) + margin)) {
    throw std::domain_error("circle leaves the reachable annulus");
  }
}

TrajectorySample CircleTrajectory::eval(double t) const {
  check_time(t, duration_);
  const double w = 2.0 * M_PI / period_;
  const double phi = w * t;
  const Eigen::Vector2d p =
      center_ + radius_ * Eigen::Vector2d(std::cos(phi), std::sin(phi));
  const Eigen::Vector2d pd =
      radius_ * w * Eigen::Vector2d(-std::sin(phi), std::cos(phi));
  const Eigen::Vector2d pdd =
      -radius_ * w * w * Eigen::Vector2d(std::cos(phi), std::sin(phi));

  TrajectorySample out;
  out.q = two_link_ik(l1_, l2_, p, elbow_);
  if (radius_ == 0.0) {
    out.qd = Eigen::Vector2d::Zero();
    out.qdd = Eigen::Vector2d::Zero();
    return out;
  }
  const Eigen::Matrix2d J = two_link_jacobian(l1_, l2_, out.q);
  const Eigen::Vector2d qd = J.inverse() * pd;
  const double c1 = std::cos(out.q[0]);
  const double s1 = std::sin(out.q[0]);
  const double c12 = std::cos(out.q[0] + out.q[1]);
  const double s12 = std::sin(out.q[0] + out.q[1]);
  const double w1 = qd[0];
  const double w12 = qd[0] + qd[1];
  Eigen::Matrix2d Jd;
  Jd << -l1_ * s1 * w1 - l2_ * s12 * w12, -l2_ * s12 * w12,
      l1_ * c1 * w1 + l2_ * c12 * w12, l2_ * c12 * w12;
  out.qd = qd;
  out.qdd = J.inverse() * (pdd - Jd * qd);
  return out;
}

std::vector<TrajectorySample> circle_path(const Eigen::Vector2d& center,
                                          double radius, double period,
                                          double l1, double l2, int knots,
                                          int elbow) {
  CircleTrajectory traj(center, radius, period, l1, l2, period, elbow);
  std::vector<TrajectorySample> out;
  out.reserve(static_cast<std::size_t>(knots));
  for (int k = 0; k < knots; ++k) {
    out.push_back(traj.eval(period * k / knots));
  }
  return out;
}

}  // namespace fricest::trajectory
