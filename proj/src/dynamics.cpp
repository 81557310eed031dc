#include "fricest/dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fricest::dynamics {

namespace {

void check_vector_size(const Eigen::VectorXd& v, int n, const char* name) {
  if (v.size() != n) {
    throw std::domain_error(std::string(name) + " has size " +
                            std::to_string(v.size()) + ", expected " +
                            std::to_string(n));
  }
}

void check_limits(const ManipulatorModel& m, const Eigen::VectorXd& q,
                  const Eigen::VectorXd* qd = nullptr) {
  check_vector_size(q, m.n_joints(), "q");
  for (int j = 0; j < m.n_joints(); ++j) {
    if (!(q[j] >= m.q_min[j] && q[j] <= m.q_max[j])) {
      throw std::domain_error("q[" + std::to_string(j) + "] = " +
                              std::to_string(q[j]) +
                              " outside position limits");
    }
  }
  if (qd != nullptr) {
    check_vector_size(*qd, m.n_joints(), "qd");
    for (int j = 0; j < m.n_joints(); ++j) {
      if (!((*qd)[j] >= m.qd_min[j] && (*qd)[j] <= m.qd_max[j])) {
        throw std::domain_error("qd[" + std::to_string(j) + "] = " +
                                std::to_string((*qd)[j]) +
                                " outside velocity limits");
      }
    }
  }
}

// Base parameters of the two-link arm, in the order documented on
// ManipulatorModel::base_params.
struct TwoLinkTheta {
  double t1, t2, t3, t4, l1;
};

TwoLinkTheta two_link_theta(const ManipulatorModel& m) {
  const LinkParams& a = m.links[0];
  const LinkParams& b = m.links[1];
  TwoLinkTheta th;
  th.t1 = a.inertia + a.mass * a.com * a.com + b.mass * a.length * a.length;
  th.t2 = b.inertia + b.mass * b.com * b.com;
  th.t3 = b.mass * b.com;
  th.t4 = a.mass * a.com + b.mass * a.length;
  th.l1 = a.length;
  return th;
}

}  // namespace

Eigen::VectorXd ManipulatorModel::base_params() const {
  if (kind == ModelKind::OneDof) {
    const LinkParams& a = links[0];
    Eigen::VectorXd pi(2);
    pi << a.inertia + a.mass * a.com * a.com, a.mass * a.com;
    return pi;
  }
  const TwoLinkTheta th = two_link_theta(*this);
  Eigen::VectorXd pi(4);
  pi << th.t1, th.t2, th.t3, th.t4;
  return pi;
}

void ManipulatorModel::validate() const {
  const int n = n_joints();
  if (static_cast<int>(links.size()) != n) {
    throw std::domain_error("model has " + std::to_string(links.size()) +
                            " links, expected " + std::to_string(n));
  }
  for (const LinkParams& link : links) {
    if (!(link.mass > 0.0) || !(link.length > 0.0) || !(link.com > 0.0) ||
        !(link.inertia > 0.0)) {
      throw std::domain_error(
          "link masses, lengths, com offsets, and inertias must be strictly "
          "positive");
    }
  }
  check_vector_size(q_min, n, "q_min");
  check_vector_size(q_max, n, "q_max");
  check_vector_size(qd_min, n, "qd_min");
  check_vector_size(qd_max, n, "qd_max");
  check_vector_size(tau_max, n, "tau_max");
  for (int j = 0; j < n; ++j) {
    if (!(q_min[j] < q_max[j]) || !(qd_min[j] < qd_max[j])) {
      throw std::domain_error("limit intervals must be non-empty");
    }
    if (!(tau_max[j] > 0.0)) {
      throw std::domain_error("torque limits must be strictly positive");
    }
  }
}

ManipulatorModel ManipulatorModel::one_dof(double mass, double length,
                                           double com, double inertia,
                                           double gravity) {
  ManipulatorModel m;
  m.kind = ModelKind::OneDof;
  m.links = {LinkParams{mass, length, com, inertia}};
  m.gravity = gravity;
  m.q_min = Eigen::VectorXd::Constant(1, -3.0);
  m.q_max = Eigen::VectorXd::Constant(1, 3.0);
  m.qd_min = Eigen::VectorXd::Constant(1, -4.0);
  m.qd_max = Eigen::VectorXd::Constant(1, 4.0);
  m.tau_max = Eigen::VectorXd::Constant(1, 50.0);
  m.validate();
  return m;
}

ManipulatorModel ManipulatorModel::two_link(const LinkParams& link1,
                                            const LinkParams& link2,
                                            double gravity) {
  ManipulatorModel m;
  m.kind = ModelKind::TwoLinkPlanar;
  m.links = {link1, link2};
  m.gravity = gravity;
  m.q_min = Eigen::VectorXd::Constant(2, -3.0);
  m.q_max = Eigen::VectorXd::Constant(2, 3.0);
  m.qd_min = Eigen::VectorXd::Constant(2, -4.0);
  m.qd_max = Eigen::VectorXd::Constant(2, 4.0);
  m.tau_max = Eigen::VectorXd::Constant(2, 80.0);
  m.validate();
  return m;
}

int base_param_count(ModelKind kind) {
  return kind == ModelKind::OneDof ? 2 : 4;
}

Eigen::MatrixXd mass_matrix_raw(const ManipulatorModel& m,
                                const Eigen::VectorXd& q) {
  if (m.kind == ModelKind::OneDof) {
    const LinkParams& a = m.links[0];
    Eigen::MatrixXd M(1, 1);
    M(0, 0) = a.inertia + a.mass * a.com * a.com;
    return M;
  }
  const TwoLinkTheta th = two_link_theta(m);
  const double c2 = std::cos(q[1]);
  Eigen::MatrixXd M(2, 2);
  M(0, 0) = th.t1 + th.t2 + 2.0 * th.l1 * c2 * th.t3;
  M(0, 1) = th.t2 + th.l1 * c2 * th.t3;
  M(1, 0) = M(0, 1);
  M(1, 1) = th.t2;
  return M;
}

Eigen::MatrixXd coriolis_matrix_raw(const ManipulatorModel& m,
                                    const Eigen::VectorXd& q,
                                    const Eigen::VectorXd& qd) {
  if (m.kind == ModelKind::OneDof) {
    return Eigen::MatrixXd::Zero(1, 1);
  }
  const TwoLinkTheta th = two_link_theta(m);
  const double h = -th.t3 * th.l1 * std::sin(q[1]);
  Eigen::MatrixXd C(2, 2);
  C(0, 0) = h * qd[1];
  C(0, 1) = h * (qd[0] + qd[1]);
  C(1, 0) = -h * qd[0];
  C(1, 1) = 0.0;
  return C;
}

Eigen::VectorXd gravity_torque_raw(const ManipulatorModel& m,
                                   const Eigen::VectorXd& q) {
  const double G = m.gravity;
  if (m.kind == ModelKind::OneDof) {
    const LinkParams& a = m.links[0];
    Eigen::VectorXd g(1);
    g[0] = G * a.mass * a.com * std::sin(q[0]);
    return g;
  }
  const TwoLinkTheta th = two_link_theta(m);
  const double s1 = std::sin(q[0]);
  const double s12 = std::sin(q[0] + q[1]);
  Eigen::VectorXd g(2);
  g[0] = G * (th.t4 * s1 + th.t3 * s12);
  g[1] = G * th.t3 * s12;
  return g;
}

Eigen::VectorXd bias_forces_raw(const ManipulatorModel& m,
                                const Eigen::VectorXd& q,
                                const Eigen::VectorXd& qd) {
  return coriolis_matrix_raw(m, q, qd) * qd + gravity_torque_raw(m, q);
}

Eigen::VectorXd forward_dynamics_raw(const ManipulatorModel& m,
                                     const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& qd,
                                     const Eigen::VectorXd& tau_applied,
                                     const Eigen::VectorXd& tau_friction) {
  const Eigen::VectorXd rhs =
      tau_applied - bias_forces_raw(m, q, qd) - tau_friction;
  return mass_matrix_raw(m, q).ldlt().solve(rhs);
}

Eigen::MatrixXd mass_matrix(const ManipulatorModel& m,
                            const Eigen::VectorXd& q) {
  check_limits(m, q);
  return mass_matrix_raw(m, q);
}

Eigen::VectorXd bias_forces(const ManipulatorModel& m,
                            const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qd) {
  check_limits(m, q, &qd);
  return bias_forces_raw(m, q, qd);
}

Eigen::VectorXd gravity_torque(const ManipulatorModel& m,
                               const Eigen::VectorXd& q) {
  check_limits(m, q);
  return gravity_torque_raw(m, q);
}

Eigen::MatrixXd coriolis_matrix(const ManipulatorModel& m,
                                const Eigen::VectorXd& q,
                                const Eigen::VectorXd& qd) {
  check_limits(m, q, &qd);
  return coriolis_matrix_raw(m, q, qd);
}

Eigen::MatrixXd slotine_li_regressor(const ManipulatorModel& m,
                                     const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& qd,
                                     const Eigen::VectorXd& qd_r,
                                     const Eigen::VectorXd& qdd_r) {
  const double G = m.gravity;
  if (m.kind == ModelKind::OneDof) {
    Eigen::MatrixXd Y(1, 2);
    Y(0, 0) = qdd_r[0];
    Y(0, 1) = G * std::sin(q[0]);
    return Y;
  }
  const TwoLinkTheta th = two_link_theta(m);
  const double c2 = std::cos(q[1]);
  const double s2 = std::sin(q[1]);
  const double s1 = std::sin(q[0]);
  const double s12 = std::sin(q[0] + q[1]);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(2, 4);
  Y(0, 0) = qdd_r[0];
  Y(0, 1) = qdd_r[0] + qdd_r[1];
  Y(0, 2) = th.l1 * c2 * (2.0 * qdd_r[0] + qdd_r[1]) -
            th.l1 * s2 * (qd[1] * qd_r[0] + (qd[0] + qd[1]) * qd_r[1]) +
            G * s12;
  Y(0, 3) = G * s1;
  Y(1, 1) = qdd_r[0] + qdd_r[1];
  Y(1, 2) = th.l1 * c2 * qdd_r[0] + th.l1 * s2 * qd[0] * qd_r[0] + G * s12;
  return Y;
}

Eigen::MatrixXd rigid_body_regressor(const ManipulatorModel& m,
                                     const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& qd,
                                     const Eigen::VectorXd& qdd) {
  check_limits(m, q, &qd);
  check_vector_size(qdd, m.n_joints(), "qdd");
  return slotine_li_regressor(m, q, qd, qd, qdd);
}

Eigen::VectorXd inverse_dynamics(const ManipulatorModel& m,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd,
                                 const Eigen::VectorXd& qdd) {
  check_limits(m, q, &qd);
  return mass_matrix_raw(m, q) * qdd + bias_forces_raw(m, q, qd);
}

Eigen::VectorXd forward_dynamics(const ManipulatorModel& m,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd,
                                 const Eigen::VectorXd& tau_applied,
                                 const Eigen::VectorXd& tau_friction) {
  check_limits(m, q, &qd);
  for (int j = 0; j < m.n_joints(); ++j) {
    if (!(std::abs(tau_applied[j]) <= m.tau_max[j])) {
      throw std::domain_error("tau_applied[" + std::to_string(j) +
                              "] outside torque limits");
    }
  }
  return forward_dynamics_raw(m, q, qd, tau_applied, tau_friction);
}

Eigen::MatrixXd regressor_partial(const ManipulatorModel& m,
                                  const Eigen::VectorXd& q,
                                  const Eigen::VectorXd& qd,
                                  const Eigen::VectorXd& qdd,
                                  StateComponent component, int joint) {
  const double G = m.gravity;
  if (m.kind == ModelKind::OneDof) {
    Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(1, 2);
    if (component == StateComponent::Position) {
      dY(0, 1) = G * std::cos(q[0]);
    } else if (component == StateComponent::Acceleration) {
      dY(0, 0) = 1.0;
    }
    return dY;
  }
  const TwoLinkTheta th = two_link_theta(m);
  const double c2 = std::cos(q[1]);
  const double s2 = std::sin(q[1]);
  const double c1 = std::cos(q[0]);
  const double c12 = std::cos(q[0] + q[1]);
  Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(2, 4);
  switch (component) {
    case StateComponent::Position:
      if (joint == 0) {
        dY(0, 2) = G * c12;
        dY(0, 3) = G * c1;
        dY(1, 2) = G * c12;
      } else {
        dY(0, 2) = -th.l1 * s2 * (2.0 * qdd[0] + qdd[1]) -
                   th.l1 * c2 * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]) +
                   G * c12;
        dY(1, 2) = -th.l1 * s2 * qdd[0] + th.l1 * c2 * qd[0] * qd[0] + G * c12;
      }
      break;
    case StateComponent::Velocity:
      if (joint == 0) {
        dY(0, 2) = -th.l1 * s2 * 2.0 * qd[1];
        dY(1, 2) = th.l1 * s2 * 2.0 * qd[0];
      } else {
        dY(0, 2) = -th.l1 * s2 * (2.0 * qd[0] + 2.0 * qd[1]);
      }
      break;
    case StateComponent::Acceleration:
      if (joint == 0) {
        dY(0, 0) = 1.0;
        dY(0, 1) = 1.0;
        dY(0, 2) = 2.0 * th.l1 * c2;
        dY(1, 1) = 1.0;
        dY(1, 2) = th.l1 * c2;
      } else {
        dY(0, 1) = 1.0;
        dY(0, 2) = th.l1 * c2;
        dY(1, 1) = 1.0;
      }
      break;
  }
  return dY;
}

double kinetic_energy(const ManipulatorModel& m, const Eigen::VectorXd& q,
                      const Eigen::VectorXd& qd) {
  return 0.5 * qd.dot(mass_matrix_raw(m, q) * qd);
}

double potential_energy(const ManipulatorModel& m, const Eigen::VectorXd& q) {
  const double G = m.gravity;
  if (m.kind == ModelKind::OneDof) {
    const LinkParams& a = m.links[0];
    return -G * a.mass * a.com * std::cos(q[0]);
  }
  const TwoLinkTheta th = two_link_theta(m);
  return -G * (th.t4 * std::cos(q[0]) + th.t3 * std::cos(q[0] + q[1]));
}

StructuralBounds structural_bounds(const ManipulatorModel& m,
                                   int grid_points_per_axis) {
  const int n = m.n_joints();
  StructuralBounds b;
  b.sigma_min = std::numeric_limits<double>::infinity();

  // Only q[1] (elbow) affects M, C, and the non-gravity regressor blocks for
  // the two-link arm; the gravity terms additionally sweep q[0]. A full grid
  // over the position box with unit-sphere velocity/acceleration probes is
  // cheap at n <= 2 and keeps the estimate convention-free.
  const int gp = grid_points_per_axis;
  std::vector<Eigen::VectorXd> q_grid;
  if (n == 1) {
    for (int i = 0; i < gp; ++i) {
      const double a = static_cast<double>(i) / (gp - 1);
      Eigen::VectorXd q(1);
      q[0] = m.q_min[0] + a * (m.q_max[0] - m.q_min[0]);
      q_grid.push_back(q);
    }
  } else {
    for (int i = 0; i < gp; ++i) {
      for (int j = 0; j < gp; ++j) {
        const double a = static_cast<double>(i) / (gp - 1);
        const double c = static_cast<double>(j) / (gp - 1);
        Eigen::VectorXd q(2);
        q[0] = m.q_min[0] + a * (m.q_max[0] - m.q_min[0]);
        q[1] = m.q_min[1] + c * (m.q_max[1] - m.q_min[1]);
        q_grid.push_back(q);
      }
    }
  }

  // Unit directions for the bilinear Coriolis bound and regressor bound.
  std::vector<Eigen::VectorXd> dirs;
  if (n == 1) {
    Eigen::VectorXd d(1);
    d[0] = 1.0;
    dirs.push_back(d);
  } else {
    const int nd = 16;
    for (int i = 0; i < nd; ++i) {
      const double a = 2.0 * M_PI * i / nd;
      Eigen::VectorXd d(2);
      d << std::cos(a), std::sin(a);
      dirs.push_back(d);
    }
  }

  for (const Eigen::VectorXd& q : q_grid) {
    const Eigen::MatrixXd M = mass_matrix_raw(m, q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    b.sigma_min = std::min(b.sigma_min, es.eigenvalues().minCoeff());
    b.sigma_max = std::max(b.sigma_max, es.eigenvalues().maxCoeff());
    b.c1 = std::max(b.c1, gravity_torque_raw(m, q).norm());
    for (const Eigen::VectorXd& v1 : dirs) {
      const Eigen::MatrixXd C = coriolis_matrix_raw(m, q, v1);
      for (const Eigen::VectorXd& v2 : dirs) {
        b.c0 = std::max(b.c0, (C * v2).norm());
      }
      for (const Eigen::VectorXd& v2 : dirs) {
        const Eigen::MatrixXd Y = slotine_li_regressor(m, q, v1, v1, v2);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Y);
        b.c2 = std::max(b.c2, svd.singularValues()(0));
      }
    }
  }
  return b;
}

}  // namespace fricest::dynamics
