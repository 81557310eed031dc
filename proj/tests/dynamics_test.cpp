// Rigid-body dynamics checked against independent oracles: mass matrices
// rebuilt from link Jacobians, gravity from finite-differenced potential,
// Coriolis terms from finite-differenced mass matrices, and energy balance
// along smooth trajectories.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "fricest/dynamics.hpp"
#include "fricest/rng.hpp"

namespace {

using namespace fricest;

dynamics::ManipulatorModel one_dof() {
  return dynamics::ManipulatorModel::one_dof(2.0, 0.5, 0.25, 0.05);
}

dynamics::ManipulatorModel two_link() {
  return dynamics::ManipulatorModel::two_link({2.0, 0.5, 0.25, 0.02},
                                              {1.5, 0.4, 0.2, 0.01});
}

Eigen::VectorXd random_in(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                          std::mt19937_64& rng) {
  Eigen::VectorXd out(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    out[i] = lo[i] + rng::uniform01(rng) * (hi[i] - lo[i]);
  }
  return out;
}

// Mass matrix rebuilt from per-link COM Jacobians:
// M = sum_i m_i Jv_i' Jv_i + I_i Jw_i' Jw_i, with the planar COM of link i at
// the running sum of l_k*u(q_1..k) plus lc_i*u(...), u(th) = [sin th, -cos th].
Eigen::MatrixXd jacobian_mass_oracle(const dynamics::ManipulatorModel& model,
                                     const Eigen::VectorXd& q) {
  const int n = model.n_joints();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  double angle = 0.0;
  Eigen::MatrixXd Jv = Eigen::MatrixXd::Zero(2, n);  // running base Jacobian
  for (int i = 0; i < n; ++i) {
    const auto& link = model.links[static_cast<std::size_t>(i)];
    angle += q[i];
    // COM Jacobian: base chain plus lc_i * d(u(angle))/dq_j for j <= i.
    Eigen::MatrixXd Jci = Jv;
    for (int j = 0; j <= i; ++j) {
      Jci(0, j) += link.com * std::cos(angle);
      Jci(1, j) += link.com * std::sin(angle);
    }
    Eigen::RowVectorXd Jw = Eigen::RowVectorXd::Zero(n);
    for (int j = 0; j <= i; ++j) Jw[j] = 1.0;
    M += link.mass * Jci.transpose() * Jci +
         link.inertia * Jw.transpose() * Jw;
    // Extend the chain to the next joint.
    for (int j = 0; j <= i; ++j) {
      Jv(0, j) += link.length * std::cos(angle);
      Jv(1, j) += link.length * std::sin(angle);
    }
  }
  return M;
}

// g(q) via central finite differences of the potential.
Eigen::VectorXd gravity_fd_oracle(const dynamics::ManipulatorModel& model,
                                  const Eigen::VectorXd& q) {
  const double h = 1e-6;
  Eigen::VectorXd g(q.size());
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    Eigen::VectorXd qp = q, qm = q;
    qp[j] += h;
    qm[j] -= h;
    g[j] = (dynamics::potential_energy(model, qp) -
            dynamics::potential_energy(model, qm)) /
           (2.0 * h);
  }
  return g;
}

// C(q, qd)*qd via finite-differenced mass matrices:
// (C qd)_i = sum_k (dM/dq_k qd)_i qd_k - 1/2 qd' (dM/dq_i) qd.
Eigen::VectorXd coriolis_fd_oracle(const dynamics::ManipulatorModel& model,
                                   const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& qd) {
  const double h = 1e-6;
  const int n = static_cast<int>(q.size());
  std::vector<Eigen::MatrixXd> dM(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd qp = q, qm = q;
    qp[k] += h;
    qm[k] -= h;
    dM[static_cast<std::size_t>(k)] =
        (dynamics::mass_matrix_raw(model, qp) -
         dynamics::mass_matrix_raw(model, qm)) /
        (2.0 * h);
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    c += dM[static_cast<std::size_t>(k)] * qd * qd[k];
  }
  for (int i = 0; i < n; ++i) {
    c[i] -= 0.5 * qd.dot(dM[static_cast<std::size_t>(i)] * qd);
  }
  return c;
}

}  // namespace

TEST(Dynamics, MassMatrixMatchesJacobianOracle) {
  std::mt19937_64 rng(1);
  for (const auto& model : {one_dof(), two_link()}) {
    for (int i = 0; i < 200; ++i) {
      const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
      const Eigen::MatrixXd M = dynamics::mass_matrix(model, q);
      const Eigen::MatrixXd Mo = jacobian_mass_oracle(model, q);
      EXPECT_LT((M - Mo).norm(), 1e-12) << "q = " << q.transpose();
      // Symmetric positive definite.
      EXPECT_LT((M - M.transpose()).norm(), 1e-14);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
      EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(Dynamics, GravityMatchesPotentialGradient) {
  std::mt19937_64 rng(2);
  for (const auto& model : {one_dof(), two_link()}) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
      const Eigen::VectorXd g = dynamics::gravity_torque(model, q);
      EXPECT_LT((g - gravity_fd_oracle(model, q)).norm(), 1e-7);
    }
  }
}

TEST(Dynamics, PotentialEnergyClosedForm) {
  // Independent closed forms, differences from the hanging configuration.
  const auto m1 = one_dof();
  const auto m2 = two_link();
  std::mt19937_64 rng(3);
  const Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd q1 = random_in(m1.q_min, m1.q_max, rng);
    const double expected1 =
        2.0 * 9.81 * 0.25 * (1.0 - std::cos(q1[0]));
    EXPECT_NEAR(dynamics::potential_energy(m1, q1) -
                    dynamics::potential_energy(m1, zero1),
                expected1, 1e-10);

    const Eigen::VectorXd q2 = random_in(m2.q_min, m2.q_max, rng);
    const double expected2 =
        2.0 * 9.81 * 0.25 * (1.0 - std::cos(q2[0])) +
        1.5 * 9.81 *
            (0.5 * (1.0 - std::cos(q2[0])) +
             0.2 * (1.0 - std::cos(q2[0] + q2[1])));
    EXPECT_NEAR(dynamics::potential_energy(m2, q2) -
                    dynamics::potential_energy(m2, zero2),
                expected2, 1e-10);
  }
}

TEST(Dynamics, BiasForcesMatchFdOracle) {
  std::mt19937_64 rng(4);
  for (const auto& model : {one_dof(), two_link()}) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
      const Eigen::VectorXd qd = random_in(model.qd_min, model.qd_max, rng);
      const Eigen::VectorXd bias = dynamics::bias_forces(model, q, qd);
      const Eigen::VectorXd oracle =
          coriolis_fd_oracle(model, q, qd) + gravity_fd_oracle(model, q);
      EXPECT_LT((bias - oracle).norm(), 1e-6);
    }
  }
}

TEST(Dynamics, CoriolisSkewSymmetry) {
  // Mdot - 2C must be skew-symmetric with the Christoffel construction;
  // Mdot along the flow is differenced as (M(q + h qd) - M(q - h qd)) / 2h.
  std::mt19937_64 rng(5);
  const auto model = two_link();
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
    const Eigen::VectorXd qd = random_in(model.qd_min, model.qd_max, rng);
    const double h = 1e-6;
    const Eigen::MatrixXd Mdot =
        (dynamics::mass_matrix_raw(model, q + h * qd) -
         dynamics::mass_matrix_raw(model, q - h * qd)) /
        (2.0 * h);
    const Eigen::MatrixXd S =
        Mdot - 2.0 * dynamics::coriolis_matrix(model, q, qd);
    EXPECT_LT((S + S.transpose()).norm(), 1e-6);
  }
}

TEST(Dynamics, EnergyBalanceAlongSmoothMotion) {
  // d/dt (T + U) = qd' * tau for tau = inverse_dynamics: checked by central
  // differences of the energy along an analytic state path.
  const auto model = two_link();
  const auto state_at = [](double t) {
    Eigen::VectorXd q(2), qd(2), qdd(2);
    q << 0.7 * std::sin(0.9 * t), 0.5 * std::cos(1.3 * t);
    qd << 0.7 * 0.9 * std::cos(0.9 * t), -0.5 * 1.3 * std::sin(1.3 * t);
    qdd << -0.7 * 0.81 * std::sin(0.9 * t), -0.5 * 1.69 * std::cos(1.3 * t);
    return std::make_tuple(q, qd, qdd);
  };
  const double h = 1e-6;
  for (double t = 0.1; t < 6.0; t += 0.37) {
    const auto [q, qd, qdd] = state_at(t);
    const auto [qp, qdp, qddp] = state_at(t + h);
    const auto [qm, qdm, qddm] = state_at(t - h);
    const double e_plus = dynamics::kinetic_energy(model, qp, qdp) +
                          dynamics::potential_energy(model, qp);
    const double e_minus = dynamics::kinetic_energy(model, qm, qdm) +
                           dynamics::potential_energy(model, qm);
    const double power_fd = (e_plus - e_minus) / (2.0 * h);
    const double power =
        qd.dot(dynamics::inverse_dynamics(model, q, qd, qdd));
    EXPECT_NEAR(power_fd, power, 1e-5) << "t = " << t;
  }
}

TEST(Dynamics, RegressorIdentityIncludesSlotineLi) {
  std::mt19937_64 rng(6);
  for (const auto& model : {one_dof(), two_link()}) {
    const Eigen::VectorXd pi = model.base_params();
    for (int i = 0; i < 200; ++i) {
      const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
      const Eigen::VectorXd qd = random_in(model.qd_min, model.qd_max, rng);
      const Eigen::VectorXd qd_r = random_in(model.qd_min, model.qd_max, rng);
      Eigen::VectorXd qdd_r(model.n_joints());
      for (int j = 0; j < model.n_joints(); ++j) {
        qdd_r[j] = 10.0 * rng::uniform_pm1(rng);
      }
      const Eigen::VectorXd lhs =
          dynamics::slotine_li_regressor(model, q, qd, qd_r, qdd_r) * pi;
      const Eigen::VectorXd rhs =
          dynamics::mass_matrix_raw(model, q) * qdd_r +
          dynamics::coriolis_matrix_raw(model, q, qd) * qd_r +
          dynamics::gravity_torque_raw(model, q);
      EXPECT_LT((lhs - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
      // Reduction: qd_r = qd, qdd_r = qdd reproduces the plain regressor.
      const Eigen::MatrixXd plain =
          dynamics::rigid_body_regressor(model, q, qd, qdd_r);
      const Eigen::MatrixXd reduced =
          dynamics::slotine_li_regressor(model, q, qd, qd, qdd_r);
      EXPECT_LT((plain - reduced).norm(), 1e-14);
    }
  }
}

TEST(Dynamics, BaseParamsClosedForm) {
  EXPECT_EQ(dynamics::base_param_count(dynamics::ModelKind::OneDof), 2);
  EXPECT_EQ(dynamics::base_param_count(dynamics::ModelKind::TwoLinkPlanar), 4);
  const Eigen::VectorXd p1 = one_dof().base_params();
  ASSERT_EQ(p1.size(), 2);
  EXPECT_DOUBLE_EQ(p1[0], 0.05 + 2.0 * 0.25 * 0.25);
  EXPECT_DOUBLE_EQ(p1[1], 2.0 * 0.25);
  const Eigen::VectorXd p2 = two_link().base_params();
  ASSERT_EQ(p2.size(), 4);
  EXPECT_DOUBLE_EQ(p2[0], 0.02 + 2.0 * 0.25 * 0.25 + 1.5 * 0.5 * 0.5);
  EXPECT_DOUBLE_EQ(p2[1], 0.01 + 1.5 * 0.2 * 0.2);
  EXPECT_DOUBLE_EQ(p2[2], 1.5 * 0.2);
  EXPECT_DOUBLE_EQ(p2[3], 2.0 * 0.25 + 1.5 * 0.5);
}

TEST(Dynamics, RegressorPartialMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const auto model = two_link();
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
    const Eigen::VectorXd qd = random_in(model.qd_min, model.qd_max, rng);
    Eigen::VectorXd qdd(2);
    qdd << 10.0 * rng::uniform_pm1(rng), 10.0 * rng::uniform_pm1(rng);
    for (int joint = 0; joint < 2; ++joint) {
      for (const auto comp : {dynamics::StateComponent::Position,
                              dynamics::StateComponent::Velocity,
                              dynamics::StateComponent::Acceleration}) {
        Eigen::VectorXd qp = q, qm = q, qdp = qd, qdm = qd, qddp = qdd,
                        qddm = qdd;
        switch (comp) {
          case dynamics::StateComponent::Position:
            qp[joint] += h;
            qm[joint] -= h;
            break;
          case dynamics::StateComponent::Velocity:
            qdp[joint] += h;
            qdm[joint] -= h;
            break;
          case dynamics::StateComponent::Acceleration:
            qddp[joint] += h;
            qddm[joint] -= h;
            break;
        }
        const Eigen::MatrixXd fd =
            (dynamics::rigid_body_regressor(model, qp, qdp, qddp) -
             dynamics::rigid_body_regressor(model, qm, qdm, qddm)) /
            (2.0 * h);
        const Eigen::MatrixXd analytic =
            dynamics::regressor_partial(model, q, qd, qdd, comp, joint);
        EXPECT_LT((analytic - fd).norm(), 1e-6);
      }
    }
  }
}

TEST(Dynamics, ForwardInverseRoundTrip) {
  std::mt19937_64 rng(8);
  for (const auto& model : {one_dof(), two_link()}) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
      const Eigen::VectorXd qd = random_in(model.qd_min, model.qd_max, rng);
      Eigen::VectorXd qdd_ref(model.n_joints()),
          tau_f(model.n_joints());
      for (int j = 0; j < model.n_joints(); ++j) {
        qdd_ref[j] = 10.0 * rng::uniform_pm1(rng);
        tau_f[j] = rng::uniform_pm1(rng);
      }
      const Eigen::VectorXd tau =
          dynamics::inverse_dynamics(model, q, qd, qdd_ref) + tau_f;
      const Eigen::VectorXd qdd =
          dynamics::forward_dynamics(model, q, qd, tau, tau_f);
      EXPECT_LT((qdd - qdd_ref).norm(), 1e-9);
    }
  }
}

TEST(Dynamics, KineticEnergyQuadraticForm) {
  std::mt19937_64 rng(9);
  const auto model = two_link();
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
    const Eigen::VectorXd qd = random_in(model.qd_min, model.qd_max, rng);
    const double T = dynamics::kinetic_energy(model, q, qd);
    EXPECT_NEAR(T, 0.5 * qd.dot(dynamics::mass_matrix(model, q) * qd), 1e-12);
    EXPECT_GE(T, 0.0);
  }
}

TEST(Dynamics, CheckedOperationsEnforceLimits) {
  const auto model = one_dof();
  Eigen::VectorXd q_out = Eigen::VectorXd::Constant(1, model.q_max[0] + 0.5);
  Eigen::VectorXd qd_out = Eigen::VectorXd::Constant(1, model.qd_max[0] + 0.5);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(dynamics::mass_matrix(model, q_out), std::domain_error);
  EXPECT_THROW(dynamics::bias_forces(model, q_out, zero), std::domain_error);
  EXPECT_THROW(dynamics::bias_forces(model, zero, qd_out), std::domain_error);
  EXPECT_NO_THROW(dynamics::mass_matrix_raw(model, q_out));
  EXPECT_NO_THROW(dynamics::bias_forces_raw(model, q_out, qd_out));
}

TEST(Dynamics, ModelValidationRejectsBadPhysics) {
  EXPECT_THROW(dynamics::ManipulatorModel::one_dof(-1.0, 0.5, 0.25, 0.05),
               std::domain_error);
  EXPECT_THROW(dynamics::ManipulatorModel::one_dof(2.0, 0.5, 0.25, 0.0),
               std::domain_error);
  auto model = one_dof();
  model.q_min[0] = model.q_max[0] + 1.0;  // empty interval
  EXPECT_THROW(model.validate(), std::domain_error);
}

TEST(Dynamics, StructuralBoundsCoverRandomSamples) {
  const auto model = two_link();
  const auto bounds = dynamics::structural_bounds(model, 9);
  EXPECT_GT(bounds.sigma_min, 0.0);
  EXPECT_GT(bounds.sigma_max, bounds.sigma_min);
  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd q = random_in(model.q_min, model.q_max, rng);
    const Eigen::VectorXd qd = random_in(model.qd_min, model.qd_max, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        dynamics::mass_matrix(model, q));
    EXPECT_GE(eig.eigenvalues().minCoeff(), bounds.sigma_min - 1e-9);
    EXPECT_LE(eig.eigenvalues().maxCoeff(), bounds.sigma_max + 1e-9);
    EXPECT_LE(dynamics::gravity_torque(model, q).norm(), bounds.c1 + 1e-9);
    const Eigen::VectorXd v2 = random_in(model.qd_min, model.qd_max, rng);
    EXPECT_LE((dynamics::coriolis_matrix(model, q, qd) * v2).norm(),
              bounds.c0 * qd.norm() * v2.norm() + 1e-9);
  }
}
