#include "fricest/friction.hpp"

#include <cmath>
#include <string>

namespace fricest::friction {

namespace {
// sqrt(2e): peak factor that makes the exponential term equal f_brk - f_c at
// its maximum over velocity.
const double kSqrt2e = std::sqrt(2.0 * std::exp(1.0));

void check_scales(double v_st, double v_coul) {
  if (!(v_st > 0.0) || !(v_coul > 0.0)) {
    throw std::domain_error("v_st and v_coul must be strictly positive");
  }
}
}  // namespace

double FrictionParams::v_st() const { return v_brk * std::sqrt(2.0); }

double FrictionParams::v_coul() const { return v_brk / 10.0; }

void FrictionParams::validate() const {
  if (!(f_brk >= f_c) || !(f_c >= 0.0) || !(f_vis >= 0.0) || !(v_brk > 0.0)) {
    throw std::domain_error(
        "friction parameters must satisfy f_brk >= f_c >= 0, f_vis >= 0, "
        "v_brk > 0");
  }
}

Eigen::Vector3d FrictionParams::linear_params() const {
  return Eigen::Vector3d(kSqrt2e * (f_brk - f_c), f_c, f_vis);
}

RegressorScales RegressorScales::from_breakaway(const Eigen::VectorXd& v_brk) {
  RegressorScales s;
  s.v_st = v_brk * std::sqrt(2.0);
  s.v_coul = v_brk / 10.0;
  return s;
}

RegressorScales RegressorScales::from_params(
    const std::vector<FrictionParams>& p) {
  Eigen::VectorXd v_brk(static_cast<Eigen::Index>(p.size()));
  for (std::size_t j = 0; j < p.size(); ++j) {
    v_brk[static_cast<Eigen::Index>(j)] = p[j].v_brk;
  }
  return from_breakaway(v_brk);
}

double stribeck_torque(const FrictionParams& params, double v) {
  const double v_st = params.v_st();
  const double v_coul = params.v_coul();
  return kSqrt2e * (params.f_brk - params.f_c) * std::exp(-std::abs(v) / v_st) *
             (v / v_st) +
         params.f_c * std::tanh(v / v_coul) + params.f_vis * v;
}

Eigen::RowVector3d friction_regressor(double v, double v_st, double v_coul) {
  check_scales(v_st, v_coul);
  return Eigen::RowVector3d(std::exp(-std::abs(v) / v_st) * (v / v_st),
                            std::tanh(v / v_coul), v);
}

Eigen::RowVector3d friction_regressor_dv(double v, double v_st,
                                         double v_coul) {
  check_scales(v_st, v_coul);
  const double th = std::tanh(v / v_coul);
  return Eigen::RowVector3d(
      std::exp(-std::abs(v) / v_st) * (1.0 - std::abs(v) / v_st) / v_st,
      (1.0 - th * th) / v_coul, 1.0);
}

Eigen::RowVector2d simplified_regressor(double v, double v_coul) {
  if (!(v_coul > 0.0)) {
    throw std::domain_error("v_coul must be strictly positive");
  }
  return Eigen::RowVector2d(std::tanh(v / v_coul), v);
}

Eigen::VectorXd clip_passivity(const Eigen::VectorXd& pi_f) {
  return pi_f.cwiseMax(0.0);
}

double estimate_breakaway(const sim::SimTrace& trace,
                          double deviation_threshold, int joint) {
  if (trace.ticks() == 0) {
    throw EstimationError("empty trace");
  }
  if (joint < 0 || joint >= trace.meta.n_joints) {
    throw std::domain_error("joint index out of range");
  }
  const double q0 = trace.q(0, joint);
  for (Eigen::Index k = 0; k < trace.ticks(); ++k) {
    if (std::abs(trace.q(k, joint) - q0) > deviation_threshold) {
      return std::abs(trace.qd(k, joint));
    }
  }
  throw EstimationError(
      "joint never deviated beyond the breakaway detection threshold");
}

}  // namespace fricest::friction
