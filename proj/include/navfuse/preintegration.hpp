#pragma once

// On-manifold IMU preintegration between keyframes: relative rotation,
// velocity, and position deltas with 9x9 noise covariance over
// (dtheta, dv, dp) and first-order bias-correction Jacobians.
//
// The accumulated quantities depend only on the raw samples and the bias
// linearization point, never on the absolute state, so one preintegrated
// block serves every relinearization of the connected keyframes.

#include <stdexcept>

#include <Eigen/Core>

#include "navfuse/so3.hpp"
#include "navfuse/types.hpp"

namespace navfuse {

using Matrix9d = Eigen::Matrix<double, 9, 9>;
using Vector9d = Eigen::Matrix<double, 9, 1>;

struct PreintegratedImu {
  Rotation delta_R{Rotation::Identity()};        ///< body_i -> body_k
  Eigen::Vector3d delta_v{0.0, 0.0, 0.0};
  Eigen::Vector3d delta_p{0.0, 0.0, 0.0};
  double dt_total{0.0};
  ImuBias bias_lin;                              ///< bias linearization point
  Matrix9d cov{Matrix9d::Zero()};                ///< over (dtheta, dv, dp)

  // First-order sensitivities of the deltas to a bias change.
  Eigen::Matrix3d dR_dbg{Eigen::Matrix3d::Zero()};
  Eigen::Matrix3d dv_dbg{Eigen::Matrix3d::Zero()};
  Eigen::Matrix3d dv_dba{Eigen::Matrix3d::Zero()};
  Eigen::Matrix3d dp_dbg{Eigen::Matrix3d::Zero()};
  Eigen::Matrix3d dp_dba{Eigen::Matrix3d::Zero()};

  /// Stacked 9x6 bias Jacobian, rows (dtheta, dv, dp), cols (bg, ba).
  Eigen::Matrix<double, 9, 6> bias_jacobian() const {
    Eigen::Matrix<double, 9, 6> j = Eigen::Matrix<double, 9, 6>::Zero();
    j.block<3, 3>(0, 0) = dR_dbg;
    j.block<3, 3>(3, 0) = dv_dbg;
    j.block<3, 3>(3, 3) = dv_dba;
    j.block<3, 3>(6, 0) = dp_dbg;
    j.block<3, 3>(6, 3) = dp_dba;
    return j;
  }
};

/// Accumulates one sample over [t, t+dt). Position is advanced with the
/// pre-update delta_v and delta_R, then velocity, then rotation.
inline void integrate_sample(PreintegratedImu& acc, const ImuSample& s, double dt,
                             const ImuNoiseParams& noise) {
  if (!(dt > 0.0) || dt > 1.0) {
    throw std::invalid_argument("integrate_sample: dt must be in (0, 1] s");
  }
  const Eigen::Vector3d w = s.gyro - acc.bias_lin.gyro;
  const Eigen::Vector3d a = s.accel - acc.bias_lin.accel;
  const Rotation r0 = acc.delta_R;
  const Eigen::Matrix3d a_hat = skew(a);
  const Eigen::Vector3d w_dt = w * dt;
  const Rotation incr = so3_exp(w_dt);
  const Eigen::Matrix3d jr = so3_right_jacobian(w_dt);

  // Error-state transition over (dtheta, dv, dp).
  Matrix9d f = Matrix9d::Identity();
  f.block<3, 3>(0, 0) = incr.transpose();
  f.block<3, 3>(3, 0) = -r0 * a_hat * dt;
  f.block<3, 3>(6, 0) = -0.5 * r0 * a_hat * dt * dt;
  f.block<3, 3>(6, 3) = Eigen::Matrix3d::Identity() * dt;

  // Noise input (gyro, accel), discrete variance density^2 / dt.
  Eigen::Matrix<double, 9, 6> g = Eigen::Matrix<double, 9, 6>::Zero();
  g.block<3, 3>(0, 0) = jr * dt;
  g.block<3, 3>(3, 3) = r0 * dt;
  g.block<3, 3>(6, 3) = 0.5 * r0 * dt * dt;
  Eigen::Matrix<double, 6, 6> q = Eigen::Matrix<double, 6, 6>::Zero();
  q.diagonal().head<3>().setConstant(noise.gyro_noise_density * noise.gyro_noise_density / dt);
  q.diagonal().tail<3>().setConstant(noise.accel_noise_density * noise.accel_noise_density / dt);

  acc.cov = f * acc.cov * f.transpose() + g * q * g.transpose();
  acc.cov = (0.5 * (acc.cov + acc.cov.transpose())).eval();

  // Bias Jacobians, using pre-update values on the right-hand sides.
  acc.dp_dba += acc.dv_dba * dt - 0.5 * r0 * dt * dt;
  acc.dp_dbg += acc.dv_dbg * dt - 0.5 * r0 * a_hat * acc.dR_dbg * dt * dt;
  acc.dv_dba += -r0 * dt;
  acc.dv_dbg += -r0 * a_hat * acc.dR_dbg * dt;
  acc.dR_dbg = incr.transpose() * acc.dR_dbg - jr * dt;

  // Delta updates; position first (pre-update delta_v, delta_R), then
  // velocity, then rotation.
  acc.delta_p += acc.delta_v * dt + 0.5 * r0 * a * dt * dt;
  acc.delta_v += r0 * a * dt;
  acc.delta_R = r0 * incr;
  acc.dt_total += dt;
}

/// Deltas re-expressed at a new bias estimate, first order in (new - lin).
struct CorrectedDeltas {
  Rotation delta_R;
  Eigen::Vector3d delta_v;
  Eigen::Vector3d delta_p;
  bool extrapolation_warning{false};  ///< bias step beyond the trust region
};

inline CorrectedDeltas bias_correct(const PreintegratedImu& pim, const ImuBias& new_bias) {
  const Eigen::Vector3d dbg = new_bias.gyro - pim.bias_lin.gyro;
  const Eigen::Vector3d dba = new_bias.accel - pim.bias_lin.accel;
  CorrectedDeltas out{
      pim.delta_R * so3_exp(pim.dR_dbg * dbg),
      pim.delta_v + pim.dv_dbg * dbg + pim.dv_dba * dba,
      pim.delta_p + pim.dp_dbg * dbg + pim.dp_dba * dba,
      dbg.norm() > 0.05 || dba.norm() > 0.5};
  return out;
}

/// Propagates keyframe i through the preintegrated deltas.
inline NavState predict_state(const NavState& state_i, const ImuBias& bias_i,
                              const PreintegratedImu& pim, const GravityVector& gravity) {
  const CorrectedDeltas d = bias_correct(pim, bias_i);
  const double dt = pim.dt_total;
  NavState out;
  out.R = state_i.R * d.delta_R;
  out.v = state_i.v + gravity.g * dt + state_i.R * d.delta_v;
  out.p = state_i.p + state_i.v * dt + 0.5 * gravity.g * dt * dt + state_i.R * d.delta_p;
  return out;
}

/// 9-dim preintegration residual (rotation, velocity, position blocks),
/// whitened downstream by pim.cov.
inline Vector9d imu_residual(const NavState& state_i, const NavState& state_j,
                             const ImuBias& bias_i, const PreintegratedImu& pim,
                             const GravityVector& gravity) {
  const CorrectedDeltas d = bias_correct(pim, bias_i);
  const double dt = pim.dt_total;
  Vector9d r;
  r.segment<3>(0) = so3_log(d.delta_R.transpose() * state_i.R.transpose() * state_j.R);
  r.segment<3>(3) = state_i.R.transpose() * (state_j.v - state_i.v - gravity.g * dt) - d.delta_v;
  r.segment<3>(6) = state_i.R.transpose() *
                        (state_j.p - state_i.p - state_i.v * dt - 0.5 * gravity.g * dt * dt) -
                    d.delta_p;
  return r;
}

/// Analytic Jacobians of imu_residual. Pose blocks are 9x6 over
/// (dtheta, dp) with the right-multiplicative orientation retraction;
/// the bias block is 9x6 over (dbg, dba) of keyframe i.
struct ImuResidualJacobians {
  Eigen::Matrix<double, 9, 6> pose_i;
  Eigen::Matrix<double, 9, 3> vel_i;
  Eigen::Matrix<double, 9, 6> bias_i;
  Eigen::Matrix<double, 9, 6> pose_j;
  Eigen::Matrix<double, 9, 3> vel_j;
};

inline Vector9d imu_residual_jacobians(const NavState& state_i, const NavState& state_j,
                                       const ImuBias& bias_i, const PreintegratedImu& pim,
                                       const GravityVector& gravity,
                                       ImuResidualJacobians& jac) {
  const Eigen::Vector3d dbg = bias_i.gyro - pim.bias_lin.gyro;
  const CorrectedDeltas d = bias_correct(pim, bias_i);
  const double dt = pim.dt_total;

  const Eigen::Matrix3d ri_t = state_i.R.transpose();
  const Rotation e_rot = d.delta_R.transpose() * ri_t * state_j.R;
  const Eigen::Vector3d r_rot = so3_log(e_rot);
  const Eigen::Vector3d dv_world = state_j.v - state_i.v - gravity.g * dt;
  const Eigen::Vector3d dp_world =
      state_j.p - state_i.p - state_i.v * dt - 0.5 * gravity.g * dt * dt;

  Vector9d r;
  r.segment<3>(0) = r_rot;
  r.segment<3>(3) = ri_t * dv_world - d.delta_v;
  r.segment<3>(6) = ri_t * dp_world - d.delta_p;

  const Eigen::Matrix3d jr_inv = so3_right_jacobian_inverse(r_rot);

  jac.pose_i.setZero();
  jac.vel_i.setZero();
  jac.bias_i.setZero();
  jac.pose_j.setZero();
  jac.vel_j.setZero();

  // Rotation block.
  jac.pose_i.block<3, 3>(0, 0) = -jr_inv * state_j.R.transpose() * state_i.R;
  jac.pose_j.block<3, 3>(0, 0) = jr_inv;
  jac.bias_i.block<3, 3>(0, 0) =
      -jr_inv * e_rot.transpose() * so3_right_jacobian(pim.dR_dbg * dbg) * pim.dR_dbg;

  // Velocity block.
  jac.pose_i.block<3, 3>(3, 0) = skew(ri_t * dv_world);
  jac.vel_i.block<3, 3>(3, 0) = -ri_t;
  jac.vel_j.block<3, 3>(3, 0) = ri_t;
  jac.bias_i.block<3, 3>(3, 0) = -pim.dv_dbg;
  jac.bias_i.block<3, 3>(3, 3) = -pim.dv_dba;

  // Position block.
  jac.pose_i.block<3, 3>(6, 0) = skew(ri_t * dp_world);
  jac.pose_i.block<3, 3>(6, 3) = -ri_t;
  jac.pose_j.block<3, 3>(6, 3) = ri_t;
  jac.vel_i.block<3, 3>(6, 0) = -ri_t * dt;
  jac.bias_i.block<3, 3>(6, 0) = -pim.dp_dbg;
  jac.bias_i.block<3, 3>(6, 3) = -pim.dp_dba;

  return r;
}

}  // namespace navfuse
