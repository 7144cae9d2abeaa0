#pragma once

// Tightly coupled error-state EKF over (attitude, velocity, position, accel
// bias, gyro bias, receiver clock). The nominal state integrates the same
// kinematics as the preintegration module; the 16-dim error state is ordered
// (dtheta3, dv3, dp3, dba3, dbg3, dclk1).

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "navfuse/so3.hpp"
#include "navfuse/types.hpp"

namespace navfuse {

inline constexpr int kEkfDim = 16;
// Error-state block offsets.
inline constexpr int kEkfTheta = 0;
inline constexpr int kEkfVel = 3;
inline constexpr int kEkfPos = 6;
inline constexpr int kEkfBa = 9;
inline constexpr int kEkfBg = 12;
inline constexpr int kEkfClk = 15;

struct EkfParams {
  ImuNoiseParams imu;
  double clock_walk_sigma{0.1};  // m / sqrt(s)
  double gate_sigma{5.0};
};

struct EkfState {
  NavState nominal;
  ImuBias bias;
  ClockState clock;
  Eigen::Matrix<double, kEkfDim, kEkfDim> cov{
      Eigen::Matrix<double, kEkfDim, kEkfDim>::Identity()};
  GravityVector gravity;
  int rejected_count{0};

  void symmetrize() { cov = (0.5 * (cov + cov.transpose())).eval(); }
};

/// One IMU strapdown step plus covariance propagation P <- F P F^T + Q.
inline EkfState ekf_propagate(const EkfState& s, const ImuSample& sample, double dt,
                              const EkfParams& params) {
  if (!(dt > 0.0) || dt > 1.0) {
    throw std::invalid_argument("ekf_propagate: dt must be in (0, 1]");
  }

  const Eigen::Vector3d w = sample.gyro - s.bias.gyro;
  const Eigen::Vector3d a = sample.accel - s.bias.accel;
  const Rotation r0 = s.nominal.R;
  const Rotation incr = so3_exp(w * dt);
  const Eigen::Vector3d g = s.gravity.g;

  EkfState out = s;
  out.nominal.p = s.nominal.p + s.nominal.v * dt + 0.5 * g * dt * dt + 0.5 * (r0 * a) * dt * dt;
  out.nominal.v = s.nominal.v + g * dt + (r0 * a) * dt;
  out.nominal.R = r0 * incr;

  using M = Eigen::Matrix<double, kEkfDim, kEkfDim>;
  M f = M::Identity();
  f.block<3, 3>(kEkfTheta, kEkfTheta) = incr.transpose();
  f.block<3, 3>(kEkfTheta, kEkfBg) = -so3_right_jacobian(w * dt) * dt;
  f.block<3, 3>(kEkfVel, kEkfTheta) = -r0 * skew(a) * dt;
  f.block<3, 3>(kEkfVel, kEkfBa) = -r0 * dt;
  f.block<3, 3>(kEkfPos, kEkfTheta) = -0.5 * r0 * skew(a) * dt * dt;
  f.block<3, 3>(kEkfPos, kEkfVel) = Eigen::Matrix3d::Identity() * dt;
  f.block<3, 3>(kEkfPos, kEkfBa) = -0.5 * r0 * dt * dt;

  M q = M::Zero();
  const double qg = params.imu.gyro_noise_density * params.imu.gyro_noise_density * dt;
  const double qa = params.imu.accel_noise_density * params.imu.accel_noise_density * dt;
  const Eigen::Matrix3d jr = so3_right_jacobian(w * dt);
  q.block<3, 3>(kEkfTheta, kEkfTheta) = jr * jr.transpose() * qg;
  q.block<3, 3>(kEkfVel, kEkfVel) = Eigen::Matrix3d::Identity() * qa;
  q.block<3, 3>(kEkfPos, kEkfPos) = Eigen::Matrix3d::Identity() * (0.25 * qa * dt * dt);
  q.block<3, 3>(kEkfPos, kEkfVel) = Eigen::Matrix3d::Identity() * (0.5 * qa * dt);
  q.block<3, 3>(kEkfVel, kEkfPos) = Eigen::Matrix3d::Identity() * (0.5 * qa * dt);
  q.block<3, 3>(kEkfBa, kEkfBa) = Eigen::Matrix3d::Identity() *
                                  (params.imu.accel_bias_walk * params.imu.accel_bias_walk * dt);
  q.block<3, 3>(kEkfBg, kEkfBg) = Eigen::Matrix3d::Identity() *
                                  (params.imu.gyro_bias_walk * params.imu.gyro_bias_walk * dt);
  q(kEkfClk, kEkfClk) = params.clock_walk_sigma * params.clock_walk_sigma * dt;

  out.cov = f * s.cov * f.transpose() + q;
  out.symmetrize();
  return out;
}

/// Scalar pseudorange update in Joseph form with a gate at gate_sigma
/// standard deviations of the innovation; gated updates leave the state
/// untouched apart from the reject counter.
inline EkfState ekf_update_pseudorange(const EkfState& s, const SatObservation& obs,
                                       const EkfParams& params) {
  if (!(obs.sigma > 0.0)) throw std::invalid_argument("ekf_update: sigma must be > 0");

  const Eigen::Vector3d to_sat = obs.sat_pos - s.nominal.p;
  const double range = to_sat.norm();
  const Eigen::Vector3d los = to_sat / range;
  const double predicted = range + s.clock.bias_m;
  const double innovation = obs.pseudorange - predicted;

  Eigen::Matrix<double, 1, kEkfDim> h = Eigen::Matrix<double, 1, kEkfDim>::Zero();
  h.block<1, 3>(0, kEkfPos) = -los.transpose();
  h(0, kEkfClk) = 1.0;

  const double innovation_var = (h * s.cov * h.transpose())(0, 0) + obs.sigma * obs.sigma;
  if (std::abs(innovation) > params.gate_sigma * std::sqrt(innovation_var)) {
    EkfState out = s;
    out.rejected_count += 1;
    return out;
  }

  const Eigen::Matrix<double, kEkfDim, 1> k = s.cov * h.transpose() / innovation_var;
  const Eigen::Matrix<double, kEkfDim, 1> dx = k * innovation;

  EkfState out = s;
  out.nominal.R = s.nominal.R * so3_exp(dx.segment<3>(kEkfTheta));
  out.nominal.v = s.nominal.v + dx.segment<3>(kEkfVel);
  out.nominal.p = s.nominal.p + dx.segment<3>(kEkfPos);
  out.bias.accel = s.bias.accel + dx.segment<3>(kEkfBa);
  out.bias.gyro = s.bias.gyro + dx.segment<3>(kEkfBg);
  out.clock.bias_m = s.clock.bias_m + dx(kEkfClk);

  using M = Eigen::Matrix<double, kEkfDim, kEkfDim>;
  const M i_kh = M::Identity() - k * h;
  out.cov = i_kh * s.cov * i_kh.transpose() + k * (obs.sigma * obs.sigma) * k.transpose();
  out.symmetrize();
  return out;
}

}  // namespace navfuse
