#pragma once

// End-to-end fusion runs: incremental tightly / loosely coupled factor-graph
// estimation with optional fixed-lag windowing, plus the WLS and EKF baseline
// runners. Each estimator emits a per-epoch solution snapshot and per-epoch
// wall-clock timings.

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "navfuse/csv_io.hpp"
#include "navfuse/ekf.hpp"
#include "navfuse/factor_graph.hpp"
#include "navfuse/geo.hpp"
#include "navfuse/preintegration.hpp"
#include "navfuse/solver.hpp"
#include "navfuse/types.hpp"
#include "navfuse/wls.hpp"

namespace navfuse {

struct FusionOptions {
  bool tightly_coupled{true};
  std::optional<RobustKernel> kernel;  // GNSS factors only
  int window{0};                       // fixed-lag length in epochs, 0 = full batch
  SolverConfig solver;
  ImuNoiseParams imu_noise;
  double clock_walk_sigma{0.5};  // m per sqrt(epoch), matches the simulator key

  // Epoch-0 prior sigmas. The rotation prior is a weak gauge fix; attitude is
  // re-initialized from fix differencing once the platform moves.
  double prior_rot_sigma{10.0};
  double prior_vel_sigma{10.0};
  double prior_gyro_bias_sigma{0.05};
  double prior_accel_bias_sigma{0.5};
};

struct FusionResult {
  Trajectory solution;               // snapshot at each epoch's solve
  std::vector<double> clock;         // receiver clock estimate per epoch (TC)
  std::vector<double> epoch_seconds; // wall time per processed epoch
  std::vector<SolveReport> reports;
  bool all_converged{true};
};

namespace detail {

inline double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

/// Preintegrates the samples covering (t_prev, t_next]; `cursor` advances
/// past the consumed samples.
inline PreintegratedImu preintegrate_span(const std::vector<ImuSample>& imu, size_t& cursor,
                                          double t_prev, double t_next, const ImuBias& bias_lin,
                                          const ImuNoiseParams& noise) {
  PreintegratedImu pim;
  pim.bias_lin = bias_lin;
  while (cursor < imu.size() && imu[cursor].t < t_prev - 1e-9) ++cursor;
  while (cursor < imu.size() && imu[cursor].t < t_next - 1e-9) {
    const double t_end = cursor + 1 < imu.size()
                             ? std::min(imu[cursor + 1].t, t_next)
                             : t_next;
    const double dt = t_end - imu[cursor].t;
    if (dt > 0.0) integrate_sample(pim, imu[cursor], dt, noise);
    ++cursor;
  }
  if (pim.dt_total <= 0.0) {
    throw std::runtime_error("no IMU samples between epochs " + std::to_string(t_prev) + " and " +
                             std::to_string(t_next));
  }
  return pim;
}

}  // namespace detail

/// Incremental factor-graph fusion. Epochs are processed in order: add the
/// epoch's variables and factors, re-solve, snapshot the epoch estimate, then
/// (when windowed) marginalize out-of-window states.
inline FusionResult run_fusion(const std::vector<ImuSample>& imu,
                               const std::vector<ObsEpoch>& obs, const FusionOptions& opts) {
  if (obs.empty()) throw std::invalid_argument("run_fusion: no observation epochs");
  const bool tc = opts.tightly_coupled;

  FusionResult result;
  result.solution.reserve(obs.size());

  FactorGraph graph;
  std::vector<WlsSolution> fixes(obs.size());
  std::vector<Eigen::Matrix3d> fix_cov(obs.size());
  bool aligned = false;
  size_t imu_cursor = 0;

  FrameRef frame;
  GravityVector gravity;
  Eigen::Matrix3d r_enu_to_ecef = Eigen::Matrix3d::Identity();

  for (size_t e = 0; e < obs.size(); ++e) {
    const double t_start = detail::now_seconds();
    const double t_e = obs[e].t;
    const int epoch = static_cast<int>(e);

    // Single-point fix: epoch-0 initialization, LC measurements, alignment.
    if (e == 0) {
      fixes[0] = wls_solve_epoch(obs[0].obs, EcefCoord{0.0, 0.0, 0.0});
      frame = FrameRef::at(ecef_to_geodetic(fixes[0].position));
      r_enu_to_ecef = frame.rot_ecef_to_enu.transpose();
      gravity.g = -9.81 * r_enu_to_ecef.col(2);
    } else {
      try {
        fixes[e] = wls_solve_epoch(obs[e].obs, fixes[e - 1].position, fixes[e - 1].clock_m);
      } catch (const std::runtime_error&) {
        fixes[e] = fixes[e - 1];  // degenerate epoch; fall back for init only
      }
    }
    fix_cov[e] = fixes[e].covariance.topLeftCorner<3, 3>();

    graph.add_epoch(epoch, t_e, tc);

    if (e == 0) {
      PoseBlock pose0;
      pose0.R = r_enu_to_ecef;  // level, yaw 0 until alignment
      pose0.p = fixes[0].position.vec();
      graph.estimate().poses[0] = pose0;
      graph.estimate().velocities[0] = Eigen::Vector3d::Zero();
      graph.estimate().biases[0] = ImuBias{};
      if (tc) graph.estimate().clocks[0] = fixes[0].clock_m;

      graph.add(std::make_shared<PriorRotationFactor>(
          0, pose0.R,
          Eigen::Matrix3d(Eigen::Vector3d::Constant(opts.prior_rot_sigma * opts.prior_rot_sigma)
                              .asDiagonal())));
      graph.add(std::make_shared<PriorVelocityFactor>(
          0, Eigen::Vector3d::Zero(),
          Eigen::Matrix3d(Eigen::Vector3d::Constant(opts.prior_vel_sigma * opts.prior_vel_sigma)
                              .asDiagonal())));
      Eigen::Matrix<double, 6, 1> bias_var;
      bias_var.head<3>().setConstant(opts.prior_gyro_bias_sigma * opts.prior_gyro_bias_sigma);
      bias_var.tail<3>().setConstant(opts.prior_accel_bias_sigma * opts.prior_accel_bias_sigma);
      graph.add(std::make_shared<PriorBiasFactor>(
          0, ImuBias{}, Eigen::Matrix<double, 6, 6>(bias_var.asDiagonal())));
    } else {
      const double t_prev = obs[e - 1].t;
      const ImuBias bias_lin = graph.estimate().biases.at(epoch - 1);
      PreintegratedImu pim =
          detail::preintegrate_span(imu, imu_cursor, t_prev, t_e, bias_lin, opts.imu_noise);

      const NavState prev = graph.estimate().nav_state(epoch - 1);
      const NavState pred = predict_state(prev, bias_lin, pim, gravity);
      graph.estimate().poses[epoch] = {pred.R, pred.p};
      graph.estimate().velocities[epoch] = pred.v;
      graph.estimate().biases[epoch] = bias_lin;
      if (tc) graph.estimate().clocks[epoch] = graph.estimate().clocks.at(epoch - 1);

      add_imu_factor(graph, epoch - 1, epoch, std::move(pim), gravity);
      add_random_walk_factors(graph, epoch - 1, epoch, opts.imu_noise, opts.clock_walk_sigma);
    }

    if (tc) {
      for (const auto& o : obs[e].obs) add_pseudorange_factor(graph, epoch, o, opts.kernel);
    } else {
      add_gnss_position_factor(graph, epoch, fixes[e].position, fix_cov[e], opts.kernel);
    }

    // In-motion alignment: once fix differencing shows horizontal speed, set
    // every in-graph pose/velocity from the fix track before solving.
    if (!aligned && e >= 1) {
      const double dt_e = obs[e].t - obs[e - 1].t;
      const Eigen::Vector3d v_enu =
          frame.rot_ecef_to_enu * (fixes[e].position.vec() - fixes[e - 1].position.vec()) / dt_e;
      if (v_enu.head<2>().norm() > 0.5) {
        aligned = true;
        for (auto& [k, pose] : graph.estimate().poses) {
          const size_t lo = k > 0 ? static_cast<size_t>(k - 1) : 0;
          const size_t hi = std::min(static_cast<size_t>(k + 1), e);
          const Eigen::Vector3d d = fixes[hi].position.vec() - fixes[lo].position.vec();
          const double span = obs[hi].t - obs[lo].t;
          const Eigen::Vector3d vel = d / span;
          const Eigen::Vector3d vel_enu = frame.rot_ecef_to_enu * vel;
          double yaw = 0.0;
          if (vel_enu.head<2>().norm() > 0.1) yaw = std::atan2(vel_enu.y(), vel_enu.x());
          pose.R = r_enu_to_ecef *
                   Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
          pose.p = fixes[k].position.vec();
          graph.estimate().velocities.at(k) = vel;
          if (tc) graph.estimate().clocks.at(k) = fixes[k].clock_m;
        }
      }
    }

    SolveReport report = optimize(graph, opts.solver);
    result.all_converged = result.all_converged && report.converged;
    result.reports.push_back(std::move(report));

    TrajectorySample snap;
    snap.t = t_e;
    snap.state = graph.estimate().nav_state(epoch);
    result.solution.push_back(snap);
    result.clock.push_back(tc ? graph.estimate().clocks.at(epoch) : 0.0);

    if (opts.window > 0) slide_window(graph, epoch, opts.window);

    result.epoch_seconds.push_back(detail::now_seconds() - t_start);
  }
  return result;
}

// ===========================================================================
// Baseline runners
// ===========================================================================

struct BaselineResult {
  Trajectory solution;
  std::vector<double> clock;
  std::vector<double> epoch_seconds;
  int rejected_count{0};  // EKF only
};

/// Epoch-wise single-point WLS. Velocity in the output is fix differencing;
/// orientation is a level placeholder (WLS does not estimate attitude).
inline BaselineResult run_wls_baseline(const std::vector<ObsEpoch>& obs) {
  if (obs.empty()) throw std::invalid_argument("run_wls_baseline: no epochs");
  BaselineResult result;
  EcefCoord init{0.0, 0.0, 0.0};
  double clk = 0.0;
  for (size_t e = 0; e < obs.size(); ++e) {
    const double t_start = detail::now_seconds();
    const WlsSolution sol = wls_solve_epoch(obs[e].obs, init, clk);
    init = sol.position;
    clk = sol.clock_m;
    TrajectorySample snap;
    snap.t = obs[e].t;
    snap.state.p = sol.position.vec();
    snap.state.R = Eigen::Matrix3d::Identity();
    if (e > 0) {
      const double dt = obs[e].t - obs[e - 1].t;
      snap.state.v = (snap.state.p - result.solution.back().state.p) / dt;
    }
    result.solution.push_back(snap);
    result.clock.push_back(sol.clock_m);
    result.epoch_seconds.push_back(detail::now_seconds() - t_start);
  }
  return result;
}

struct EkfOptions {
  EkfParams params;
  double init_rot_sigma{0.5};
  double init_vel_sigma{5.0};
  double init_gyro_bias_sigma{0.05};
  double init_accel_bias_sigma{0.5};
};

/// Tightly coupled error-state EKF over the same data: initialize from the
/// first WLS fix, propagate through the IMU stream, update per pseudorange.
inline BaselineResult run_ekf_baseline(const std::vector<ImuSample>& imu,
                                       const std::vector<ObsEpoch>& obs,
                                       const EkfOptions& opts = {}) {
  if (obs.empty()) throw std::invalid_argument("run_ekf_baseline: no epochs");

  const WlsSolution fix0 = wls_solve_epoch(obs[0].obs, EcefCoord{0.0, 0.0, 0.0});
  const FrameRef frame = FrameRef::at(ecef_to_geodetic(fix0.position));
  const Eigen::Matrix3d r_enu_to_ecef = frame.rot_ecef_to_enu.transpose();

  EkfState s;
  s.nominal.R = r_enu_to_ecef;
  s.nominal.v.setZero();
  s.nominal.p = fix0.position.vec();
  s.clock.bias_m = fix0.clock_m;
  s.gravity.g = -9.81 * r_enu_to_ecef.col(2);
  s.cov.setZero();
  s.cov.block<3, 3>(kEkfTheta, kEkfTheta) =
      Eigen::Matrix3d::Identity() * opts.init_rot_sigma * opts.init_rot_sigma;
  s.cov.block<3, 3>(kEkfVel, kEkfVel) =
      Eigen::Matrix3d::Identity() * opts.init_vel_sigma * opts.init_vel_sigma;
  s.cov.block<3, 3>(kEkfPos, kEkfPos) = fix0.covariance.topLeftCorner<3, 3>();
  s.cov.block<3, 3>(kEkfBa, kEkfBa) =
      Eigen::Matrix3d::Identity() * opts.init_accel_bias_sigma * opts.init_accel_bias_sigma;
  s.cov.block<3, 3>(kEkfBg, kEkfBg) =
      Eigen::Matrix3d::Identity() * opts.init_gyro_bias_sigma * opts.init_gyro_bias_sigma;
  s.cov(kEkfClk, kEkfClk) = fix0.covariance(3, 3);

  BaselineResult result;
  size_t cursor = 0;
  for (size_t e = 0; e < obs.size(); ++e) {
    const double t_start = detail::now_seconds();
    if (e > 0) {
      const double t_prev = obs[e - 1].t;
      const double t_e = obs[e].t;
      while (cursor < imu.size() && imu[cursor].t < t_prev - 1e-9) ++cursor;
      while (cursor < imu.size() && imu[cursor].t < t_e - 1e-9) {
        const double t_end =
            cursor + 1 < imu.size() ? std::min(imu[cursor + 1].t, t_e) : t_e;
        const double dt = t_end - imu[cursor].t;
        if (dt > 0.0) s = ekf_propagate(s, imu[cursor], dt, opts.params);
        ++cursor;
      }
    }
    for (const auto& o : obs[e].obs) s = ekf_update_pseudorange(s, o, opts.params);

    TrajectorySample snap;
    snap.t = obs[e].t;
    snap.state = s.nominal;
    result.solution.push_back(snap);
    result.clock.push_back(s.clock.bias_m);
    result.epoch_seconds.push_back(detail::now_seconds() - t_start);
  }
  result.rejected_count = s.rejected_count;
  return result;
}

}  // namespace navfuse
