#pragma once

// (alpha, c) grid search for the adaptive kernel: one full batch solve per
// cell, independent cells evaluated concurrently, deterministic assembly.

#include <atomic>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "navfuse/metrics.hpp"
#include "navfuse/pipeline.hpp"

namespace navfuse {

// ===========================================================================
// One-shot batch solve (shared by tuning and tests)
// ===========================================================================

struct BatchFusionRun {
  Trajectory solution;   // smoothed estimate at every epoch
  std::vector<double> clock;
  SolveReport report;
  double residual_mse{0.0};  // mean squared whitened GNSS residual at the solution
};

/// Builds the complete graph over all epochs (initialized from the WLS fix
/// track) and solves it once.
inline BatchFusionRun run_batch_fusion(const std::vector<ImuSample>& imu,
                                       const std::vector<ObsEpoch>& obs,
                                       const FusionOptions& opts) {
  if (obs.empty()) throw std::invalid_argument("run_batch_fusion: no observation epochs");
  const bool tc = opts.tightly_coupled;
  const int n = static_cast<int>(obs.size());

  std::vector<WlsSolution> fixes(obs.size());
  fixes[0] = wls_solve_epoch(obs[0].obs, EcefCoord{0.0, 0.0, 0.0});
  for (int e = 1; e < n; ++e) {
    try {
      fixes[e] = wls_solve_epoch(obs[e].obs, fixes[e - 1].position, fixes[e - 1].clock_m);
    } catch (const std::runtime_error&) {
      fixes[e] = fixes[e - 1];
    }
  }
  const FrameRef frame = FrameRef::at(ecef_to_geodetic(fixes[0].position));
  const Eigen::Matrix3d r_enu_to_ecef = frame.rot_ecef_to_enu.transpose();
  GravityVector gravity;
  gravity.g = -9.81 * r_enu_to_ecef.col(2);

  FactorGraph graph;
  size_t cursor = 0;
  for (int e = 0; e < n; ++e) {
    graph.add_epoch(e, obs[e].t, tc);

    // init: fix positions, fix-differenced velocity, yaw along the track
    const int lo = std::max(e - 1, 0);
    const int hi = std::min(e + 1, n - 1);
    Eigen::Vector3d vel = Eigen::Vector3d::Zero();
    if (hi > lo) {
      vel = (fixes[hi].position.vec() - fixes[lo].position.vec()) / (obs[hi].t - obs[lo].t);
    }
    const Eigen::Vector3d vel_enu = frame.rot_ecef_to_enu * vel;
    double yaw = 0.0;
    if (vel_enu.head<2>().norm() > 0.1) yaw = std::atan2(vel_enu.y(), vel_enu.x());
    PoseBlock pose;
    pose.R = r_enu_to_ecef * Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    pose.p = fixes[e].position.vec();
    graph.estimate().poses[e] = pose;
    graph.estimate().velocities[e] = vel;
    graph.estimate().biases[e] = ImuBias{};
    if (tc) graph.estimate().clocks[e] = fixes[e].clock_m;

    if (e == 0) {
      graph.add(std::make_shared<PriorRotationFactor>(
          0, pose.R,
          Eigen::Matrix3d(Eigen::Vector3d::Constant(opts.prior_rot_sigma * opts.prior_rot_sigma)
                              .asDiagonal())));
      graph.add(std::make_shared<PriorVelocityFactor>(
          0, vel,
          Eigen::Matrix3d(Eigen::Vector3d::Constant(opts.prior_vel_sigma * opts.prior_vel_sigma)
                              .asDiagonal())));
      Eigen::Matrix<double, 6, 1> bias_var;
      bias_var.head<3>().setConstant(opts.prior_gyro_bias_sigma * opts.prior_gyro_bias_sigma);
      bias_var.tail<3>().setConstant(opts.prior_accel_bias_sigma * opts.prior_accel_bias_sigma);
      graph.add(std::make_shared<PriorBiasFactor>(
          0, ImuBias{}, Eigen::Matrix<double, 6, 6>(bias_var.asDiagonal())));
    } else {
      PreintegratedImu pim = detail::preintegrate_span(imu, cursor, obs[e - 1].t, obs[e].t,
                                                       ImuBias{}, opts.imu_noise);
      add_imu_factor(graph, e - 1, e, std::move(pim), gravity);
      add_random_walk_factors(graph, e - 1, e, opts.imu_noise, opts.clock_walk_sigma);
    }

    if (tc) {
      for (const auto& o : obs[e].obs) add_pseudorange_factor(graph, e, o, opts.kernel);
    } else {
      add_gnss_position_factor(graph, e, fixes[e].position,
                               fixes[e].covariance.topLeftCorner<3, 3>(), opts.kernel);
    }
  }

  BatchFusionRun out;
  out.report = optimize(graph, opts.solver);

  out.solution.reserve(obs.size());
  for (int e = 0; e < n; ++e) {
    TrajectorySample snap;
    snap.t = obs[e].t;
    snap.state = graph.estimate().nav_state(e);
    out.solution.push_back(snap);
    out.clock.push_back(tc ? graph.estimate().clocks.at(e) : 0.0);
  }

  double sum_sq = 0.0;
  int count = 0;
  for (const auto& f : graph.factors()) {
    if (!f->kernel()) continue;  // kernels mark exactly the GNSS factors
    sum_sq += f->error(graph.estimate()).squaredNorm();
    count += f->dim();
  }
  out.residual_mse = count > 0 ? sum_sq / count : 0.0;
  return out;
}

// ===========================================================================
// Grid search
// ===========================================================================

enum class TuneObjective { ResidualMse, GtRmse };

struct TuneCell {
  double alpha{0.0};
  double c{0.0};
  double objective{0.0};
  bool failed{false};
};

struct TuneResult {
  std::vector<TuneCell> grid;  // row-major over (alpha, c), deterministic order
  double best_alpha{0.0};
  double best_c{0.0};
  double best_objective{0.0};
  TuneObjective objective{TuneObjective::ResidualMse};
  int failed_count{0};
};

inline std::vector<double> default_alpha_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 16; ++i) g.push_back(-4.0 + 0.5 * i);
  return g;
}

inline std::vector<double> default_c_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 20; ++i) g.push_back(i / 10.0);
  return g;
}

/// Full RFGO solve per (alpha, c) cell. Ties break toward larger alpha, then
/// larger c (the least aggressive kernel). Failed cells are excluded from the
/// argmin and counted.
inline TuneResult grid_search(const std::vector<ImuSample>& imu, const std::vector<ObsEpoch>& obs,
                              const Trajectory* truth, const std::vector<double>& alphas,
                              const std::vector<double>& cs, TuneObjective objective,
                              FusionOptions base_opts, int threads = 0) {
  if (alphas.empty() || cs.empty()) throw std::invalid_argument("grid_search: empty grid");
  // Bounds carry a 1e-9 slack: grids assembled by repeated float addition
  // (min + k * step) land epsilon past the nominal endpoint.
  for (double a : alphas) {
    if (a < -4.0 - 1e-9 || a > 4.0 + 1e-9) {
      throw std::invalid_argument("grid_search: alpha outside [-4, 4]");
    }
  }
  for (double c : cs) {
    if (!(c > 0.0) || c > 2.0 + 1e-9) {
      throw std::invalid_argument("grid_search: c outside (0, 2]");
    }
  }
  if (objective == TuneObjective::GtRmse && truth == nullptr) {
    throw std::invalid_argument("grid_search: gt-rmse objective needs a truth trajectory");
  }

  TuneResult result;
  result.objective = objective;
  result.grid.resize(alphas.size() * cs.size());

  const auto eval_cell = [&](size_t idx) {
    TuneCell& cell = result.grid[idx];
    cell.alpha = alphas[idx / cs.size()];
    cell.c = cs[idx % cs.size()];
    try {
      FusionOptions opts = base_opts;
      opts.kernel = RobustKernel::barron(cell.alpha, cell.c);
      const BatchFusionRun run = run_batch_fusion(imu, obs, opts);
      if (objective == TuneObjective::ResidualMse) {
        cell.objective = run.residual_mse;
      } else {
        cell.objective = compute_metrics(run.solution, *truth, ErrorMode::Horizontal2d).rmse;
      }
    } catch (const std::exception&) {
      cell.failed = true;
    }
  };

  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, 16));
  if (n_threads == 1 || result.grid.size() == 1) {
    for (size_t i = 0; i < result.grid.size(); ++i) eval_cell(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < result.grid.size(); i = next.fetch_add(1)) {
          eval_cell(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  bool have_best = false;
  for (const auto& cell : result.grid) {
    if (cell.failed) {
      result.failed_count += 1;
      continue;
    }
    const bool better =
        !have_best || cell.objective < result.best_objective ||
        (cell.objective == result.best_objective &&
         (cell.alpha > result.best_alpha ||
          (cell.alpha == result.best_alpha && cell.c > result.best_c)));
    if (better) {
      result.best_alpha = cell.alpha;
      result.best_c = cell.c;
      result.best_objective = cell.objective;
      have_best = true;
    }
  }
  if (!have_best) throw std::runtime_error("grid_search: every cell failed");
  return result;
}

inline void write_tune_csv(const std::string& path, const TuneResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "alpha,c,objective,failed\n";
  char buf[96];
  for (const auto& cell : r.grid) {
    std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.9g,%d\n", cell.alpha, cell.c,
                  cell.failed ? 0.0 : cell.objective, cell.failed ? 1 : 0);
    out << buf;
  }
}

}  // namespace navfuse
