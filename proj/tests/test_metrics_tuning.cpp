// Unit tests for trajectory error metrics, the empirical CDF / histogram
// reports, and the (alpha, c) grid-search tuner.

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "navfuse/geo.hpp"
#include "navfuse/metrics.hpp"
#include "navfuse/rng.hpp"
#include "navfuse/scenario.hpp"
#include "navfuse/tuning.hpp"

namespace {

using navfuse::compute_cdf;
using navfuse::compute_histogram;
using navfuse::compute_metrics;
using navfuse::ErrorMetrics;
using navfuse::ErrorMode;
using navfuse::Trajectory;

navfuse::GeodeticCoord test_origin() {
  return {37.4 * M_PI / 180.0, -122.1 * M_PI / 180.0, 30.0};
}

/// Truth trajectory sitting at the origin with the given ENU offsets applied
/// per epoch to the estimate.
struct MetricPair {
  Trajectory truth;
  Trajectory est;
};

MetricPair make_pair_with_enu_offsets(const std::vector<Eigen::Vector3d>& offsets) {
  const navfuse::FrameRef frame = navfuse::FrameRef::at(test_origin());
  const Eigen::Matrix3d r_enu_to_ecef = frame.rot_ecef_to_enu.transpose();
  const Eigen::Vector3d base = navfuse::geodetic_to_ecef(test_origin()).vec();

  MetricPair out;
  for (size_t i = 0; i < offsets.size(); ++i) {
    navfuse::TrajectorySample t;
    t.t = static_cast<double>(i);
    t.state.p = base + r_enu_to_ecef * Eigen::Vector3d(0.5 * i, 0.0, 0.0);
    out.truth.push_back(t);

    navfuse::TrajectorySample e = t;
    e.state.p += r_enu_to_ecef * offsets[i];
    out.est.push_back(e);
  }
  return out;
}

// ============================================================================
// compute_metrics
// ============================================================================

TEST(Metrics, EstimateEqualToTruthGivesAllZeros) {
  const MetricPair p = make_pair_with_enu_offsets(std::vector<Eigen::Vector3d>(
      5, Eigen::Vector3d::Zero()));
  const ErrorMetrics m = compute_metrics(p.est, p.truth, ErrorMode::Full3d);
  EXPECT_EQ(m.count, 5);
  EXPECT_EQ(m.unmatched, 0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.mean_error, 0.0);
  EXPECT_EQ(m.max_error, 0.0);
  EXPECT_EQ(m.std_dev, 0.0);
}

TEST(Metrics, NormsThreeAndFourMatchHandComputedValues) {
  const MetricPair p = make_pair_with_enu_offsets(
      {Eigen::Vector3d(3.0, 0.0, 0.0), Eigen::Vector3d(0.0, 4.0, 0.0)});
  const ErrorMetrics m = compute_metrics(p.est, p.truth, ErrorMode::Horizontal2d);
  EXPECT_NEAR(m.mean_error, 3.5, 1e-9);
  EXPECT_NEAR(m.rmse, std::sqrt(12.5), 1e-9);
  EXPECT_NEAR(m.max_error, 4.0, 1e-9);
  EXPECT_NEAR(m.std_dev, 0.5, 1e-9);
}

TEST(Metrics, ConstantOffsetCollapsesSpread) {
  const MetricPair p = make_pair_with_enu_offsets(
      std::vector<Eigen::Vector3d>(4, Eigen::Vector3d(3.0, 4.0, 0.0)));
  const ErrorMetrics m = compute_metrics(p.est, p.truth, ErrorMode::Horizontal2d);
  EXPECT_NEAR(m.rmse, 5.0, 1e-9);
  EXPECT_NEAR(m.mean_error, 5.0, 1e-9);
  EXPECT_NEAR(m.max_error, 5.0, 1e-9);
  EXPECT_NEAR(m.std_dev, 0.0, 1e-7);
  EXPECT_NEAR(m.rmse_east, 3.0, 1e-9);
  EXPECT_NEAR(m.rmse_north, 4.0, 1e-9);
  EXPECT_NEAR(m.rmse_up, 0.0, 1e-9);
}

TEST(Metrics, UpErrorsOnlyCountInThreeDimensionalMode) {
  const MetricPair p = make_pair_with_enu_offsets(
      std::vector<Eigen::Vector3d>(3, Eigen::Vector3d(0.0, 0.0, 7.0)));
  const ErrorMetrics m2 = compute_metrics(p.est, p.truth, ErrorMode::Horizontal2d);
  const ErrorMetrics m3 = compute_metrics(p.est, p.truth, ErrorMode::Full3d);
  EXPECT_NEAR(m2.rmse, 0.0, 1e-9);
  EXPECT_NEAR(m3.rmse, 7.0, 1e-9);
  EXPECT_NEAR(m3.rmse_up, 7.0, 1e-9);
}

TEST(Metrics, VarianceIdentityHoldsOnRandomErrors) {
  navfuse::Rng rng(31);
  std::vector<Eigen::Vector3d> offsets;
  for (int i = 0; i < 40; ++i) offsets.push_back(rng.gaussian3(2.0));
  const MetricPair p = make_pair_with_enu_offsets(offsets);
  for (const ErrorMode mode : {ErrorMode::Horizontal2d, ErrorMode::Full3d}) {
    const ErrorMetrics m = compute_metrics(p.est, p.truth, mode);
    const double lhs = m.std_dev * m.std_dev + m.mean_error * m.mean_error;
    EXPECT_NEAR(lhs, m.rmse * m.rmse, 1e-9 * m.rmse * m.rmse);
    EXPECT_LE(m.mean_error, m.rmse + 1e-12);
    EXPECT_LE(m.rmse, m.max_error + 1e-12);
  }
}

TEST(Metrics, EpochsBeyondHalfPeriodAreDroppedAndCounted) {
  MetricPair p = make_pair_with_enu_offsets(
      std::vector<Eigen::Vector3d>(6, Eigen::Vector3d::Zero()));
  // Truth is sampled at 1 Hz; shift one estimate epoch outside the 0.5 s
  // matching tolerance and move another inside it.
  p.est[2].t = 2.7;   // 0.3 from epoch 3: matches epoch 3
  p.est[4].t = 4.51;  // beyond tolerance of both neighbors? 0.49 from 5: matches 5
  p.est[5].t = 30.0;  // unmatched
  const ErrorMetrics m = compute_metrics(p.est, p.truth, ErrorMode::Full3d);
  EXPECT_EQ(m.count, 5);
  EXPECT_EQ(m.unmatched, 1);
}

TEST(Metrics, NoOverlapIsAnError) {
  MetricPair p = make_pair_with_enu_offsets(
      std::vector<Eigen::Vector3d>(3, Eigen::Vector3d::Zero()));
  for (auto& s : p.est) s.t += 100.0;
  EXPECT_THROW(compute_metrics(p.est, p.truth, ErrorMode::Full3d), std::invalid_argument);
  EXPECT_THROW(compute_metrics({}, p.truth, ErrorMode::Full3d), std::invalid_argument);
}

// ============================================================================
// CDF, percentiles, histogram
// ============================================================================

TEST(Cdf, LinearPercentileRule) {
  const navfuse::CdfReport r = compute_cdf({4.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(r.percentile(50.0), 2.5);
  EXPECT_DOUBLE_EQ(r.percentile(0.0), 1.0);
  EXPECT_DOUBLE_EQ(r.percentile(100.0), 4.0);
  EXPECT_DOUBLE_EQ(r.percentile(25.0), 1.75);

  ASSERT_EQ(r.points.size(), 4u);
  double prev = 0.0;
  for (const auto& [err, frac] : r.points) {
    EXPECT_GE(frac, prev);
    prev = frac;
  }
  EXPECT_DOUBLE_EQ(r.points.back().second, 1.0);
  EXPECT_TRUE(std::is_sorted(r.sorted.begin(), r.sorted.end()));
}

TEST(Cdf, AllEqualSamplesFormAStep) {
  const navfuse::CdfReport r = compute_cdf(std::vector<double>(7, 2.0));
  for (double p : {1.0, 50.0, 99.0}) EXPECT_DOUBLE_EQ(r.percentile(p), 2.0);
  for (const auto& [err, frac] : r.points) EXPECT_DOUBLE_EQ(err, 2.0);
  EXPECT_THROW(compute_cdf({}), std::invalid_argument);
}

TEST(Cdf, UniformSampleNinetyFifthPercentile) {
  navfuse::Rng rng(92);
  std::vector<double> draws(100000);
  for (double& d : draws) d = rng.uniform();
  const navfuse::CdfReport r = compute_cdf(std::move(draws));
  EXPECT_NEAR(r.percentile(95.0), 0.95, 0.01);
  EXPECT_NEAR(r.percentile(50.0), 0.50, 0.01);
}

TEST(Histogram, SixtyFourBinsCoverTheRangeAndNormalize) {
  navfuse::Rng rng(17);
  std::vector<double> errors(6400);
  for (double& e : errors) e = rng.uniform(0.0, 8.0);
  const navfuse::HistogramReport h = compute_histogram(errors);
  ASSERT_EQ(h.counts.size(), 64u);
  ASSERT_EQ(h.edges.size(), 65u);
  int total = 0;
  double mass = 0.0;
  for (size_t i = 0; i < h.counts.size(); ++i) {
    total += h.counts[i];
    mass += h.density[i] * h.bin_width;
  }
  EXPECT_EQ(total, 6400);
  EXPECT_NEAR(mass, 1.0, 1e-12);
  const double max = *std::max_element(errors.begin(), errors.end());
  EXPECT_DOUBLE_EQ(h.edges.back(), max);
  EXPECT_GT(h.counts.back(), 0);  // the max sample lands in the final bin
}

TEST(Histogram, AllZeroErrorsFallInFirstBin) {
  const navfuse::HistogramReport h = compute_histogram(std::vector<double>(10, 0.0));
  EXPECT_EQ(h.counts.front(), 10);
  EXPECT_DOUBLE_EQ(h.bin_width, 1.0);
}

TEST(Reports, CsvEmittersWriteStableHeaders) {
  const std::string dir = testing::TempDir();
  const navfuse::CdfReport r = compute_cdf({1.0, 2.0});
  navfuse::write_cdf_csv(dir + "navfuse_cdf.csv", r);
  std::ifstream cdf_in(dir + "navfuse_cdf.csv");
  std::string line;
  std::getline(cdf_in, line);
  EXPECT_EQ(line, "error,cumulative_fraction");

  ErrorMetrics m;
  m.count = 2;
  m.rmse = 1.5;
  navfuse::write_metrics(dir + "navfuse_metrics.txt", m, "2d");
  std::ifstream met_in(dir + "navfuse_metrics.txt");
  std::stringstream buf;
  buf << met_in.rdbuf();
  const std::string text = buf.str();
  for (const char* field : {"RMSE=", "ME=", "MaxE=", "SD=", "mode=2d"}) {
    EXPECT_NE(text.find(field), std::string::npos) << field;
  }
}

// ============================================================================
// Grid search
// ============================================================================

navfuse::SimulatedScenario tuning_scenario(double duration, double outlier_fraction) {
  navfuse::ScenarioConfig cfg;
  cfg.duration = duration;
  cfg.seed = 21;
  // A short straight leg: the default urban loop needs implausible speeds to
  // finish inside a brief test window.
  cfg.route = {{{0.0, 0.0, 0.0}, 3.5}, {{6.0 * duration, 0.0, 0.0}, 3.5}};
  cfg.outlier_fraction = outlier_fraction;
  cfg.outlier_windows = {{2, static_cast<int>(duration)}};
  navfuse::SimulatedScenario sc = navfuse::generate_scenario(cfg);
  if (outlier_fraction > 0.0) navfuse::inject_outliers(sc.obs, cfg);
  return sc;
}

navfuse::FusionOptions tuning_options() {
  navfuse::FusionOptions opts;
  navfuse::ScenarioConfig cfg;
  opts.imu_noise = cfg.imu_noise;
  opts.clock_walk_sigma = cfg.clock_walk_sigma;
  return opts;
}

TEST(GridSearch, DefaultGridsEnumerateAllCellsAndTiesPreferLargerParams) {
  const auto alphas = navfuse::default_alpha_grid();
  const auto cs = navfuse::default_c_grid();
  ASSERT_EQ(alphas.size(), 17u);
  ASSERT_EQ(cs.size(), 20u);
  EXPECT_DOUBLE_EQ(alphas.front(), -4.0);
  EXPECT_DOUBLE_EQ(alphas.back(), 4.0);
  EXPECT_DOUBLE_EQ(cs.front(), 0.1);
  EXPECT_DOUBLE_EQ(cs.back(), 2.0);

  // With the iteration budget zeroed every cell scores the identical initial
  // estimate, so all 340 objectives tie and the tie rule must pick the least
  // aggressive kernel: largest alpha, then largest c.
  const navfuse::SimulatedScenario sc = tuning_scenario(10.0, 0.0);
  navfuse::FusionOptions opts = tuning_options();
  opts.solver.max_iterations = 0;
  const navfuse::TuneResult r =
      navfuse::grid_search(sc.imu, sc.obs, nullptr, alphas, cs,
                           navfuse::TuneObjective::ResidualMse, opts);
  ASSERT_EQ(r.grid.size(), 340u);
  EXPECT_EQ(r.failed_count, 0);
  for (const auto& cell : r.grid) {
    ASSERT_FALSE(cell.failed);
    EXPECT_DOUBLE_EQ(cell.objective, r.grid.front().objective);
  }
  EXPECT_DOUBLE_EQ(r.best_alpha, 4.0);
  EXPECT_DOUBLE_EQ(r.best_c, 2.0);
}

TEST(GridSearch, SingletonGridEqualsDirectRun) {
  const navfuse::SimulatedScenario sc = tuning_scenario(12.0, 0.0);
  navfuse::FusionOptions opts = tuning_options();

  const navfuse::TuneResult r =
      navfuse::grid_search(sc.imu, sc.obs, nullptr, {-0.75}, {1.2},
                           navfuse::TuneObjective::ResidualMse, opts);

  opts.kernel = navfuse::RobustKernel::barron(-0.75, 1.2);
  const navfuse::BatchFusionRun direct = navfuse::run_batch_fusion(sc.imu, sc.obs, opts);
  ASSERT_EQ(r.grid.size(), 1u);
  EXPECT_EQ(r.best_objective, direct.residual_mse);
  EXPECT_DOUBLE_EQ(r.best_alpha, -0.75);
  EXPECT_DOUBLE_EQ(r.best_c, 1.2);
}

TEST(GridSearch, BoundsAreValidatedWithFloatSlack) {
  const navfuse::SimulatedScenario sc = tuning_scenario(6.0, 0.0);
  const navfuse::FusionOptions opts = tuning_options();
  const auto run = [&](std::vector<double> alphas, std::vector<double> cs) {
    return navfuse::grid_search(sc.imu, sc.obs, nullptr, alphas, cs,
                                navfuse::TuneObjective::ResidualMse, opts);
  };
  EXPECT_THROW(run({}, {1.0}), std::invalid_argument);
  EXPECT_THROW(run({0.0}, {}), std::invalid_argument);
  EXPECT_THROW(run({4.2}, {1.0}), std::invalid_argument);
  EXPECT_THROW(run({-4.2}, {1.0}), std::invalid_argument);
  EXPECT_THROW(run({0.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(run({0.0}, {2.2}), std::invalid_argument);
  // Values epsilon past the bounds (from min + k * step assembly) must pass.
  EXPECT_NO_THROW(run({4.0 + 5e-10}, {2.0 + 5e-10}));
  EXPECT_THROW(navfuse::grid_search(sc.imu, sc.obs, nullptr, {0.0}, {1.0},
                                    navfuse::TuneObjective::GtRmse, opts),
               std::invalid_argument);
}

TEST(GridSearch, EveryCellFailingIsAnError) {
  const navfuse::SimulatedScenario sc = tuning_scenario(6.0, 0.0);
  EXPECT_THROW(navfuse::grid_search(sc.imu, {}, nullptr, {0.0}, {1.0},
                                    navfuse::TuneObjective::ResidualMse, tuning_options()),
               std::runtime_error);
}

TEST(GridSearch, GtRmseObjectivePrefersRobustKernelUnderOutliers) {
  const navfuse::SimulatedScenario sc = tuning_scenario(40.0, 0.3);
  const navfuse::TuneResult r =
      navfuse::grid_search(sc.imu, sc.obs, &sc.truth, {-2.0, 0.0, 2.0}, {1.2},
                           navfuse::TuneObjective::GtRmse, tuning_options());
  EXPECT_EQ(r.failed_count, 0);
  EXPECT_LT(r.best_alpha, 2.0);
  EXPECT_EQ(r.objective, navfuse::TuneObjective::GtRmse);
}

TEST(GridSearch, ThreadPoolAssemblyMatchesSerialOrder) {
  const navfuse::SimulatedScenario sc = tuning_scenario(8.0, 0.0);
  const navfuse::FusionOptions opts = tuning_options();
  const std::vector<double> alphas = {-1.0, 1.0};
  const std::vector<double> cs = {0.8, 1.6};
  const navfuse::TuneResult serial =
      navfuse::grid_search(sc.imu, sc.obs, nullptr, alphas, cs,
                           navfuse::TuneObjective::ResidualMse, opts, 1);
  const navfuse::TuneResult pooled =
      navfuse::grid_search(sc.imu, sc.obs, nullptr, alphas, cs,
                           navfuse::TuneObjective::ResidualMse, opts, 4);
  ASSERT_EQ(serial.grid.size(), pooled.grid.size());
  for (size_t i = 0; i < serial.grid.size(); ++i) {
    EXPECT_DOUBLE_EQ(serial.grid[i].alpha, pooled.grid[i].alpha);
    EXPECT_DOUBLE_EQ(serial.grid[i].c, pooled.grid[i].c);
    EXPECT_EQ(serial.grid[i].objective, pooled.grid[i].objective);
  }
  EXPECT_EQ(serial.best_objective, pooled.best_objective);
}

}  // namespace
