// navfuse command-line front end: scenario simulation, factor-graph fusion,
// WLS/EKF baselines, kernel-parameter tuning, and metric/CDF reporting.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "navfuse/csv_io.hpp"
#include "navfuse/metrics.hpp"
#include "navfuse/pipeline.hpp"
#include "navfuse/scenario.hpp"
#include "navfuse/tuning.hpp"

namespace {

using namespace navfuse;

struct LossFlags {
  std::string loss{"barron"};
  double alpha{-0.75};
  double c{1.2};
  double huber_k{1.0};
  double tukey_k{1.0};
  double cauchy_k{1.0};

  std::optional<RobustKernel> kernel() const {
    if (loss == "l2") return std::nullopt;
    if (loss == "huber") return RobustKernel::huber(huber_k);
    if (loss == "tukey") return RobustKernel::tukey(tukey_k);
    if (loss == "cauchy") return RobustKernel::cauchy(cauchy_k);
    if (loss == "barron") return RobustKernel::barron(alpha, c);
    throw CLI::ValidationError("--loss", "unknown loss '" + loss + "'");
  }
};

void add_loss_flags(CLI::App* cmd, LossFlags& f) {
  cmd->add_option("--loss", f.loss, "Robust loss: l2|huber|tukey|cauchy|barron")
      ->check(CLI::IsMember({"l2", "huber", "tukey", "cauchy", "barron"}))
      ->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "Barron shape parameter")->capture_default_str();
  cmd->add_option("--c", f.c, "Barron scale parameter")->capture_default_str();
  cmd->add_option("--huber-k", f.huber_k, "Huber threshold")->capture_default_str();
  cmd->add_option("--tukey-k", f.tukey_k, "Tukey threshold")->capture_default_str();
  cmd->add_option("--cauchy-k", f.cauchy_k, "Cauchy scale")->capture_default_str();
}

ScenarioConfig config_for_dataset(const std::string& in_dir, const std::string& override_path) {
  const std::string path =
      override_path.empty() ? in_dir + "/scenario.cfg" : override_path;
  return load_scenario_config(path);
}

void write_timing(const std::string& path, const std::vector<double>& epoch_seconds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  std::vector<double> sorted = epoch_seconds;
  std::sort(sorted.begin(), sorted.end());
  const double mean = sorted.empty() ? 0.0
                                     : std::accumulate(sorted.begin(), sorted.end(), 0.0) /
                                           static_cast<double>(sorted.size());
  const double median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
  char buf[128];
  std::snprintf(buf, sizeof(buf), "epochs=%zu\nmean_epoch_s=%.6f\nmedian_epoch_s=%.6f\n",
                sorted.size(), mean, median);
  out << buf;
  for (size_t i = 0; i < epoch_seconds.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "epoch=%zu wall_s=%.6f\n", i, epoch_seconds[i]);
    out << buf;
  }
}

void print_timing_summary(const char* label, const std::vector<double>& epoch_seconds) {
  if (epoch_seconds.empty()) return;
  const double mean = std::accumulate(epoch_seconds.begin(), epoch_seconds.end(), 0.0) /
                      static_cast<double>(epoch_seconds.size());
  std::printf("%s: %zu epochs, mean %.4f s/epoch\n", label, epoch_seconds.size(), mean);
}

// --- simulate --------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const ScenarioConfig cfg = load_scenario_config(config_path);
  SimulatedScenario sc = generate_scenario(cfg);
  const OutlierMask mask = inject_outliers(sc.obs, cfg);

  write_imu_csv(out_dir + "/imu.csv", sc.imu);
  write_obs_csv(out_dir + "/obs.csv", sc.obs);
  write_trajectory_csv(out_dir + "/truth.csv", sc.truth);
  std::filesystem::copy_file(config_path, out_dir + "/scenario.cfg",
                             std::filesystem::copy_options::overwrite_existing);

  {  // simulation metadata, never read by estimators
    std::ofstream out(out_dir + "/outliers.csv");
    out << "epoch,obs_index,sat_id,bias\n";
    char buf[96];
    for (size_t e = 0; e < mask.flagged.size(); ++e) {
      for (size_t i = 0; i < mask.flagged[e].size(); ++i) {
        if (!mask.flagged[e][i]) continue;
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%d,%.9f\n", e, i, sc.obs[e].obs[i].sat_id,
                      mask.bias[e][i]);
        out << buf;
      }
    }
  }
  std::printf("simulate: %zu epochs, %zu imu samples, %d injected outliers -> %s\n",
              sc.obs.size(), sc.imu.size(), mask.total, out_dir.c_str());
  return 0;
}

// --- fuse ------------------------------------------------------------------

int cmd_fuse(const std::string& in_dir, const std::string& out_path, const std::string& mode,
             const LossFlags& loss, int window, const std::string& algorithm,
             const std::string& config_override, const std::string& report_path,
             const std::string& timing_path) {
  const ScenarioConfig cfg = config_for_dataset(in_dir, config_override);
  const auto imu = load_imu_csv(in_dir + "/imu.csv");
  const auto obs = load_obs_csv(in_dir + "/obs.csv");

  FusionOptions opts;
  opts.tightly_coupled = (mode == "tc");
  opts.kernel = loss.kernel();
  opts.window = window;
  opts.imu_noise = cfg.imu_noise;
  opts.clock_walk_sigma = cfg.clock_walk_sigma;
  opts.solver.algorithm = algorithm == "gn" ? SolverConfig::Algorithm::GaussNewton
                                            : SolverConfig::Algorithm::LevenbergMarquardt;

  const FusionResult result = run_fusion(imu, obs, opts);
  write_solution_csv(out_path, result.solution);

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot open " + report_path + " for writing");
    out << "mode=" << mode << " loss=" << loss.loss << " window=" << window << "\n";
    char buf[160];
    for (size_t e = 0; e < result.reports.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "epoch=%zu cost=%.9g iterations=%d converged=%s\n", e,
                    result.reports[e].final_cost, result.reports[e].iterations,
                    result.reports[e].converged ? "true" : "false");
      out << buf;
    }
  }
  if (!timing_path.empty()) write_timing(timing_path, result.epoch_seconds);
  print_timing_summary("fuse", result.epoch_seconds);
  return 0;
}

// --- baseline ----------------------------------------------------------------

int cmd_baseline(const std::string& in_dir, const std::string& out_path, const std::string& kind,
                 double gate, const std::string& config_override,
                 const std::string& timing_path) {
  const auto obs = load_obs_csv(in_dir + "/obs.csv");

  BaselineResult result;
  if (kind == "wls") {
    result = run_wls_baseline(obs);
  } else {
    const ScenarioConfig cfg = config_for_dataset(in_dir, config_override);
    const auto imu = load_imu_csv(in_dir + "/imu.csv");
    EkfOptions opts;
    opts.params.imu = cfg.imu_noise;
    opts.params.clock_walk_sigma = cfg.clock_walk_sigma;
    opts.params.gate_sigma = gate;
    result = run_ekf_baseline(imu, obs, opts);
    std::printf("ekf: %d gated updates\n", result.rejected_count);
  }
  write_solution_csv(out_path, result.solution);
  if (!timing_path.empty()) write_timing(timing_path, result.epoch_seconds);
  print_timing_summary(kind.c_str(), result.epoch_seconds);
  return 0;
}

// --- tune --------------------------------------------------------------------

int cmd_tune(const std::string& in_dir, const std::string& truth_path,
             const std::string& objective_name, double a_min, double a_max, double a_step,
             double c_min, double c_max, double c_step, const std::string& out_path,
             const std::string& report_path, int threads, const std::string& mode, int window,
             const std::string& config_override) {
  const ScenarioConfig cfg = config_for_dataset(in_dir, config_override);
  const auto imu = load_imu_csv(in_dir + "/imu.csv");
  const auto obs = load_obs_csv(in_dir + "/obs.csv");

  Trajectory truth;
  const Trajectory* truth_ptr = nullptr;
  std::string truth_file = truth_path;
  if (truth_file.empty() && std::filesystem::exists(in_dir + "/truth.csv")) {
    truth_file = in_dir + "/truth.csv";
  }
  if (!truth_file.empty()) {
    truth = load_truth_csv(truth_file);
    truth_ptr = &truth;
  }

  TuneObjective objective;
  if (objective_name == "residual-mse") {
    objective = TuneObjective::ResidualMse;
  } else if (objective_name == "gt-rmse") {
    objective = TuneObjective::GtRmse;
  } else {  // auto: prefer ground truth when available
    objective = truth_ptr ? TuneObjective::GtRmse : TuneObjective::ResidualMse;
  }

  std::vector<double> alphas, cs;
  for (double a = a_min; a <= a_max + 1e-9; a += a_step) alphas.push_back(a);
  for (double c = c_min; c <= c_max + 1e-9; c += c_step) cs.push_back(c);

  FusionOptions base;
  base.tightly_coupled = (mode == "tc");
  base.window = window;
  base.imu_noise = cfg.imu_noise;
  base.clock_walk_sigma = cfg.clock_walk_sigma;

  const TuneResult result =
      grid_search(imu, obs, truth_ptr, alphas, cs, objective, base, threads);

  if (!out_path.empty()) write_tune_csv(out_path, result);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "cells=%zu failed=%d objective=%s best_alpha=%.6g best_c=%.6g best_value=%.9g\n",
                result.grid.size(), result.failed_count,
                result.objective == TuneObjective::ResidualMse ? "residual-mse" : "gt-rmse",
                result.best_alpha, result.best_c, result.best_objective);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot open " + report_path + " for writing");
    out << buf;
  }
  std::fputs(buf, stdout);
  return 0;
}

// --- eval / cdf ----------------------------------------------------------------

int cmd_eval(const std::string& est_path, const std::string& truth_path,
             const std::string& report_path, const std::string& csv_path,
             const std::string& mode) {
  const Trajectory est = load_trajectory_csv(est_path);
  const Trajectory truth = load_truth_csv(truth_path);
  const ErrorMode m = mode == "3d" ? ErrorMode::Full3d : ErrorMode::Horizontal2d;
  const ErrorMetrics metrics = compute_metrics(est, truth, m);
  if (!report_path.empty()) write_metrics(report_path, metrics, mode);
  if (!csv_path.empty()) write_metrics_csv(csv_path, metrics, mode);
  std::printf("mode=%s count=%d unmatched=%d RMSE=%.4f ME=%.4f MaxE=%.4f SD=%.4f\n", mode.c_str(),
              metrics.count, metrics.unmatched, metrics.rmse, metrics.mean_error,
              metrics.max_error, metrics.std_dev);
  return 0;
}

int cmd_cdf(const std::string& est_path, const std::string& truth_path,
            const std::string& out_path, const std::string& hist_path,
            const std::string& report_path, const std::string& mode) {
  const Trajectory est = load_trajectory_csv(est_path);
  const Trajectory truth = load_truth_csv(truth_path);
  const ErrorMode m = mode == "3d" ? ErrorMode::Full3d : ErrorMode::Horizontal2d;
  const std::vector<double> norms = error_norms(align_errors(est, truth), m);
  const CdfReport cdf = compute_cdf(norms);

  if (!out_path.empty()) write_cdf_csv(out_path, cdf);
  if (!hist_path.empty()) write_histogram_csv(hist_path, compute_histogram(norms));
  char buf[160];
  std::snprintf(buf, sizeof(buf), "count=%zu P50=%.4f P68=%.4f P95=%.4f P99=%.4f\n",
                cdf.sorted.size(), cdf.percentile(50.0), cdf.percentile(68.0),
                cdf.percentile(95.0), cdf.percentile(99.0));
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot open " + report_path + " for writing");
    out << buf;
  }
  std::fputs(buf, stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tightly coupled GNSS/IMU factor-graph fusion toolkit"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario dataset");
  sim->add_option("--config", sim_config, "Scenario key=value config file")->required();
  sim->add_option("--out", sim_out, "Output dataset directory")->required();

  // fuse
  std::string fuse_in, fuse_out, fuse_mode{"tc"}, fuse_algo{"lm"}, fuse_config, fuse_report,
      fuse_timing;
  LossFlags fuse_loss;
  int fuse_window = 0;
  uint64_t fuse_seed = 0;
  auto* fuse = app.add_subcommand("fuse", "Run factor-graph fusion over a dataset");
  fuse->add_option("--in", fuse_in, "Dataset directory (simulate output)")->required();
  fuse->add_option("--out", fuse_out, "Solution CSV path")->required();
  fuse->add_option("--mode", fuse_mode, "Coupling: tc|lc")
      ->check(CLI::IsMember({"tc", "lc"}))
      ->capture_default_str();
  add_loss_flags(fuse, fuse_loss);
  fuse->add_option("--window", fuse_window, "Fixed-lag window in epochs (0 = full batch)")
      ->capture_default_str();
  fuse->add_option("--algorithm", fuse_algo, "Solver: lm|gn")
      ->check(CLI::IsMember({"lm", "gn"}))
      ->capture_default_str();
  fuse->add_option("--seed", fuse_seed, "Accepted for interface compatibility (fusion is deterministic)");
  fuse->add_option("--config", fuse_config, "Scenario config override (default <in>/scenario.cfg)");
  fuse->add_option("--report", fuse_report, "Per-epoch solver report path");
  fuse->add_option("--timing", fuse_timing, "Per-epoch wall-time report path (not deterministic)");

  // baseline
  std::string base_in, base_out, base_kind, base_config, base_timing;
  double base_gate = 5.0;
  auto* base = app.add_subcommand("baseline", "Run a WLS or EKF baseline");
  base->add_option("--kind", base_kind, "Estimator: wls|ekf")
      ->check(CLI::IsMember({"wls", "ekf"}))
      ->required();
  base->add_option("--in", base_in, "Dataset directory")->required();
  base->add_option("--out", base_out, "Solution CSV path")->required();
  base->add_option("--gate", base_gate, "EKF innovation gate in sigmas")->capture_default_str();
  base->add_option("--config", base_config, "Scenario config override");
  base->add_option("--timing", base_timing, "Per-epoch wall-time report path (not deterministic)");

  // tune
  std::string tune_in, tune_truth, tune_objective{"auto"}, tune_out, tune_report, tune_mode{"tc"},
      tune_config;
  double a_min = -4.0, a_max = 4.0, a_step = 0.5, c_min = 0.1, c_max = 2.0, c_step = 0.1;
  int tune_threads = 0, tune_window = 0;
  auto* tune = app.add_subcommand("tune", "Grid-search the adaptive kernel parameters");
  tune->add_option("--in", tune_in, "Dataset directory")->required();
  tune->add_option("--truth", tune_truth, "Truth CSV (default <in>/truth.csv when present)");
  tune->add_option("--objective", tune_objective, "residual-mse|gt-rmse|auto")
      ->check(CLI::IsMember({"residual-mse", "gt-rmse", "auto"}))
      ->capture_default_str();
  tune->add_option("--alpha-min", a_min)->capture_default_str();
  tune->add_option("--alpha-max", a_max)->capture_default_str();
  tune->add_option("--alpha-step", a_step)->capture_default_str();
  tune->add_option("--c-min", c_min)->capture_default_str();
  tune->add_option("--c-max", c_max)->capture_default_str();
  tune->add_option("--c-step", c_step)->capture_default_str();
  tune->add_option("--out", tune_out, "Grid CSV output path");
  tune->add_option("--report", tune_report, "Best-cell report path");
  tune->add_option("--threads", tune_threads, "Worker threads (0 = auto)")->capture_default_str();
  tune->add_option("--mode", tune_mode, "Coupling: tc|lc")
      ->check(CLI::IsMember({"tc", "lc"}))
      ->capture_default_str();
  tune->add_option("--window", tune_window, "Fixed-lag window for each cell (0 = batch)");
  tune->add_option("--config", tune_config, "Scenario config override");

  // eval
  std::string eval_est, eval_truth, eval_report, eval_csv, eval_mode{"2d"};
  auto* eval = app.add_subcommand("eval", "Compute RMSE/ME/MaxE/SD against truth");
  eval->add_option("--est", eval_est, "Estimated solution CSV")->required();
  eval->add_option("--truth", eval_truth, "Truth CSV")->required();
  eval->add_option("--report", eval_report, "Metrics report path");
  eval->add_option("--csv", eval_csv, "Machine-readable metrics CSV path");
  eval->add_option("--mode", eval_mode, "2d|3d")
      ->check(CLI::IsMember({"2d", "3d"}))
      ->capture_default_str();

  // cdf
  std::string cdf_est, cdf_truth, cdf_out, cdf_hist, cdf_report, cdf_mode{"2d"};
  auto* cdf = app.add_subcommand("cdf", "Emit empirical CDF / histogram of position errors");
  cdf->add_option("--est", cdf_est, "Estimated solution CSV")->required();
  cdf->add_option("--truth", cdf_truth, "Truth CSV")->required();
  cdf->add_option("--out", cdf_out, "CDF CSV output path");
  cdf->add_option("--hist", cdf_hist, "Histogram CSV output path (64 bins)");
  cdf->add_option("--report", cdf_report, "Percentile report path");
  cdf->add_option("--mode", cdf_mode, "2d|3d")
      ->check(CLI::IsMember({"2d", "3d"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out);
    if (fuse->parsed()) {
      return cmd_fuse(fuse_in, fuse_out, fuse_mode, fuse_loss, fuse_window, fuse_algo,
                      fuse_config, fuse_report, fuse_timing);
    }
    if (base->parsed()) {
      return cmd_baseline(base_in, base_out, base_kind, base_gate, base_config, base_timing);
    }
    if (tune->parsed()) {
      return cmd_tune(tune_in, tune_truth, tune_objective, a_min, a_max, a_step, c_min, c_max,
                      c_step, tune_out, tune_report, tune_threads, tune_mode, tune_window,
                      tune_config);
    }
    if (eval->parsed()) return cmd_eval(eval_est, eval_truth, eval_report, eval_csv, eval_mode);
    if (cdf->parsed()) {
      return cmd_cdf(cdf_est, cdf_truth, cdf_out, cdf_hist, cdf_report, cdf_mode);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
