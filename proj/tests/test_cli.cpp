// End-to-end tests of the navfuse command-line tool: exit codes, pipeline
// artifacts, metric report fields, and byte-level determinism. The tests
// shell out to the real binary (path injected at compile time).

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace {

const std::string kCli = NAVFUSE_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char ch : text) n += ch == '\n' ? 1 : 0;
  return n;
}

/// Simulates one small dataset shared by every test in the suite.
class CliPipeline : public testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::string(testing::TempDir() + "navfuse_cli_ds");
    const std::string cfg_path = *dir_ + ".cfg";
    std::ofstream cfg(cfg_path);
    cfg << "duration = 12\n"
        << "route = 0,0,0,3.5; 80,0,0,3.5\n"
        << "seed = 3\n";
    cfg.close();
    ASSERT_EQ(run("simulate --config " + cfg_path + " --out " + *dir_), 0);
  }

  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static const std::string& dir() { return *dir_; }
  static std::string out(const std::string& name) { return testing::TempDir() + name; }

  static std::string* dir_;
};

std::string* CliPipeline::dir_ = nullptr;

// 13 GNSS epochs for a 12 s scenario at 1 Hz.
constexpr int kEpochs = 13;

// ============================================================================
// Exit codes
// ============================================================================

TEST(CliExitCodes, HelpReturnsZero) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("fuse --help"), 0);
}

TEST(CliExitCodes, UsageErrorsReturnTwo) {
  EXPECT_EQ(run(""), 2);                 // missing subcommand
  EXPECT_EQ(run("frobnicate"), 2);       // unknown subcommand
  EXPECT_EQ(run("fuse --bogus x"), 2);   // unknown flag
  EXPECT_EQ(run("fuse --out only.csv"), 2);  // missing required --in
  EXPECT_EQ(run("fuse --in a --out b --mode xc"), 2);   // bad enum value
  EXPECT_EQ(run("baseline --kind mle --in a --out b"), 2);
}

TEST(CliExitCodes, RuntimeFailuresReturnOne) {
  EXPECT_EQ(run("fuse --in /nonexistent_dataset --out " + testing::TempDir() + "x.csv"), 1);
  EXPECT_EQ(run("simulate --config /nonexistent.cfg --out " + testing::TempDir() + "d"), 1);
  EXPECT_EQ(run("eval --est /missing.csv --truth /missing.csv"), 1);
}

// ============================================================================
// Pipeline
// ============================================================================

TEST_F(CliPipeline, SimulateEmitsCompleteDataset) {
  for (const char* name : {"/imu.csv", "/obs.csv", "/truth.csv", "/scenario.cfg",
                           "/outliers.csv"}) {
    EXPECT_FALSE(slurp(dir() + name).empty()) << name;
  }
  // One truth row per GNSS epoch plus the header.
  EXPECT_EQ(count_lines(slurp(dir() + "/truth.csv")), kEpochs + 1);
}

TEST_F(CliPipeline, FuseProducesOneSolutionRowPerEpoch) {
  const std::string sol = out("cli_sol.csv");
  const std::string rep = out("cli_solver.txt");
  ASSERT_EQ(run("fuse --in " + dir() + " --out " + sol + " --report " + rep), 0);
  const std::string text = slurp(sol);
  EXPECT_EQ(count_lines(text), kEpochs + 1);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,x,y,z,vx,vy,vz,qw,qx,qy,qz");

  const std::string report = slurp(rep);
  EXPECT_NE(report.find("loss=barron"), std::string::npos);
  EXPECT_NE(report.find("epoch=0 cost="), std::string::npos);
  EXPECT_EQ(count_lines(report), kEpochs + 1);  // banner + one line per epoch
}

TEST_F(CliPipeline, EvalReportsTheFourMetricsAndTheyAreSmall) {
  const std::string sol = out("cli_sol_eval.csv");
  ASSERT_EQ(run("fuse --in " + dir() + " --out " + sol), 0);
  const std::string rep = out("cli_metrics.txt");
  const std::string csv = out("cli_metrics.csv");
  ASSERT_EQ(run("eval --est " + sol + " --truth " + dir() + "/truth.csv --report " + rep +
                " --csv " + csv),
            0);

  const std::string report = slurp(rep);
  for (const char* field : {"RMSE=", "ME=", "MaxE=", "SD=", "mode=2d", "unmatched=0"}) {
    EXPECT_NE(report.find(field), std::string::npos) << field;
  }
  // Clean scenario at desk scale: the fused track stays within a couple of
  // meters of truth.
  double rmse = 1e9;
  std::sscanf(report.c_str() + report.find("RMSE="), "RMSE=%lf", &rmse);
  EXPECT_LT(rmse, 2.0);

  const std::string table = slurp(csv);
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "mode,count,unmatched,rmse,me,maxe,sd,rmse_east,rmse_north,rmse_up");
}

TEST_F(CliPipeline, LooseCouplingAndWindowedModesRun) {
  const std::string lc = out("cli_sol_lc.csv");
  ASSERT_EQ(run("fuse --in " + dir() + " --out " + lc + " --mode lc"), 0);
  EXPECT_EQ(count_lines(slurp(lc)), kEpochs + 1);

  const std::string win = out("cli_sol_win.csv");
  ASSERT_EQ(run("fuse --in " + dir() + " --out " + win + " --window 4"), 0);
  EXPECT_EQ(count_lines(slurp(win)), kEpochs + 1);

  const std::string gn = out("cli_sol_gn.csv");
  ASSERT_EQ(run("fuse --in " + dir() + " --out " + gn + " --algorithm gn --loss huber"), 0);
  EXPECT_EQ(count_lines(slurp(gn)), kEpochs + 1);
}

TEST_F(CliPipeline, BaselinesProduceSolutions) {
  const std::string wls = out("cli_wls.csv");
  ASSERT_EQ(run("baseline --kind wls --in " + dir() + " --out " + wls), 0);
  EXPECT_EQ(count_lines(slurp(wls)), kEpochs + 1);

  const std::string ekf = out("cli_ekf.csv");
  const std::string timing = out("cli_ekf_timing.txt");
  ASSERT_EQ(run("baseline --kind ekf --in " + dir() + " --out " + ekf + " --timing " + timing),
            0);
  EXPECT_EQ(count_lines(slurp(ekf)), kEpochs + 1);
  const std::string t = slurp(timing);
  EXPECT_NE(t.find("mean_epoch_s="), std::string::npos);
  EXPECT_NE(t.find("median_epoch_s="), std::string::npos);
}

TEST_F(CliPipeline, TuneReportsBestCellOfASmallGrid) {
  const std::string grid = out("cli_tune.csv");
  const std::string rep = out("cli_tune.txt");
  ASSERT_EQ(run("tune --in " + dir() + " --objective gt-rmse --alpha-min -1 --alpha-max 0"
                " --alpha-step 1 --c-min 1 --c-max 1 --c-step 1 --out " + grid +
                " --report " + rep),
            0);
  EXPECT_EQ(count_lines(slurp(grid)), 3);  // header + 2 cells
  const std::string report = slurp(rep);
  EXPECT_NE(report.find("cells=2"), std::string::npos);
  EXPECT_NE(report.find("failed=0"), std::string::npos);
  EXPECT_NE(report.find("objective=gt-rmse"), std::string::npos);
  EXPECT_NE(report.find("best_alpha="), std::string::npos);
}

TEST_F(CliPipeline, CdfAndHistogramEmitStableFormats) {
  const std::string sol = out("cli_sol_cdf.csv");
  ASSERT_EQ(run("fuse --in " + dir() + " --out " + sol), 0);
  const std::string cdf = out("cli_cdf.csv");
  const std::string hist = out("cli_hist.csv");
  const std::string rep = out("cli_pct.txt");
  ASSERT_EQ(run("cdf --est " + sol + " --truth " + dir() + "/truth.csv --out " + cdf +
                " --hist " + hist + " --report " + rep),
            0);

  const std::string cdf_text = slurp(cdf);
  EXPECT_EQ(cdf_text.substr(0, cdf_text.find('\n')), "error,cumulative_fraction");
  EXPECT_EQ(count_lines(cdf_text), kEpochs + 1);

  const std::string hist_text = slurp(hist);
  EXPECT_EQ(hist_text.substr(0, hist_text.find('\n')), "bin_lo,bin_hi,count,density");
  EXPECT_EQ(count_lines(hist_text), 64 + 1);

  const std::string pct = slurp(rep);
  for (const char* field : {"P50=", "P68=", "P95=", "P99="}) {
    EXPECT_NE(pct.find(field), std::string::npos) << field;
  }
}

// ============================================================================
// Determinism
// ============================================================================

TEST_F(CliPipeline, RepeatedRunsAreByteIdentical) {
  // simulate twice from the same config
  const std::string dir2 = out("cli_ds_repeat");
  ASSERT_EQ(run("simulate --config " + dir() + "/scenario.cfg --out " + dir2), 0);
  EXPECT_EQ(slurp(dir() + "/obs.csv"), slurp(dir2 + "/obs.csv"));
  EXPECT_EQ(slurp(dir() + "/imu.csv"), slurp(dir2 + "/imu.csv"));
  EXPECT_EQ(slurp(dir() + "/truth.csv"), slurp(dir2 + "/truth.csv"));

  // fuse twice over the same dataset
  const std::string a = out("cli_det_a.csv");
  const std::string b = out("cli_det_b.csv");
  ASSERT_EQ(run("fuse --in " + dir() + " --out " + a), 0);
  ASSERT_EQ(run("fuse --in " + dir() + " --out " + b), 0);
  const std::string text_a = slurp(a);
  EXPECT_FALSE(text_a.empty());
  EXPECT_EQ(text_a, slurp(b));

  // baseline twice
  const std::string ea = out("cli_det_ekf_a.csv");
  const std::string eb = out("cli_det_ekf_b.csv");
  ASSERT_EQ(run("baseline --kind ekf --in " + dir() + " --out " + ea), 0);
  ASSERT_EQ(run("baseline --kind ekf --in " + dir() + " --out " + eb), 0);
  EXPECT_EQ(slurp(ea), slurp(eb));
}

}  // namespace
