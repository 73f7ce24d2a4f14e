#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "curveflow/commands.hpp"
#include "test_support.hpp"

using namespace curveflow;
using curveflow::oracle::scratch_dir;

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(CURVEFLOW_SOURCE_DIR) / "configs";

SimulationConfig shipped(const std::string& name, Mode mode, const fs::path& out) {
  auto c = load_config(kConfigs / name);
  c.mode = mode;
  c.outputs.dir = out.string();
  return c;
}

std::vector<fs::path> files_with(const fs::path& dir, const std::string& prefix,
                                 const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

double number_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  if (pos == std::string::npos) return std::nan("");
  return std::stod(text.substr(pos + key.size()));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CURVEFLOW_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(TimeLabel, SortsLexically) {
  EXPECT_EQ(time_label(0.01, 4.0), "0.0100");
  EXPECT_EQ(time_label(4.0, 4.0), "4.0000");
  EXPECT_EQ(time_label(2.0, 20.0), "02.0000");
  EXPECT_LT(time_label(2.0, 20.0), time_label(10.0, 20.0));
}

TEST(Simulate, WritesSnapshotsFramesAndMetrics) {
  const auto dir = scratch_dir("simulate");
  auto c = shipped("reference_winding3.json", Mode::simulate, dir);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate(c, out, err), kExitOk) << err.str();
  const auto csvs = files_with(dir, "snapshot_t", ".csv");
  const auto frames = files_with(dir, "frame_t", ".svg");
  ASSERT_EQ(csvs.size(), 10u);
  ASSERT_EQ(frames.size(), 10u);
  const std::vector<std::string> labels{"0.0000", "0.0100", "0.0500", "0.1000", "0.2000",
                                        "0.4000", "0.6000", "1.0000", "2.0000", "4.0000"};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_EQ(csvs[i].filename().string(), "snapshot_t" + labels[i] + ".csv");
    EXPECT_EQ(frames[i].filename().string(), "frame_t" + labels[i] + ".svg");
  }
  const auto metrics = read_csv_columns(dir / "metrics.csv", {"t", "energy"});
  EXPECT_EQ(metrics[0].size(), 40001u);
  EXPECT_NE(out.str().find("max relative energy drift"), std::string::npos);
  EXPECT_LT(number_after(out.str(), "max relative energy drift: "), 1e-6);
}

TEST(Simulate, StationaryConfigKeepsSnapshots) {
  const auto dir = scratch_dir("simulate_stationary");
  auto c = shipped("reference_winding3.json", Mode::simulate, dir);
  c.initial = c.target;
  c.n = 256;
  c.solver.dt = 1e-3;
  c.solver.t_end = 1.0;
  c.solver.snapshot_times = {0.0, 0.5, 1.0};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate(c, out, err), kExitOk) << err.str();
  const auto csvs = files_with(dir, "snapshot_t", ".csv");
  ASSERT_EQ(csvs.size(), 3u);
  const auto first = read_csv_columns(csvs.front(), {"rho", "p", "x", "y"});
  for (const auto& path : csvs) {
    const auto cols = read_csv_columns(path, {"rho", "p", "x", "y"});
    for (std::size_t k = 0; k < cols.size(); ++k) {
      EXPECT_LT(max_abs_difference(cols[k], first[k]), 1e-10) << path;
    }
  }
}

TEST(Simulate, InvalidConfigWritesNothing) {
  const auto dir = scratch_dir("simulate_invalid") / "nested";
  auto c = shipped("reference_winding3.json", Mode::simulate, dir);
  c.solver.dt = 0.0;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(c, out, err), kExitValidation);
  EXPECT_FALSE(fs::exists(dir));
  EXPECT_NE(err.str().find("solver.dt"), std::string::npos);
}

TEST(Simulate, SolverFailureMapsToExitCode) {
  const auto dir = scratch_dir("simulate_solver_failure");
  auto c = shipped("reference_winding3.json", Mode::simulate, dir);
  c.n = 256;
  c.solver.dt = 1e-3;
  c.solver.t_end = 1.0;
  c.solver.snapshot_times = {0.0};
  c.solver.flip_nonlocal_sign = true;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(c, out, err), kExitSolver);
  EXPECT_NE(err.str().find("energy drift"), std::string::npos);
}

TEST(Table, StationaryRowsEqualLimitRow) {
  auto c = shipped("reference_winding3.json", Mode::table, scratch_dir("table_stationary"));
  c.initial = c.target;
  c.n = 256;
  c.solver.dt = 1e-3;
  c.solver.t_end = 1.0;
  c.table.times = {0.0, 0.5, 1.0};
  c.table.reference.clear();
  const auto result = compute_table(c);
  ASSERT_EQ(result.rows.size(), 4u);
  const auto& limit = result.rows.back();
  EXPECT_TRUE(std::isinf(limit.t));
  for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) {
    EXPECT_NEAR(result.rows[i].length_ratio, limit.length_ratio, 1e-10);
    EXPECT_NEAR(result.rows[i].rho_min, limit.rho_min, 1e-10);
    EXPECT_NEAR(result.rows[i].rho_max, limit.rho_max, 1e-10);
    EXPECT_NEAR(result.rows[i].energy, limit.energy, 1e-10);
  }
}

TEST(Table, LimitRowMatchesReference) {
  const auto problem = oracle::reference_problem(512);
  const auto row = predicted_limit_row(problem);
  EXPECT_NEAR(row.length_ratio / 10.0, 1.0, 5e-3);
  EXPECT_NEAR(row.rho_min / 2.1433, 1.0, 5e-3);
  EXPECT_NEAR(row.rho_max / 17.8567, 1.0, 5e-3);
  EXPECT_NEAR(row.energy, elastic_energy(problem.initial()), 1e-12);
}

TEST(Table, EarlyRowsPassAndPerturbedReferenceFails) {
  const auto dir = scratch_dir("table_early");
  auto c = shipped("reference_winding3.json", Mode::table, dir);
  ConfigOverrides o;
  o.t_end = 0.2;
  apply_overrides(c, o);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_table(c, out, err), kExitOk) << out.str() << err.str();
  EXPECT_TRUE(fs::exists(dir / "table.csv"));
  const auto cols = read_csv_columns(dir / "table.csv", {"t", "rho_min"});
  EXPECT_EQ(cols[0].size(), 6u);  // five finite times plus the limit row
  EXPECT_TRUE(std::isinf(cols[0].back()));

  for (auto& r : c.table.reference) {
    if (r.t == 0.1) r.rho_max *= 1.01;
  }
  std::ostringstream out2, err2;
  EXPECT_EQ(cmd_table(c, out2, err2), kExitTolerance);
  EXPECT_NE(out2.str().find("FAIL t=0.1 rho_max"), std::string::npos) << out2.str();
}

TEST(Homotopy, CircleTargetIsRescaledToInitialEnergy) {
  const auto dir = scratch_dir("homotopy");
  auto c = shipped("homotopy_circle.json", Mode::homotopy, dir);
  c.n = 256;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_homotopy(c, out, err), kExitOk) << err.str();
  const double lambda = number_after(out.str(), "lambda = ");
  const auto problem = build_problem(c);
  const double e0 = elastic_energy(problem.initial());
  EXPECT_NEAR(lambda, 6 * std::numbers::pi / e0, 1e-8);
  EXPECT_NEAR(lambda / 6.1887, 1.0, 1e-3);
  EXPECT_GT(number_after(out.str(), "min rho over run: "), 0.0);
  EXPECT_LT(number_after(out.str(), "final sup|rho - lambda rho~|: "), 1e-4);
  const auto frames = files_with(dir, "frame_t", ".svg");
  EXPECT_EQ(frames.size(), c.solver.snapshot_times.size());
  EXPECT_TRUE(fs::exists(dir / "homotopy_frames.txt"));
}

TEST(Homotopy, EqualCurvesNeedNoRescaling) {
  auto c = shipped("homotopy_circle.json", Mode::homotopy, scratch_dir("homotopy_equal"));
  c.target = c.initial;
  c.n = 256;
  c.solver.t_end = 0.1;
  c.solver.snapshot_times = {0.0, 0.1};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_homotopy(c, out, err), kExitOk) << err.str();
  EXPECT_NEAR(number_after(out.str(), "lambda = "), 1.0, 1e-12);
  EXPECT_LT(number_after(out.str(), "final sup|rho - lambda rho~|: "), 1e-9);
}

TEST(Homotopy, ConvexCurvesStayConvex) {
  auto c = shipped("homotopy_circle.json", Mode::homotopy, scratch_dir("homotopy_convex"));
  c.n = 128;
  c.initial = {1, TrigSupportSpec{2.0, {{2, 0.3, 0.1}}}, ""};
  c.target = {1, TrigSupportSpec{5.0, {{3, 0.2, 0.0}}}, ""};
  c.solver.t_end = 5.0;
  c.solver.snapshot_times = {0.0, 5.0};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_homotopy(c, out, err), kExitOk) << err.str();
  EXPECT_GT(number_after(out.str(), "min rho over run: "), 0.0);
  EXPECT_LT(number_after(out.str(), "lambda = "), 1.0);
}

TEST(Analyze, WritesReportWithoutViolations) {
  const auto dir = scratch_dir("analyze");
  auto c = shipped("reference_winding3.json", Mode::analyze, dir);
  c.n = 256;
  c.solver.dt = 1e-3;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_analyze(c, out, err), kExitOk) << out.str() << err.str();
  EXPECT_TRUE(fs::exists(dir / "report.txt"));
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
  EXPECT_NE(out.str().find("bounds_violations = 0"), std::string::npos);
  EXPECT_LE(number_after(out.str(), "decay_slope_fit = "), -1.0);
  // The 2 pi m form of the length balance is the one that closes.
  EXPECT_LT(number_after(out.str(), "length_rate_residual_2pim = "),
            number_after(out.str(), "length_rate_residual_2pi = "));
}

TEST(Verify, DefaultConfigAllPropertiesPass) {
  auto c = shipped("reference_winding3.json", Mode::verify, scratch_dir("verify"));
  std::ostringstream out, err;
  const int code = cmd_verify(c, out, err);
  EXPECT_EQ(code, kExitOk) << out.str();
  for (const char* name : {"stationary_family", "closure_preservation", "bound_sweep",
                           "dual_formulation"}) {
    EXPECT_NE(out.str().find(std::string("PASS ") + name), std::string::npos) << out.str();
  }
}

TEST(Verify, SabotagedSignFailsEnergyConservation) {
  auto c = shipped("reference_winding3.json", Mode::verify, scratch_dir("verify_sabotage"));
  c.n = 256;
  c.solver.dt = 1e-3;
  c.solver.t_end = 0.5;
  c.solver.snapshot_times.clear();
  c.solver.flip_nonlocal_sign = true;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(c, out, err), kExitTolerance);
  EXPECT_NE(out.str().find("FAIL energy_conservation"), std::string::npos) << out.str();
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  const std::string config = (kConfigs / "reference_winding3.json").string();
  EXPECT_EQ(run_cli("table --config " + config + " --t-end 0.05 --out " + dir.string()), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "table.csv"));
  EXPECT_EQ(run_cli("verify --config " + config + " --n 16"), kExitValidation);
  EXPECT_EQ(run_cli("simulate --config " + config + " --dt 0"), kExitValidation);
  EXPECT_EQ(run_cli("table --config " + config + " --t-end 0.05 --tolerance 1e-9 --out " +
                    dir.string()),
            kExitTolerance);
  EXPECT_EQ(run_cli("simulate --config /nonexistent.json"), kExitValidation);
  EXPECT_NE(run_cli("bogus"), kExitOk);
}
