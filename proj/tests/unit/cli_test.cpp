#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "test_support.hpp"

namespace mlc::cli {
namespace {

using mlc::testing::TempDir;
using mlc::testing::edit_file;
using mlc::testing::read_file;
namespace fs = std::filesystem;

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { mlc::testing::copy_sample(dir.path()); }

  Invocation mlcc(std::vector<std::string> args) {
    args.insert(args.begin(), {"-C", dir.path().string(), "--bridge", "mock"});
    std::ostringstream out, err;
    Invocation r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  TempDir dir{"cli"};
};

TEST_F(Cli, CheckSample) {
  auto r = mlcc({"check"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
}

TEST_F(Cli, CheckReportsDiagnostics) {
  edit_file(dir / "system/calculator.scl", "connect source.image -> detector.image;", "");
  auto r = mlcc({"check"});
  EXPECT_EQ(r.code, kExitDiagnostics);
  EXPECT_NE((r.out + r.err).find("UnconnectedInput"), std::string::npos);
}

TEST_F(Cli, BuildTwiceSkips) {
  auto first = mlcc({"build"});
  ASSERT_EQ(first.code, kExitOk) << first.out << first.err;
  EXPECT_TRUE(fs::exists(dir / "gen/MANIFEST"));
  fs::path report = dir / "report.tcl";
  auto second = mlcc({"--report", report.string(), "build"});
  ASSERT_EQ(second.code, kExitOk) << second.out << second.err;
  auto parsed = frontend::parse_config(read_file(report), "report.tcl");
  ASSERT_TRUE(parsed.tree) << read_file(report);
  EXPECT_EQ(parsed.tree->find("trainings")->as_int(), 0);
  EXPECT_EQ(parsed.tree->find_path("units.Detector.reason")->as_text(), "up-to-date");
  auto plan = mlcc({"plan"});
  EXPECT_EQ(plan.code, kExitOk);
  EXPECT_EQ(plan.out.find("ColdTrain"), std::string::npos) << plan.out;
}

TEST_F(Cli, TrainRequiresForce) {
  EXPECT_EQ(mlcc({"train"}).code, kExitUsage);
  ASSERT_EQ(mlcc({"build"}).code, kExitOk);
  auto r = mlcc({"train", "--force", "Detector"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("Detector"), std::string::npos);
}

TEST_F(Cli, RunScenario) {
  fs::path trace = dir / "trace.tsv";
  auto r = mlcc({"run", "scenarios/calculator.scn", "--trace-out", trace.string()});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(read_file(trace).find("port=display message=result args=(5)"), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, FailedAssertionExitsTwo) {
  edit_file(dir / "scenarios/calculator.scn", "args: (17)", "args: (18)");
  auto r = mlcc({"run", "scenarios/calculator.scn"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, RunWithTrainedPredictors) {
  ASSERT_EQ(mlcc({"build"}).code, kExitOk);
  auto r = mlcc({"run", "scenarios/detectors.scn", "--predictor", "trained"});
  EXPECT_NE(r.out.find("PredictionMade"), std::string::npos) << r.out << r.err;
}

TEST_F(Cli, PackAndListArtifacts) {
  ASSERT_EQ(mlcc({"build"}).code, kExitOk);
  EXPECT_EQ(mlcc({"pack", "source-archive"}).code, kExitOk);
  EXPECT_EQ(mlcc({"pack", "model-archive", "Detector"}).code, kExitOk);
  EXPECT_EQ(mlcc({"pack", "zip-archive"}).code, kExitUsage);
  auto list = mlcc({"artifacts", "list"});
  EXPECT_EQ(list.code, kExitOk);
  EXPECT_NE(list.out.find("source-archive"), std::string::npos);
  EXPECT_NE(list.out.find("model-archive"), std::string::npos);
}

TEST_F(Cli, LintAutomlFixes) {
  edit_file(dir / "configs/Detector.tcl", "scaling: standardize", "scaling: none");
  auto off = mlcc({"lint"});
  EXPECT_NE((off.out + off.err).find("R3"), std::string::npos);
  auto on = mlcc({"lint", "--automl"});
  EXPECT_NE((on.out + on.err).find("auto-fix"), std::string::npos);
}

TEST(CliUsage, UnknownSubcommandAndMissingProject) {
  std::ostringstream out, err;
  EXPECT_EQ(run_cli({"frobnicate"}, out, err), kExitUsage);
  EXPECT_EQ(run_cli({}, out, err), kExitUsage);
  TempDir empty;
  EXPECT_EQ(run_cli({"-C", empty.path().string(), "check"}, out, err), kExitDiagnostics);
}

TEST(CliUsage, BuildWithoutBridgeFails) {
  TempDir dir("cli");
  mlc::testing::copy_sample(dir.path());
  std::ostringstream out, err;
  EXPECT_EQ(run_cli({"-C", dir.path().string(), "build"}, out, err), kExitFailure);
  EXPECT_NE(err.str().find("no bridge configured"), std::string::npos) << out.str() << err.str();
}

TEST(CliBinary, CheckAndSubprocessBridge) {
  TempDir dir("cli");
  mlc::testing::copy_sample(dir.path());
  using mlc::testing::shell_quote;
  std::string base = shell_quote(mlc::testing::mlcc_path().string()) + " -C " + shell_quote(dir.path().string());
  auto check = mlc::testing::run_command(base + " check");
  EXPECT_EQ(check.exit_code, 0) << check.output;
  EXPECT_LT(check.seconds, 1.0);
  auto build = mlc::testing::run_command(base + " --bridge " +
                                         shell_quote(mlc::testing::mock_bridge_path().string()) + " build");
  EXPECT_EQ(build.exit_code, 0) << build.output;
  EXPECT_EQ(mlc::testing::run_command(base + " bogus").exit_code, 3);
}

}  // namespace
}  // namespace mlc::cli
