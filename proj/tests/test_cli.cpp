#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "csdl/harness/csv.hpp"

namespace fs = std::filesystem;
using csdl::harness::read_text_file;
using csdl::harness::write_text_file;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("csdl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(CSDL_CLI_PATH) + " " + args + " >" + (dir_ / "stdout.txt").string() +
                            " 2>" + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string err() const { return read_text_file(dir_ / "stderr.txt"); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run(""), 1); }

TEST_F(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run("exp1 --bogus 3"), 1); }

TEST_F(Cli, HelpSucceeds) { EXPECT_EQ(run("--help"), 0); }

TEST_F(Cli, FitZeroSignalWithZeroBudget) {
  write_text_file(dir_ / "y.csv", "value\n0\n0\n0\n0\n0\n0\n0\n0\n");
  ASSERT_EQ(run("fit --input " + (dir_ / "y.csv").string() + " --n 3 --k 2 --lambda 0 --out " +
                (dir_ / "out").string()),
            0)
      << err();
  const auto report = nlohmann::json::parse(read_text_file(dir_ / "out" / "report.json"));
  EXPECT_EQ(report["mode"], "constrained");
  EXPECT_EQ(report["final_objective"].get<double>(), 0.0);
  EXPECT_EQ(report["l11_norm"].get<double>(), 0.0);
  EXPECT_FALSE(report.contains("mse"));
  EXPECT_EQ(read_text_file(dir_ / "out" / "xhat.csv"), "value\n0\n0\n0\n0\n0\n0\n0\n0\n");
  EXPECT_EQ(read_text_file(dir_ / "out" / "rhat.csv"), "row,col,value\n");
}

TEST_F(Cli, FitWithTruthAndPenalizedDefaults) {
  write_text_file(dir_ / "y.csv", "value\n1\n0.5\n0\n0\n2\n1\n0\n0\n0\n0\n");
  write_text_file(dir_ / "x.csv", "value\n1\n0.5\n0\n0\n2\n1\n0\n0\n0\n0\n");
  ASSERT_EQ(run("fit --input " + (dir_ / "y.csv").string() + " --truth " + (dir_ / "x.csv").string() +
                " --n 2 --k 1 --delta 0.05 --sigma 0.1 --out " + (dir_ / "out").string()),
            0)
      << err();
  const auto report = nlohmann::json::parse(read_text_file(dir_ / "out" / "report.json"));
  EXPECT_EQ(report["mode"], "penalized");
  EXPECT_TRUE(report.contains("mse"));
  EXPECT_EQ(report["mse"]["identity"].get<double>(), 0.0);
  EXPECT_TRUE(report["certificates"].contains("ub_penalized"));
}

TEST_F(Cli, FitErrors) {
  write_text_file(dir_ / "bad.csv", "value\n1\nx\n");
  EXPECT_EQ(run("fit --input " + (dir_ / "bad.csv").string() + " --n 1 --k 1 --lambda 1"), 1);
  EXPECT_NE(err().find("line 3"), std::string::npos) << err();
  EXPECT_EQ(run("fit --input " + (dir_ / "missing.csv").string() + " --n 1 --k 1 --lambda 1"), 2);
  write_text_file(dir_ / "y.csv", "1\n2\n");
  EXPECT_EQ(run("fit --input " + (dir_ / "y.csv").string() + " --n 5 --k 1 --lambda 1"), 1);
  EXPECT_EQ(run("fit --input " + (dir_ / "y.csv").string() + " --n 1 --k 1"), 1);
  EXPECT_EQ(run("fit --input " + (dir_ / "y.csv").string() + " --n 1 --k 1 --lambda 1 --lambda-prime 1"), 1);
}

TEST_F(Cli, ExperimentSummarizeAndConfigFile) {
  const auto out = (dir_ / "runs").string();
  ASSERT_EQ(run("exp3 --trials 2 --grid 1,31 --iterations 10 --seed 5 --out " + out), 0) << err();
  const auto trials = read_text_file(dir_ / "runs" / "exp3_trials.csv");
  EXPECT_TRUE(trials.starts_with("# csdl_csv_v1 table=trials experiment=exp3"));

  ASSERT_EQ(run("summarize --input " + out + "/exp3_trials.csv --out " + (dir_ / "again.csv").string()), 0) << err();
  EXPECT_EQ(read_text_file(dir_ / "again.csv"), read_text_file(dir_ / "runs" / "exp3_summary.csv"));

  write_text_file(dir_ / "cfg.toml", "[exp3]\ntrials = 2\ngrid = [1, 31]\niterations = 10\nseed = 5\nout = \"" +
                                         (dir_ / "from_config").string() + "\"\n");
  ASSERT_EQ(run("--config " + (dir_ / "cfg.toml").string() + " exp3"), 0) << err();
  EXPECT_EQ(read_text_file(dir_ / "from_config" / "exp3_trials.csv"), trials);
}

TEST_F(Cli, SummarizeRejectsForeignCsv) {
  write_text_file(dir_ / "other.csv", "a,b\n1,2\n");
  EXPECT_EQ(run("summarize --input " + (dir_ / "other.csv").string() + " --out " + (dir_ / "s.csv").string()), 1);
}

TEST_F(Cli, ExperimentRejectsBadValues) {
  EXPECT_EQ(run("exp1 --trials 0"), 1);
  EXPECT_EQ(run("exp2 --noise pink"), 1);
  EXPECT_EQ(run("exp2 --grid 5000 --trials 1 --out " + dir_.string()), 1);
}
