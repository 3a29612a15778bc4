#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "pdelab/config.hpp"

namespace pdelab {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string output;
};

Result run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + PDELAB_CLI_PATH + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // config header
  std::getline(in, line);  // column names
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pdelab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(Cli, SpectrumMatchesClosedForm) {
  const auto out = dir_ / "spectrum.csv";
  const auto r = run_cli("spectrum --L 16 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = csv_rows(slurp(out));
  ASSERT_EQ(rows.size(), 16u);
  for (const auto& row : rows) {
    const int k = std::stoi(row[0]);
    const double s = std::sin(std::numbers::pi * k / 32.0);
    EXPECT_NEAR(std::stod(row[1]), -4 * s * s, 1e-11);
    EXPECT_LT(std::stod(row[3]), 1e-10);
  }
  EXPECT_TRUE(fs::exists(dir_ / "spectrum.txt"));
}

TEST_F(Cli, GradcheckReportsRelativeError) {
  const auto out = dir_ / "g.csv";
  const auto r = run_cli("gradcheck --trials 5 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string summary = slurp(dir_ / "g.txt");
  const auto pos = summary.find("max_rel_err=");
  ASSERT_NE(pos, std::string::npos) << summary;
  EXPECT_LT(std::stod(summary.substr(pos + 12)), 1e-5);
  EXPECT_NE(summary.find("status: ok"), std::string::npos);
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
  const auto empty = dir_ / "empty.cfg";
  std::ofstream(empty).close();
  EXPECT_EQ(run_cli("--config " + empty.string()).code, 2);

  const auto r = run_cli("spectrum --colour red");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("colour"), std::string::npos) << r.output;

  const auto bad = dir_ / "bad.cfg";
  std::ofstream(bad) << "subcommand=spectrum\ncolour=red\n";
  const auto rb = run_cli("--config " + bad.string());
  EXPECT_EQ(rb.code, 2);
  EXPECT_NE(rb.output.find("colour"), std::string::npos) << rb.output;

  EXPECT_EQ(run_cli("spectrum --L abc --out " + (dir_ / "x.csv").string()).code, 2);
  EXPECT_EQ(run_cli("").code, 2);
}

TEST_F(Cli, FailedCheckExitsWithOne) {
  // No finite-difference check can meet a tolerance this tight.
  const auto r = run_cli("gradcheck --trials 3 --tol 1e-30 --out " + (dir_ / "g.csv").string());
  EXPECT_EQ(r.code, 1) << r.output;
  EXPECT_NE(slurp(dir_ / "g.txt").find("FAILED"), std::string::npos);
}

TEST_F(Cli, ConfigFileAndHeaderRoundTrip) {
  const auto cfg = dir_ / "run.cfg";
  const auto out = dir_ / "hk.csv";
  std::ofstream(cfg) << "# heat kernel\nsubcommand=heatkernel\nL=16\nt=1,2\nout=" << out.string() << "\n";
  ASSERT_EQ(run_cli("--config " + cfg.string() + " heatkernel --seed 3").code, 0);
  std::istringstream in(slurp(out));
  std::string header;
  std::getline(in, header);
  const auto parsed = ExperimentConfig::parse_header(header);
  const auto expect =
      ExperimentConfig::make("heatkernel", {{"L", "16"}, {"t", "1,2"}, {"seed", "3"}, {"out", out.string()}});
  EXPECT_EQ(parsed, expect);
}

TEST_F(Cli, DeterministicTrainingIsByteIdentical) {
  const std::string args =
      "train --position after-embedding --train_size 200 --val_size 50 --epochs 2 --dim 16 --heads 2 "
      "--layers 1 --max_len 32 --seed 5 --out ";
  const auto a = dir_ / "a.csv", b = dir_ / "b.csv";
  ASSERT_EQ(run_cli(args + a.string(), "PDELAB_DETERMINISTIC=1").code, 0);
  ASSERT_EQ(run_cli(args + b.string(), "PDELAB_DETERMINISTIC=1").code, 0);
  std::string ta = slurp(a), tb = slurp(b);
  ASSERT_FALSE(ta.empty());
  // The header carries the output path; compare everything after it.
  ta = ta.substr(ta.find('\n'));
  tb = tb.substr(tb.find('\n'));
  EXPECT_EQ(ta, tb);
  EXPECT_EQ(csv_rows(slurp(a)).size(), 2u);
}

}  // namespace
}  // namespace pdelab
