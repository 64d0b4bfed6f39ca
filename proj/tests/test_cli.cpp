#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.hpp"

namespace entmap::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("entmap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, SinkhornSingleAtomCost) {
  const auto mu = write("a.csv", "w,x1,x2\n1,0,0\n");
  const auto nu = write("b.csv", "w,x1,x2\n1,3,4\n");
  const auto r = invoke({"sinkhorn", "--mu", mu, "--nu", nu, "--eps", "0.1", "--potentials", path("p.json"),
                         "--report", path("r.json")});
  EXPECT_EQ(r.code, kSuccess) << r.err;
  EXPECT_EQ(r.out, "entropic_cost 12.5\n");
  EXPECT_NE(slurp(path("p.json")).find("\"convention\": \"half-sqdist\""), std::string::npos);
  EXPECT_NE(slurp(path("r.json")).find("\"converged\": true"), std::string::npos);
}

TEST_F(CliTest, SinkhornNonConvergenceExitsTwo) {
  const auto mu = write("a.csv", "w,x1\n0.5,0\n0.5,1\n");
  const auto nu = write("b.csv", "w,x1\n0.3,0\n0.7,1\n");
  const auto r = invoke({"sinkhorn", "--mu", mu, "--nu", nu, "--eps", "0.05", "--tol", "1e-14", "--max-iter", "1",
                         "--potentials", path("p.json"), "--report", path("r.json")});
  EXPECT_EQ(r.code, kNotConverged);
  EXPECT_NE(slurp(path("r.json")).find("\"converged\": false"), std::string::npos);
}

TEST_F(CliTest, MalformedCsvNamesRow) {
  const auto mu = write("a.csv", "w,x1\n0.5,0\n0.5,oops\n");
  const auto nu = write("b.csv", "w,x1\n1,0\n");
  const auto r = invoke({"sinkhorn", "--mu", mu, "--nu", nu, "--potentials", path("p.json"), "--report",
                         path("r.json")});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
}

TEST_F(CliTest, ArgumentErrorsExitOne) {
  EXPECT_EQ(invoke({}).code, kUsageError);
  EXPECT_EQ(invoke({"frobnicate"}).code, kUsageError);
  EXPECT_EQ(invoke({"sinkhorn"}).code, kUsageError);
  EXPECT_EQ(invoke({"sinkhorn", "--mu", path("missing.csv"), "--nu", path("missing.csv")}).code, kUsageError);
  EXPECT_EQ(invoke({"sinkhorn", "--eps", "-1", "--mu", "a", "--nu", "b"}).code, kUsageError);
  EXPECT_EQ(invoke({"experiment", "--kind", "nope", "--out-dir", path("x")}).code, kUsageError);
  EXPECT_EQ(invoke({"experiment", "--trials", "0", "--out-dir", path("x")}).code, kUsageError);
  EXPECT_EQ(invoke({"experiment", "--n-grid", "64,32", "--out-dir", path("x")}).code, kUsageError);
  EXPECT_EQ(invoke({"verify", "--suite", "nope"}).code, kUsageError);
  EXPECT_EQ(invoke({"--help"}).code, kSuccess);
}

TEST_F(CliTest, SinkhornOutputsAreByteIdentical) {
  const auto mu = write("a.csv", "w,x1,x2\n0.2,0,0\n0.3,1,0\n0.5,0,1\n");
  const auto nu = write("b.csv", "w,x1,x2\n0.6,0.5,0.5\n0.4,1,1\n");
  for (const char* tag : {"1", "2"}) {
    const auto r = invoke({"sinkhorn", "--mu", mu, "--nu", nu, "--eps", "0.05", "--potentials",
                           path(std::string("p") + tag), "--report", path(std::string("r") + tag), "--trace",
                           path(std::string("t") + tag)});
    ASSERT_EQ(r.code, kSuccess) << r.err;
  }
  EXPECT_EQ(slurp(path("p1")), slurp(path("p2")));
  EXPECT_EQ(slurp(path("r1")), slurp(path("r2")));
  EXPECT_EQ(slurp(path("t1")), slurp(path("t2")));
  EXPECT_EQ(slurp(path("t1")).substr(0, 15), "iter,residual\n1");
}

TEST_F(CliTest, ConfigFileWithFlagPrecedence) {
  const auto mu = write("a.csv", "w,x1\n1,0\n");
  const auto nu = write("b.csv", "w,x1\n1,2\n");
  const auto cfg = write("cfg.json", "{\"mu\": \"" + mu + "\", \"nu\": \"" + nu + "\", \"eps\": 0.5, \"report\": \"" +
                                         path("r.json") + "\", \"potentials\": \"" + path("p.json") + "\"}");
  auto r = invoke({"sinkhorn", "--config", cfg});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_NE(slurp(path("r.json")).find("\"epsilon\": 0.5"), std::string::npos);
  r = invoke({"sinkhorn", "--config", cfg, "--eps", "0.25"});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_NE(slurp(path("r.json")).find("\"epsilon\": 0.25"), std::string::npos);
}

TEST_F(CliTest, ConfigRejectsUnknownKeysAndBadJson) {
  const auto cfg = write("cfg.json", "{\"eps\": 0.5, \"colour\": \"red\"}");
  auto r = invoke({"sinkhorn", "--config", cfg});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("colour"), std::string::npos) << r.err;
  const auto broken = write("broken.json", "{\"eps\": ");
  EXPECT_EQ(invoke({"sinkhorn", "--config", broken}).code, kUsageError);
  const auto nested = write("nested.json", "{\"eps\": {\"a\": 1}}");
  EXPECT_EQ(invoke({"sinkhorn", "--config", nested}).code, kUsageError);
  EXPECT_EQ(invoke({"sinkhorn", "--config", path("absent.json")}).code, kUsageError);
}

TEST_F(CliTest, ExperimentSingleCell) {
  const auto r = invoke({"experiment", "--kind", "slab", "--d", "3", "--J", "2", "--n-grid", "256", "--trials", "1",
                         "--mc-points", "2000", "--seed", "5", "--out-dir", path("out")});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_NE(r.out.find("entropic slope n/a"), std::string::npos) << r.out;
  const std::string raw = slurp(path("out") + "/raw.csv");
  EXPECT_EQ(std::count(raw.begin(), raw.end(), '\n'), 4);
}

TEST_F(CliTest, ExperimentFilesAreByteIdentical) {
  for (const char* tag : {"a", "b"}) {
    const auto r = invoke({"experiment", "--kind", "random-laguerre", "--d", "2", "--J", "3", "--n-grid", "32,64",
                           "--trials", "2", "--mc-points", "1000", "--seed", "9", "--out-dir", path(tag)});
    ASSERT_EQ(r.code, kSuccess) << r.err;
  }
  for (const char* f : {"raw.csv", "aggregate.csv", "report.json", "entropic.dat", "entropic_rounded.dat", "onenn.dat"}) {
    EXPECT_EQ(slurp(path("a") + "/" + f), slurp(path("b") + "/" + f)) << f;
    EXPECT_FALSE(slurp(path("a") + "/" + f).empty()) << f;
  }
}

TEST_F(CliTest, ExperimentLeCam) {
  const auto r = invoke({"experiment", "--kind", "lecam", "--r", "0.05", "--d", "5", "--out-dir", path("lc")});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  std::istringstream in(r.out);
  std::string label;
  double mse = 0.0;
  std::string se_label;
  double se = 0.0;
  in >> label >> mse >> se_label >> se;
  EXPECT_EQ(label, "mse");
  EXPECT_NEAR(mse, 0.05, 3.0 * se);
  EXPECT_TRUE(fs::exists(path("lc") + "/lecam.json"));
  EXPECT_EQ(invoke({"experiment", "--kind", "lecam", "--r", "0.7", "--out-dir", path("lc")}).code, kUsageError);
}

TEST_F(CliTest, VerifySuiteFilter) {
  const auto r = invoke({"verify", "--suite", "chi2"});
  EXPECT_EQ(r.code, kSuccess) << r.out;
  EXPECT_NE(r.out.find("PASS chi2/J=5,n=200"), std::string::npos);
  EXPECT_EQ(r.out.find("stability"), std::string::npos);
}

TEST_F(CliTest, VerifyCorruptedToleranceExitsThree) {
  const auto r = invoke({"verify", "--suite", "chi2,assignment", "--tolerance-scale", "0"});
  EXPECT_EQ(r.code, kVerificationFailed);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, VerifyDefaultRunPasses) {
  const auto r = invoke({"verify"});
  EXPECT_EQ(r.code, kSuccess) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

}  // namespace
}  // namespace entmap::cli
