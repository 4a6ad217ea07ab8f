#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stathm::cli {
namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("stathm_cli_") + info->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int call(std::vector<std::string> args, const fs::path& out) {
    args.insert(args.begin(), {"--out", out.string()});
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }
  int call(std::vector<std::string> args) { return call(std::move(args), dir_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  json run_json() const { return json::parse(slurp(dir_ / "run.json")); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, MeasureWritesOneRow) {
  ASSERT_EQ(call({"measure", "--set", "env:alpha=2", "--x", "1,1", "--N", "64", "--method", "exact"}), kExitOk)
      << err_.str();
  const std::string csv = slurp(dir_ / "measure.csv");
  std::istringstream in(csv);
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_FALSE(std::getline(in, extra) && !extra.empty());
  EXPECT_EQ(header.rfind("kind,x1,x2,y1,y2,value,std_error,method,N,W", 0), 0U);
  EXPECT_EQ(row.rfind("point,1,1,", 0), 0U);
  EXPECT_TRUE(fs::exists(dir_ / "plot.py"));
  const auto j = run_json();
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["command"], "measure");
  EXPECT_EQ(j["exit_code"], 0);
  EXPECT_EQ(j["options"]["--N"], "64");
  EXPECT_EQ(j["options"]["--hat"], false);
  EXPECT_TRUE(j["versions"].contains("stathm"));
}

TEST_F(Cli, PointOutsideTheSetIsAnError) {
  EXPECT_EQ(call({"measure", "--x", "0,1", "--N", "4", "--method", "exact"}), kExitError);
  EXPECT_NE(err_.str().find("error"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "measure.csv"));
  EXPECT_EQ(run_json()["exit_code"], kExitError);
  EXPECT_TRUE(run_json().contains("error"));
  // (0,1) is not in the alpha = 2 envelope either: column 0 is empty.
  EXPECT_EQ(call({"measure", "--set", "env:alpha=2", "--x", "0,1", "--N", "64"}), kExitError);
}

TEST_F(Cli, VerifyThm1Passes) {
  ASSERT_EQ(call({"verify-thm1", "--c", "1", "--n1", "4", "--kmax", "5"}), kExitOk) << err_.str();
  const auto r = json::parse(slurp(dir_ / "report.json"));
  EXPECT_TRUE(r["passed"].get<bool>());
  EXPECT_EQ(r["levels"].size(), 5U);
  EXPECT_FALSE(r.contains("runtime_seconds"));
  EXPECT_TRUE(fs::exists(dir_ / "levels.csv"));
}

TEST_F(Cli, FailedCheckExitsTwo) {
  EXPECT_EQ(call({"verify-thm1", "--c", "1", "--n1", "2", "--kmax", "3", "--margin", "0.49"}),
            kExitCheckFailed);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(call({}), kExitUsage);
  EXPECT_EQ(call({"frobnicate"}), kExitUsage);
  EXPECT_EQ(call({"measure"}), kExitUsage);
  EXPECT_NE(err_.str().find("--x"), std::string::npos);
  EXPECT_EQ(call({"measure", "--x", "1;1"}), kExitUsage);
  EXPECT_EQ(call({"measure", "--x", "1,1", "--method", "sor"}), kExitUsage);
  EXPECT_EQ(call({"measure", "--x", "1,1", "--set", "blob"}), kExitUsage);
}

TEST_F(Cli, HelpDocumentsDefaults) {
  const std::vector<std::string> subs = {"measure", "converge", "escape", "visits", "gen-set",
                                         "classify", "verify-thm1", "verify-thm2", "rect-lemma",
                                         "grow", "dla-step", "probe", "height-bound"};
  for (const auto& s : subs) {
    EXPECT_EQ(call({s, "--help"}), kExitOk) << s;
    EXPECT_NE(out_.str().find("Usage"), std::string::npos) << s;
    EXPECT_NE(out_.str().find("Exit codes"), std::string::npos) << s;
  }
  call({"measure", "--help"});
  EXPECT_NE(out_.str().find("[64]"), std::string::npos);
  EXPECT_NE(out_.str().find("lattice units"), std::string::npos);
}

TEST_F(Cli, ReplayIsByteIdentical) {
  ASSERT_EQ(call({"--seed", "7", "escape", "--start", "0,4", "--a", "above:8", "--b", "below:2",
                  "--method", "mc", "--chains", "2000", "--threads", "2"}),
            kExitOk)
      << err_.str();
  const fs::path again = dir_ / "again";
  ASSERT_EQ(call({"--replay", (dir_ / "run.json").string()}, again), kExitOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "escape.csv"), slurp(again / "escape.csv"));
  EXPECT_FALSE(slurp(dir_ / "escape.csv").empty());
}

TEST_F(Cli, ReplayOfGrowthIsByteIdentical) {
  ASSERT_EQ(call({"grow", "--width", "16", "--t-end", "1", "--replicas", "3"}), kExitOk) << err_.str();
  const fs::path again = dir_ / "again";
  ASSERT_EQ(call({"--replay", (dir_ / "run.json").string()}, again), kExitOk) << err_.str();
  for (const char* f : {"summary.csv", "events_000.csv", "snapshot_000.txt", "grow.json"}) {
    EXPECT_EQ(slurp(dir_ / f), slurp(again / f)) << f;
  }
}

TEST_F(Cli, ReplayRejectsUnknownSchema) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "bad.json") << R"({"schema_version": 99, "argv": []})";
  EXPECT_NE(call({"--replay", (dir_ / "bad.json").string()}, dir_ / "x"), kExitOk);
}

TEST_F(Cli, EscapeExact) {
  ASSERT_EQ(call({"escape", "--start", "0,4", "--a", "above:8", "--b", "below:2", "--reflect", "4"}), kExitOk)
      << err_.str();
  const std::string csv = slurp(dir_ / "escape.csv");
  EXPECT_NE(csv.find("0,4,0.33333333333"), std::string::npos) << csv;
  // Without side walls the strip is not enclosed.
  EXPECT_EQ(call({"escape", "--start", "0,4", "--a", "above:8", "--b", "below:2", "--max-sites", "10000"},
                 dir_ / "open"),
            kExitError);
}

TEST_F(Cli, GenSetAndClassify) {
  ASSERT_EQ(call({"gen-set", "--set", "cex:nmax=3"}), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "set.txt"));
  const std::string file = "file:" + (dir_ / "set.txt").string();
  const fs::path c = dir_ / "c";
  ASSERT_EQ(call({"classify", "--set", file}, c), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(c / "classify.json"));
}

TEST_F(Cli, VisitsAndRectangle) {
  EXPECT_EQ(call({"visits", "--N", "1,4"}), kExitOk) << err_.str();
  EXPECT_EQ(call({"rect-lemma", "--k", "2", "--n", "1,2"}, dir_ / "r"), kExitOk) << err_.str();
}

TEST_F(Cli, ProbeAndHeightBound) {
  EXPECT_EQ(call({"probe", "--width", "16", "--t-end", "1", "--replicas", "2", "--times", "0,1"}), kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "probe.csv"));
  EXPECT_EQ(call({"height-bound", "--set", "cex:nmax=3", "--N", "32,64"}, dir_ / "h"), kExitOk) << err_.str();
}

TEST_F(Cli, DlaStep) {
  EXPECT_EQ(call({"dla-step", "--set", "cex:nmax=3", "--N", "16", "--steps", "2"}), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "final.txt"));
}

}  // namespace
}  // namespace stathm::cli
