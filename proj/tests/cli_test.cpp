// Copyright 2026 The concave-ot Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end runs of the concave-ot executable.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "concave_ot/measure.hpp"
#include "gtest/gtest.h"
#include "json.hpp"

namespace concave_ot {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("concave_ot_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + " " + CONCAVE_OT_CLI + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return (dir_ / name).string();
  }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string Slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json Report(const std::string& out) const {
    return json::parse(Slurp(dir_ / out / "report.json"));
  }

  fs::path dir_;
};

TEST_F(CliTest, SolveSingleAtomsCostsTheDistance) {
  const auto mu = Write("mu.csv", "0,0,1\n");
  const auto nu = Write("nu.csv", "3,4,1\n");
  ASSERT_EQ(Run("solve --mu " + mu + " --nu " + nu + " --out " + Path("out")), 0);
  const auto r = Report("out");
  EXPECT_TRUE(r["pass"].get<bool>());
  EXPECT_NEAR(r["metrics"]["objective"].get<double>(), std::sqrt(5.0), 1e-15);
  for (const char* f : {"plan.json", "plan.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
}

TEST_F(CliTest, SolveIdenticalMeasuresIsFree) {
  const auto mu = Write("mu.csv", "0,0,0.25\n1,0,0.25\n0,2,0.5\n");
  for (const char* meet : {"", " --no-meet"}) {
    ASSERT_EQ(Run("solve --mu " + mu + " --nu " + mu + " --out " + Path("out") + meet), 0);
    EXPECT_EQ(Report("out")["metrics"]["objective"].get<double>(), 0.0);
  }
}

TEST_F(CliTest, SolveThreeSegmentsWithinEnvelope) {
  auto [mu, nu] = three_segments(4);
  save_measure(mu, Path("a.json"));
  save_measure(nu, Path("bc.json"));
  ASSERT_EQ(Run("solve --mu " + Path("a.json") + " --nu " + Path("bc.json") +
                " --cost '{\"kind\":\"power\",\"alpha\":0.5}' --out " + Path("out")),
            0);
  const double obj = Report("out")["metrics"]["objective"].get<double>();
  EXPECT_GE(obj, 1.0 - 1e-12);
  EXPECT_LE(obj, std::sqrt(1.25) + 1e-12);
}

TEST_F(CliTest, EntropicSolveReportsConvergence) {
  const auto mu = Write("mu.csv", "0,0.5\n1,0.5\n");
  const auto nu = Write("nu.csv", "2,0.5\n3,0.5\n");
  EXPECT_EQ(Run("solve --mu " + mu + " --nu " + nu + " --entropic 0.01 --out " +
                Path("out")),
            0);
  const auto r = Report("out");
  EXPECT_EQ(r["metrics"]["converged"].get<double>(), 1.0);
  EXPECT_LE(r["metrics"]["marginal_violation"].get<double>(), 1e-6);
}

TEST_F(CliTest, DecomposeAcceptsOptimalPlan) {
  const auto mu = Write("mu.csv", "0,0,0.5\n1,0,0.5\n");
  const auto nu = Write("nu.csv", "0,0,0.3\n0,1,0.7\n");
  ASSERT_EQ(Run("solve --mu " + mu + " --nu " + nu + " --out " + Path("s")), 0);
  ASSERT_EQ(Run("decompose --plan " + Path("s/plan.json") + " --out " + Path("d")), 0);
  const auto r = Report("d");
  EXPECT_NEAR(r["metrics"]["diagonal_mass"].get<double>(), 0.3, 1e-15);
}

TEST_F(CliTest, DecomposeDiagonalOnlyPlan) {
  const auto plan = Write(
      "plan.json",
      R"({"source":{"dim":1,"atoms":[{"x":[0],"w":0.5},{"x":[1],"w":0.5}]},
          "target":{"dim":1,"atoms":[{"x":[0],"w":0.5},{"x":[1],"w":0.5}]},
          "entries":[[0,0,0.5],[1,1,0.5]]})");
  ASSERT_EQ(Run("decompose --plan " + plan + " --out " + Path("d")), 0);
  EXPECT_EQ(Report("d")["metrics"]["off_diagonal_mass"].get<double>(), 0.0);
}

TEST_F(CliTest, DecomposeFlagsAdversarialPlan) {
  const auto plan = Write(
      "plan.json",
      R"({"source":{"dim":1,"atoms":[{"x":[0],"w":0.5},{"x":[1],"w":0.5}]},
          "target":{"dim":1,"atoms":[{"x":[10],"w":0.5},{"x":[11],"w":0.5}]},
          "entries":[[0,0,0.5],[1,1,0.5]]})");
  ASSERT_EQ(Run("decompose --plan " + plan + " --out " + Path("d")), 1);
  const auto r = Report("d");
  EXPECT_FALSE(r["pass"].get<bool>());
  EXPECT_FALSE(r["details"]["ccm"]["violating_cycle"].is_null()) << r.dump(1);
}

TEST_F(CliTest, InputErrorsExitTwo) {
  const auto bad = Write("bad.csv", "0,0,1\nnot,a,number\n");
  const auto good = Write("good.csv", "0,0,1\n");
  EXPECT_EQ(Run("solve --mu " + bad + " --nu " + good + " --out " + Path("o")), 2);
  EXPECT_NE(Slurp(dir_ / "stderr.txt").find("line 2"), std::string::npos);
  EXPECT_EQ(Run("solve --mu " + good + " --nu " + good + " --cost '{bad' --out " +
                Path("o")),
            2);
  EXPECT_EQ(Run("solve --mu " + Path("missing.csv") + " --nu " + good + " --out " +
                Path("o")),
            2);
  EXPECT_EQ(Run("frobnicate"), 2);
  EXPECT_EQ(Run("translation --e 0,0 --n 20 --out " + Path("o")), 2);
  const auto d3 = Write("d3.csv", "0,0,0,1\n");
  EXPECT_EQ(Run("solve --mu " + good + " --nu " + d3 + " --out " + Path("o")), 2);
}

TEST_F(CliTest, ReconstructSingleAtomIsAnInputError) {
  const auto mu = Write("mu.csv", "0,0,1\n");
  const auto nu = Write("nu.csv", "2,0,1\n");
  EXPECT_EQ(Run("reconstruct --mu " + mu + " --nu " + nu + " --out " + Path("o")), 2);
}

TEST_F(CliTest, OversizedExactSolveIsASolverError) {
  const std::size_t n = 7100;
  std::string wa, wb;
  std::ostringstream w;
  w.precision(17);
  w << 1.0 / n;
  for (std::size_t i = 0; i < n; ++i) {
    wa += std::to_string(i) + "," + w.str() + "\n";
    wb += std::to_string(100000 + i) + "," + w.str() + "\n";
  }
  EXPECT_EQ(Run("solve --mu " + Write("a.csv", wa) + " --nu " + Write("b.csv", wb) +
                " --out " + Path("o")),
            3);
}

TEST_F(CliTest, IsotropyOfSingleAtomFails) {
  const auto mu = Write("mu.csv", "0.5,0.5,1\n");
  EXPECT_EQ(Run("isotropy --measure " + mu + " --out " + Path("o")), 1);
  const auto r = Report("o");
  EXPECT_FALSE(r["pass"].get<bool>());
}

TEST_F(CliTest, IsotropyGenerators) {
  EXPECT_EQ(Run("isotropy --generator uniform_box --n 3000 --sample 200 --out " +
                Path("box")),
            0);
  EXPECT_EQ(Run("isotropy --generator hyperplane --n 1000 --sample 200 --out " +
                Path("plane")),
            0);
  EXPECT_GE(Report("plane")["metrics"]["normal_up_failing"].get<double>(), 0.95);
}

TEST_F(CliTest, CounterexampleIsDeterministic) {
  ASSERT_EQ(Run("counterexample --n 1,2,4,8 --out " + Path("a")), 0);
  ASSERT_EQ(Run("counterexample --n 1,2,4,8 --jobs 2 --out " + Path("b")), 0);
  const auto a = Report("a"), b = Report("b");
  EXPECT_EQ(a["metrics"], b["metrics"]);
  ASSERT_EQ(Run("counterexample --n 1,2,4,8 --out " + Path("c")), 0);
  EXPECT_EQ(Slurp(dir_ / "a" / "report.json"), Slurp(dir_ / "c" / "report.json"));
  EXPECT_EQ(Slurp(dir_ / "a" / "counterexample.csv"),
            Slurp(dir_ / "c" / "counterexample.csv"));
  EXPECT_EQ(a["metrics"]["limit_split_fraction"].get<double>(), 1.0);
}

TEST_F(CliTest, TranslationRespectsSeedSources) {
  ASSERT_EQ(Run("translation --n 60 --out " + Path("env"), "CONCAVE_OT_SEED=5"), 0);
  EXPECT_EQ(Report("env")["parameters"]["seed"].get<std::uint64_t>(), 5u);
  ASSERT_EQ(Run("translation --n 60 --seed 7 --out " + Path("flag"),
                "CONCAVE_OT_SEED=5"),
            0);
  EXPECT_EQ(Report("flag")["parameters"]["seed"].get<std::uint64_t>(), 7u);
  ASSERT_EQ(Run("translation --n 60 --seed 5 --out " + Path("same")), 0);
  EXPECT_EQ(Slurp(dir_ / "env" / "report.json"), Slurp(dir_ / "same" / "report.json"));
  EXPECT_NE(Report("flag")["metrics"], Report("env")["metrics"]);
}

TEST_F(CliTest, ReconstructSeparatedClouds) {
  const std::vector<double> lo{0, 0}, hi{1, 1}, lo2{3, 3}, hi2{4, 4};
  save_measure(uniform_box(300, 2, lo, hi, 1), Path("mu.csv"));
  save_measure(uniform_box(300, 2, lo2, hi2, 2), Path("nu.csv"));
  EXPECT_EQ(Run("reconstruct --mu " + Path("mu.csv") + " --nu " + Path("nu.csv") +
                " --out " + Path("o")),
            0);
  EXPECT_LE(Report("o")["metrics"]["error_ratio"].get<double>(), 3.0);
}

}  // namespace
}  // namespace concave_ot
