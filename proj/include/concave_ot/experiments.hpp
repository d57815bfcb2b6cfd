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

// Experiment commands behind the command-line tool. Each command writes its
// artifacts, report.json and manifest.json under `out` and returns the report.

#ifndef CONCAVE_OT_EXPERIMENTS_HPP_
#define CONCAVE_OT_EXPERIMENTS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concave_ot/cost.hpp"
#include "concave_ot/geometry.hpp"
#include "concave_ot/solver.hpp"
#include "concave_ot/structure.hpp"
#include "json.hpp"

namespace concave_ot {

struct ExperimentReport {
  std::string experiment;
  nlohmann::json parameters = nlohmann::json::object();
  std::map<std::string, double> metrics;
  std::vector<std::string> artifacts;  // relative to the output directory
  std::vector<std::string> warnings;
  std::optional<std::string> reason;   // why pass is false, when known
  nlohmann::json details = nlohmann::json::object();
  bool pass = false;
};

nlohmann::json report_to_json(const ExperimentReport& report);

// Exit-code contract of the tool.
enum ExitCode : int {
  kExitPass = 0,
  kExitFail = 1,
  kExitInputError = 2,
  kExitSolverError = 3,
};

// Maps the library's exception types onto exit codes 2 and 3.
int exit_code_for_exception(const std::exception& e);

// Seed used when no --seed is given: CONCAVE_OT_SEED if set, else 0.
std::uint64_t default_seed();

// A cost given inline as JSON text or as a path to a JSON file.
ConcaveCost parse_cost_argument(const std::string& text);

struct Preprocessing {
  bool use_meet = true;
  double snap_tol = 0.0;
};

struct SolveOptions {
  std::filesystem::path mu, nu, out;
  ConcaveCost cost = ConcaveCost::power(0.5);
  std::optional<double> entropic_epsilon;
  std::size_t max_iter = 10'000;
  Preprocessing pre;
};
ExperimentReport cmd_solve(const SolveOptions& options);

struct DecomposeOptions {
  std::filesystem::path plan, out;
  ConcaveCost cost = ConcaveCost::power(0.5);
  double mass_tol = kDefaultMassTol;
  std::size_t max_cycle_len = 3;
  std::uint64_t seed = 0;
};
ExperimentReport cmd_decompose(const DecomposeOptions& options);

struct CounterexampleOptions {
  std::vector<std::size_t> n{1, 2, 4, 8, 16, 32};
  double alpha = 0.5;
  std::filesystem::path out;
  std::size_t jobs = 1;
  Preprocessing pre;
};
ExperimentReport cmd_counterexample(const CounterexampleOptions& options);

struct TranslationOptions {
  std::size_t n = 500;
  std::vector<double> e{1.0, 0.0};
  double alpha = 0.5;
  double tol = kDefaultTranslationTol;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  Preprocessing pre;
};
ExperimentReport cmd_translation(const TranslationOptions& options);

struct IsotropyCommandOptions {
  std::optional<std::filesystem::path> measure;
  std::string generator = "uniform_box";  // or "hyperplane"
  std::size_t n = 5000;
  std::size_t dim = 2;
  std::uint64_t seed = 0;
  IsotropyOptions audit;
  std::filesystem::path out;
};
ExperimentReport cmd_isotropy(const IsotropyCommandOptions& options);

struct ReconstructCommandOptions {
  std::filesystem::path mu, nu, out;
  ConcaveCost cost = ConcaveCost::power(0.5);
  std::size_t k = 0;
  double kink_tol = 1e-6;
  double mass_tol = kDefaultMassTol;
  Preprocessing pre;
};
ExperimentReport cmd_reconstruct(const ReconstructCommandOptions& options);

// Plan files: plan.json holds both measures, the objective and the name of a
// CSV of (source, target, mass) rows next to it.
void save_plan(const TransportPlan& plan, const std::filesystem::path& json_path,
               const nlohmann::json& header = nlohmann::json::object());
TransportPlan load_plan(const std::filesystem::path& json_path);

}  // namespace concave_ot

#endif  // CONCAVE_OT_EXPERIMENTS_HPP_
