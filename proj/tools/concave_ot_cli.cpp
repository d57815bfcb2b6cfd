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

// concave-ot: solve, audit and reproduce concave-cost transport experiments.

#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "concave_ot/experiments.hpp"

namespace {

using namespace concave_ot;

struct Common {
  std::string out;
  std::optional<std::uint64_t> seed;
  bool no_meet = false;
  double snap_tol = 0.0;

  Preprocessing pre() const { return {!no_meet, snap_tol}; }
  std::uint64_t resolved_seed() const { return seed ? *seed : default_seed(); }
};

void add_out(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output directory")->required();
}

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed,
                  "Random seed (default: $CONCAVE_OT_SEED or 0)");
}

void add_pre(CLI::App* cmd, Common& c) {
  cmd->add_flag("--no-meet", c.no_meet,
                "Solve without moving the common mass to the diagonal first");
  cmd->add_option("--snap-tol", c.snap_tol,
                  "Merge target atoms within this distance of a source atom")
      ->check(CLI::NonNegativeNumber);
}

void print(const ExperimentReport& r) {
  std::cout << r.experiment << ": " << (r.pass ? "pass" : "fail");
  if (r.reason) std::cout << " (" << *r.reason << ")";
  std::cout << "\n";
  for (const auto& [k, v] : r.metrics) std::cout << "  " << k << " = " << v << "\n";
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transport with concave costs"};
  app.require_subcommand(1);
  Common common;
  std::function<ExperimentReport()> run;

  // solve
  auto* solve = app.add_subcommand("solve", "Solve a transport problem exactly");
  std::string mu_path, nu_path, cost_text = R"({"kind":"power","alpha":0.5})";
  std::optional<double> entropic;
  std::size_t max_iter = 10'000;
  solve->add_option("--mu", mu_path, "Source measure (.csv or .json)")->required();
  solve->add_option("--nu", nu_path, "Target measure (.csv or .json)")->required();
  solve->add_option("--cost", cost_text, "Cost as JSON text or a JSON file");
  solve->add_option("--entropic", entropic, "Use Sinkhorn with this epsilon")
      ->check(CLI::PositiveNumber);
  solve->add_option("--max-iter", max_iter, "Sinkhorn iteration cap");
  add_out(solve, common);
  add_pre(solve, common);
  solve->callback([&] {
    run = [&] {
      SolveOptions o;
      o.mu = mu_path;
      o.nu = nu_path;
      o.out = common.out;
      o.cost = parse_cost_argument(cost_text);
      o.entropic_epsilon = entropic;
      o.max_iter = max_iter;
      o.pre = common.pre();
      return cmd_solve(o);
    };
  });

  // decompose
  auto* dec = app.add_subcommand("decompose", "Split and audit a transport plan");
  std::string plan_path;
  std::size_t cycle_len = 3;
  double mass_tol = kDefaultMassTol;
  dec->add_option("--plan", plan_path, "plan.json written by solve")->required();
  dec->add_option("--cost", cost_text, "Cost as JSON text or a JSON file");
  dec->add_option("--max-cycle-len", cycle_len, "Longest audited cycle")
      ->check(CLI::Range(2, 4));
  dec->add_option("--mass-tol", mass_tol, "Mass tolerance");
  add_out(dec, common);
  add_seed(dec, common);
  dec->callback([&] {
    run = [&] {
      DecomposeOptions o;
      o.plan = plan_path;
      o.out = common.out;
      o.cost = parse_cost_argument(cost_text);
      o.max_cycle_len = cycle_len;
      o.mass_tol = mass_tol;
      o.seed = common.resolved_seed();
      return cmd_decompose(o);
    };
  });

  // counterexample
  auto* cex = app.add_subcommand("counterexample",
                                 "Three-segment example: no optimal map");
  std::vector<std::size_t> ns{1, 2, 4, 8, 16, 32};
  double alpha = 0.5;
  std::size_t jobs = 1;
  cex->add_option("--n", ns, "Discretization levels")->delimiter(',');
  cex->add_option("--alpha", alpha, "Exponent of |x-y|^alpha");
  cex->add_option("--jobs", jobs, "Parallel solves")->check(CLI::PositiveNumber);
  add_out(cex, common);
  add_pre(cex, common);
  cex->callback([&] {
    run = [&] {
      CounterexampleOptions o;
      o.n = ns;
      o.alpha = alpha;
      o.jobs = jobs;
      o.out = common.out;
      o.pre = common.pre();
      return cmd_counterexample(o);
    };
  });

  // translation
  auto* tr = app.add_subcommand("translation",
                                "Translations are not optimal for concave costs");
  std::size_t n = 500;
  std::vector<double> e{1.0, 0.0};
  double tol = kDefaultTranslationTol;
  tr->add_option("--n", n, "Number of atoms");
  tr->add_option("--e", e, "Translation vector")->delimiter(',');
  tr->add_option("--alpha", alpha, "Exponent of |x-y|^alpha");
  tr->add_option("--tol", tol, "Relative translation tolerance");
  add_out(tr, common);
  add_seed(tr, common);
  add_pre(tr, common);
  tr->callback([&] {
    run = [&] {
      TranslationOptions o;
      o.n = n;
      o.e = e;
      o.alpha = alpha;
      o.tol = tol;
      o.seed = common.resolved_seed();
      o.out = common.out;
      o.pre = common.pre();
      return cmd_translation(o);
    };
  });

  // isotropy
  auto* iso = app.add_subcommand("isotropy", "Cone isotropy audit");
  std::string measure_path, generator = "uniform_box";
  std::size_t iso_n = 5000, dim = 2;
  IsotropyOptions audit;
  auto* measure_opt = iso->add_option("--measure", measure_path, "Measure file");
  iso->add_option("--generator", generator, "uniform_box or hyperplane")
      ->check(CLI::IsMember({"uniform_box", "hyperplane"}))
      ->excludes(measure_opt);
  iso->add_option("--n", iso_n, "Generated atoms");
  iso->add_option("--dim", dim, "Generated dimension");
  iso->add_option("--directions", audit.directions, "Directions per atom");
  iso->add_option("--deltas", audit.deltas, "Cone openings")->delimiter(',');
  iso->add_option("--eps-multipliers", audit.epsilon_multipliers,
                  "Cone radii in units of the resolution")
      ->delimiter(',');
  iso->add_option("--sample", audit.point_sample, "Audited atoms");
  add_out(iso, common);
  add_seed(iso, common);
  iso->callback([&] {
    run = [&] {
      IsotropyCommandOptions o;
      if (!measure_path.empty()) o.measure = measure_path;
      o.generator = generator;
      o.n = iso_n;
      o.dim = dim;
      o.audit = audit;
      o.seed = common.resolved_seed();
      o.out = common.out;
      return cmd_isotropy(o);
    };
  });

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct",
                                 "Recover the map from the Kantorovich potential");
  std::size_t k = 0;
  double kink_tol = 1e-6;
  rec->add_option("--mu", mu_path, "Source measure")->required();
  rec->add_option("--nu", nu_path, "Target measure")->required();
  rec->add_option("--cost", cost_text, "Cost as JSON text or a JSON file");
  rec->add_option("--k", k, "Neighbors in the gradient fit (0: max(d+1, 8))");
  rec->add_option("--kink-tol", kink_tol, "Distance to a kink counted as an event");
  add_out(rec, common);
  add_pre(rec, common);
  rec->callback([&] {
    run = [&] {
      ReconstructCommandOptions o;
      o.mu = mu_path;
      o.nu = nu_path;
      o.out = common.out;
      o.cost = parse_cost_argument(cost_text);
      o.k = k;
      o.kink_tol = kink_tol;
      o.pre = common.pre();
      return cmd_reconstruct(o);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitInputError;
  }

  try {
    const auto report = run();
    print(report);
    return report.pass ? kExitPass : kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for_exception(e);
  }
}
