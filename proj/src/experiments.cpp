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

#include "concave_ot/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <thread>

#include "concave_ot/errors.hpp"

namespace concave_ot {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to line number.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = static_cast<std::size_t>(
        std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto),
                   '\n') + 1);
    throw ParseError(e.what(), line);
  }
}

ExperimentReport& finish(ExperimentReport& report, const fs::path& out) {
  write_json(out / "report.json", report_to_json(report));
  json manifest{{"experiment", report.experiment}, {"pass", report.pass}};
  json files = json::array();
  for (const auto& a : report.artifacts) files.push_back(a);
  files.push_back("report.json");
  manifest["files"] = files;
  write_json(out / "manifest.json", manifest);
  return report;
}

void prepare_out(const fs::path& out) {
  if (out.empty()) throw ValidationError("an output directory is required");
  fs::create_directories(out);
}

json pre_json(const Preprocessing& pre) {
  return {{"meet_subtraction", pre.use_meet}, {"snap_tol", pre.snap_tol}};
}

MeasurePtr snapped(const MeasurePtr& nu, const MeasurePtr& mu,
                   const Preprocessing& pre) {
  if (!(pre.snap_tol > 0.0)) return nu;
  return share(snap_onto(*nu, *mu, pre.snap_tol));
}

ExactSolution solve_with(const MeasurePtr& mu, const MeasurePtr& nu,
                         const ConcaveCost& cost, const Preprocessing& pre) {
  return pre.use_meet ? solve_exact_with_meet(mu, nu, cost)
                      : solve_exact(mu, nu, cost);
}

DiscreteMeasure finite_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("atoms"))
    throw ParseError("measure object needs \"dim\" and \"atoms\"", 0);
  const auto dim = j.at("dim").get<std::size_t>();
  PointSet pts(dim);
  std::vector<double> w;
  for (const auto& atom : j.at("atoms")) {
    const auto x = atom.at("x").get<std::vector<double>>();
    if (x.size() != dim) throw DimensionMismatch("atom has the wrong dimension");
    pts.push_back(x);
    w.push_back(atom.at("w").get<double>());
  }
  return DiscreteMeasure::finite(std::move(pts), std::move(w));
}

json measure_summary(const DiscreteMeasure& m) {
  return {{"atoms", m.size()}, {"mass", m.total_mass()},
          {"measure", measure_to_json(m)}};
}

void write_potentials(const fs::path& path, std::span<const double> values) {
  std::string text = "# index,value\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    text += std::to_string(i) + "," + fmt(values[i]) + "\n";
  write_text(path, text);
}

json certificate_json(const Certificate& c) {
  return {{"feasible_dual", c.feasible_dual}, {"slack_ok", c.slack_ok},
          {"gap", c.gap}, {"max_dual_violation", c.max_dual_violation},
          {"max_slack_residual", c.max_slack_residual},
          {"primal", c.primal}, {"dual", c.dual}};
}

json stats_json(const SolverStats& s) {
  return {{"pivots", s.pivots}, {"degenerate_pivots", s.degenerate_pivots},
          {"pivot_budget", s.pivot_budget}};
}

json ccm_json(const CcmReport& r, const TransportPlan& plan) {
  json j{{"cycles_checked", r.cycles_checked},
         {"support_size", r.support_size},
         {"worst_violation", r.worst_violation},
         {"exhaustive", r.exhaustive}};
  if (r.violating_cycle) {
    json pairs = json::array();
    for (std::size_t e : r.violating_cycle->entries)
      pairs.push_back({plan.entries()[e].source, plan.entries()[e].target});
    j["violating_cycle"] = {{"entries", r.violating_cycle->entries},
                            {"pairs", pairs},
                            {"violation", r.violating_cycle->violation}};
  } else {
    j["violating_cycle"] = nullptr;
  }
  return j;
}

json map_json(const MapExtract& m) {
  json assignments = json::array();
  for (const auto& a : m.assignments)
    assignments.push_back({a.source, a.target, a.mass});
  json splits = json::array();
  for (const auto& s : m.splits)
    splits.push_back(
        {{"source", s.source}, {"targets", s.targets}, {"masses", s.masses}});
  return {{"assignments", assignments}, {"splits", splits},
          {"split_fraction", m.split_fraction},
          {"off_diagonal_mass", m.off_diagonal_mass}};
}

json stay_json(const StayAtRestReport& r) {
  return {{"diag_matches_meet", r.diag_matches_meet},
          {"off_marginals_singular", r.off_marginals_singular},
          {"max_diagonal_error", r.max_diagonal_error},
          {"diagonal_mass", r.diagonal_mass},
          {"meet_mass", r.meet_mass},
          {"shared_atoms", r.shared_atoms}};
}

const char* status_name(ReconstructionStatus s) {
  switch (s) {
    case ReconstructionStatus::kOk: return "ok";
    case ReconstructionStatus::kGap: return "gap";
    case ReconstructionStatus::kOutOfRange: return "out_of_range";
    case ReconstructionStatus::kNearDiagonal: return "near_diagonal";
  }
  return "unknown";
}

// Runs f(0..count-1) on up to `jobs` threads; rethrows the first failure.
template <class F>
void parallel_for(std::size_t count, std::size_t jobs, F&& f) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

json report_to_json(const ExperimentReport& report) {
  json metrics = json::object();
  for (const auto& [k, v] : report.metrics) metrics[k] = v;
  json j{{"experiment", report.experiment},
         {"pass", report.pass},
         {"parameters", report.parameters},
         {"metrics", metrics},
         {"artifacts", report.artifacts},
         {"warnings", report.warnings},
         {"details", report.details}};
  j["reason"] = report.reason ? json(*report.reason) : json(nullptr);
  return j;
}

int exit_code_for_exception(const std::exception& e) {
  if (dynamic_cast<const SolverError*>(&e) ||
      dynamic_cast<const ResourceError*>(&e) ||
      dynamic_cast<const std::bad_alloc*>(&e))
    return kExitSolverError;
  if (dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e) ||
      dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const PreconditionError*>(&e) ||
      dynamic_cast<const json::exception*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e) ||
      dynamic_cast<const std::invalid_argument*>(&e))
    return kExitInputError;
  return kExitSolverError;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("CONCAVE_OT_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string("CONCAVE_OT_SEED is not an unsigned integer: ") +
                          env);
  }
}

ConcaveCost parse_cost_argument(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    return cost_from_json(parse_json_text(text));
  return cost_from_json(parse_json_text(read_text(text)));
}

void save_plan(const TransportPlan& plan, const fs::path& json_path,
               const json& header) {
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  std::string text = "# source,target,mass\n";
  for (const auto& e : plan.entries())
    text += std::to_string(e.source) + "," + std::to_string(e.target) + "," +
            fmt(e.mass) + "\n";
  write_text(csv_path, text);

  json j = header;
  j["entries_csv"] = csv_path.filename().string();
  j["entry_count"] = plan.entries().size();
  j["source"] = measure_to_json(plan.source());
  j["target"] = measure_to_json(plan.target());
  write_json(json_path, j);
}

TransportPlan load_plan(const fs::path& json_path) {
  const json j = parse_json_text(read_text(json_path));
  if (!j.is_object() || !j.contains("source") || !j.contains("target"))
    throw ParseError("plan file needs \"source\" and \"target\" measures", 0);
  auto mu = share(finite_from_json(j.at("source")));
  auto nu = share(finite_from_json(j.at("target")));
  if (mu->dim() != nu->dim())
    throw DimensionMismatch("plan measures differ in dimension");

  std::vector<PlanEntry> entries;
  if (j.contains("entries")) {
    for (const auto& row : j.at("entries"))
      entries.push_back({row.at(0).get<std::size_t>(),
                         row.at(1).get<std::size_t>(), row.at(2).get<double>()});
  } else {
    const fs::path csv = json_path.parent_path() /
                         j.at("entries_csv").get<std::string>();
    std::istringstream in(read_text(csv));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::istringstream row(line);
      std::string a, b, c;
      if (!std::getline(row, a, ',') || !std::getline(row, b, ',') ||
          !std::getline(row, c))
        throw ParseError("expected source,target,mass", line_no);
      try {
        std::size_t used = 0;
        PlanEntry e;
        e.source = std::stoull(a, &used);
        e.target = std::stoull(b);
        e.mass = std::stod(c);
        entries.push_back(e);
      } catch (const std::logic_error&) {
        throw ParseError("malformed plan row", line_no);
      }
    }
  }
  TransportPlan plan(std::move(mu), std::move(nu), std::move(entries));
  if (plan.marginal_error() > kMarginalTolerance)
    throw ValidationError("plan marginals do not match its measures (error " +
                          fmt(plan.marginal_error()) + ")");
  return plan;
}

ExperimentReport cmd_solve(const SolveOptions& o) {
  auto mu = share(load_measure(o.mu));
  auto nu = share(load_measure(o.nu));
  if (mu->dim() != nu->dim())
    throw DimensionMismatch("source and target measures differ in dimension");
  nu = snapped(nu, mu, o.pre);
  prepare_out(o.out);

  ExperimentReport r;
  r.experiment = "solve";
  r.parameters = {{"mu", o.mu.string()}, {"nu", o.nu.string()},
                  {"cost", o.cost}, {"preprocessing", pre_json(o.pre)}};
  const auto parts = meet(*mu, *nu);
  r.metrics["common_mass"] = parts.common.total_mass();

  if (o.entropic_epsilon) {
    r.parameters["entropic_epsilon"] = *o.entropic_epsilon;
    r.parameters["max_iter"] = o.max_iter;
    const auto c = cost_matrix(*mu, *nu, o.cost);
    const auto sol = solve_entropic(mu, nu, c, {*o.entropic_epsilon, o.max_iter});
    save_plan(sol.plan, o.out / "plan.json",
              {{"objective", sol.objective}, {"solver", "entropic"},
               {"iterations", sol.iterations}, {"converged", sol.converged},
               {"marginal_violation", sol.marginal_violation}});
    r.artifacts = {"plan.json", "plan.csv"};
    r.metrics["objective"] = sol.objective;
    r.metrics["marginal_violation"] = sol.marginal_violation;
    r.metrics["iterations"] = static_cast<double>(sol.iterations);
    r.metrics["converged"] = sol.converged ? 1.0 : 0.0;
    r.pass = sol.converged && sol.marginal_violation <= 1e-6;
    if (!sol.converged) {
      r.reason = "entropic iteration did not converge";
      r.warnings.push_back(*r.reason);
    }
    return finish(r, o.out);
  }

  if (o.pre.use_meet && !parts.common.empty())
    r.warnings.push_back("common mass kept on the diagonal; residuals solved");
  const auto sol = solve_with(mu, nu, o.cost, o.pre);
  const auto cert = certify(sol.plan, sol.potentials, o.cost, kMarginalTolerance);
  save_plan(sol.plan, o.out / "plan.json",
            {{"objective", sol.objective}, {"solver", "network_simplex"},
             {"gap", cert.gap}, {"stats", stats_json(sol.stats)}});
  write_potentials(o.out / "potentials_mu.csv", sol.potentials.phi);
  write_potentials(o.out / "potentials_nu.csv", sol.potentials.psi);
  write_json(o.out / "certificate.json", certificate_json(cert));
  r.artifacts = {"plan.json", "plan.csv", "potentials_mu.csv",
                 "potentials_nu.csv", "certificate.json"};
  r.metrics["objective"] = sol.objective;
  r.metrics["gap"] = cert.gap;
  r.metrics["max_dual_violation"] = cert.max_dual_violation;
  r.metrics["max_slack_residual"] = cert.max_slack_residual;
  r.metrics["pivots"] = static_cast<double>(sol.stats.pivots);
  r.pass = cert.feasible_dual && cert.slack_ok && std::abs(cert.gap) <= 1e-8;
  if (!r.pass) r.reason = "duality certificate failed";
  return finish(r, o.out);
}

ExperimentReport cmd_decompose(const DecomposeOptions& o) {
  const auto plan = load_plan(o.plan);
  prepare_out(o.out);
  ExperimentReport r;
  r.experiment = "decompose";
  r.parameters = {{"plan", o.plan.string()}, {"cost", o.cost},
                  {"mass_tol", o.mass_tol}, {"max_cycle_len", o.max_cycle_len},
                  {"ccm_tol", kDefaultMassTol}, {"seed", o.seed}};

  const auto d = decompose(plan);
  const auto stay = verify_stay_at_rest(plan.source(), plan.target(), plan, o.mass_tol);
  CcmOptions ccm_options;
  ccm_options.max_cycle_len = o.max_cycle_len;
  ccm_options.seed = o.seed;
  const auto ccm = verify_ccm(plan, o.cost, ccm_options);
  const auto map = extract_map(d, o.mass_tol);

  write_json(o.out / "decomposition.json",
             {{"diagonal_entries", d.diagonal.size()},
              {"off_diagonal_entries", d.off_diagonal.size()},
              {"diagonal_source", measure_summary(d.diagonal_source)},
              {"diagonal_target", measure_summary(d.diagonal_target)},
              {"off_source", measure_summary(d.off_source)},
              {"off_target", measure_summary(d.off_target)}});
  write_json(o.out / "stay_at_rest.json", stay_json(stay));
  write_json(o.out / "ccm.json", ccm_json(ccm, plan));
  write_json(o.out / "map.json", map_json(map));
  r.artifacts = {"decomposition.json", "stay_at_rest.json", "ccm.json", "map.json"};

  r.metrics["objective"] = plan.objective(o.cost);
  r.metrics["diagonal_mass"] = d.diagonal_mass();
  r.metrics["off_diagonal_mass"] = d.off_diagonal_mass();
  r.metrics["meet_mass"] = stay.meet_mass;
  r.metrics["max_diagonal_error"] = stay.max_diagonal_error;
  r.metrics["ccm_worst_violation"] = ccm.worst_violation;
  r.metrics["ccm_cycles_checked"] = static_cast<double>(ccm.cycles_checked);
  r.metrics["split_fraction"] = map.split_fraction;
  r.details["ccm"] = ccm_json(ccm, plan);

  r.pass = stay.ok() && ccm.ok(kDefaultMassTol);
  if (!stay.diag_matches_meet)
    r.reason = "diagonal marginal differs from the common mass";
  else if (!stay.off_marginals_singular)
    r.reason = "off-diagonal marginals share atoms";
  else if (!ccm.ok(kDefaultMassTol))
    r.reason = "plan is not cyclically monotone";
  return finish(r, o.out);
}

ExperimentReport cmd_counterexample(const CounterexampleOptions& o) {
  if (o.n.empty()) throw ValidationError("no n values given");
  for (std::size_t n : o.n)
    if (n == 0) throw ValidationError("n values must be >= 1");
  const auto cost = ConcaveCost::power(o.alpha);
  prepare_out(o.out);

  struct Row {
    std::size_t n;
    double objective, lower, upper, split;
  };
  std::vector<Row> rows(o.n.size());
  parallel_for(o.n.size(), o.jobs, [&](std::size_t k) {
    const std::size_t n = o.n[k];
    auto [mu, nu] = three_segments(n);
    const auto sol = solve_with(share(std::move(mu)), share(std::move(nu)), cost, o.pre);
    rows[k] = {n, sol.objective, cost.eval(1.0),
               cost.eval(1.0 + 1.0 / static_cast<double>(n)),
               extract_map(decompose(sol.plan)).split_fraction};
  });

  ExperimentReport r;
  r.experiment = "counterexample";
  r.parameters = {{"n", o.n}, {"alpha", o.alpha}, {"jobs", o.jobs},
                  {"preprocessing", pre_json(o.pre)}, {"envelope_tol", 1e-12}};
  std::string csv = "n,objective,lower,upper,split_fraction\n";
  bool envelopes = true;
  for (const auto& row : rows) {
    csv += std::to_string(row.n) + "," + fmt(row.objective) + "," +
           fmt(row.lower) + "," + fmt(row.upper) + "," + fmt(row.split) + "\n";
    const std::string tag = "_n" + std::to_string(row.n);
    r.metrics["objective" + tag] = row.objective;
    r.metrics["split_fraction" + tag] = row.split;
    r.metrics["upper" + tag] = row.upper;
    envelopes &= row.objective >= row.lower - 1e-12 && row.objective <= row.upper + 1e-12;
  }
  auto sorted = rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const Row& a, const Row& b) { return a.n < b.n; });
  bool monotone = true;
  for (std::size_t k = 1; k < sorted.size(); ++k)
    monotone &= sorted[k].objective <= sorted[k - 1].objective + 1e-12;

  // Limit plan 1/2 T+ + 1/2 T- on matched grids at the finest n.
  const std::size_t n = sorted.back().n;
  auto mu = share(three_segments(n).first);
  PointSet side(2);
  std::vector<double> w;
  for (double x : {1.0, -1.0})
    for (std::size_t k = 0; k < 2 * n; ++k) {
      side.push_back(std::vector<double>{x, mu->point(k)[1]});
      w.push_back(0.5 * mu->weight(k));
    }
  auto matched = share(DiscreteMeasure::finite(std::move(side), std::move(w)));
  std::vector<PlanEntry> entries;
  for (std::size_t k = 0; k < 2 * n; ++k)
    for (double x : {1.0, -1.0}) {
      std::vector<double> y{x, mu->point(k)[1]};
      entries.push_back({k, *matched->find(y), 0.5 * mu->weight(k)});
    }
  const TransportPlan limit(mu, matched, std::move(entries));
  const double limit_cost = limit.objective(cost);
  const double limit_split = extract_map(decompose(limit)).split_fraction;
  r.metrics["ell_1"] = cost.eval(1.0);
  r.metrics["limit_cost"] = limit_cost;
  r.metrics["limit_split_fraction"] = limit_split;
  const bool limit_ok = std::abs(limit_cost - cost.eval(1.0)) <= 1e-15;

  write_text(o.out / "counterexample.csv", csv);
  save_plan(limit, o.out / "limit_plan.json", {{"objective", limit_cost}});
  r.artifacts = {"counterexample.csv", "limit_plan.json", "limit_plan.csv"};
  r.details = {{"envelopes", envelopes}, {"monotone", monotone},
               {"limit_cost_is_ell_1", limit_ok}};
  r.pass = envelopes && monotone && limit_ok;
  if (!envelopes) r.reason = "an objective left its envelope";
  else if (!monotone) r.reason = "objectives are not non-increasing in n";
  else if (!limit_ok) r.reason = "limit plan cost differs from l(1)";
  return finish(r, o.out);
}

ExperimentReport cmd_translation(const TranslationOptions& o) {
  if (o.e.empty()) throw ValidationError("translation vector is empty");
  if (norm(o.e) == 0.0) throw DomainError("translation vector must be nonzero");
  if (o.n == 0) throw ValidationError("n must be >= 1");
  const auto cost = ConcaveCost::power(o.alpha);
  const std::size_t dim = o.e.size();
  const std::vector<double> lo(dim, 0.0), hi(dim, 1.0);
  auto mu = share(uniform_box(o.n, dim, lo, hi, o.seed));
  auto nu = share(translate(*mu, o.e));
  prepare_out(o.out);

  const auto concave = solve_with(mu, nu, cost, o.pre);
  const auto convex = solve_exact(mu, nu, cost_matrix(mu->points(), nu->points(),
                                                      GroundCost(quadratic_cost)));
  const double len = norm(o.e);

  ExperimentReport r;
  r.experiment = "translation";
  r.parameters = {{"n", o.n}, {"e", o.e}, {"alpha", o.alpha}, {"tol", o.tol},
                  {"seed", o.seed}, {"box", {lo, hi}},
                  {"preprocessing", pre_json(o.pre)}};
  const double ell_e = cost.eval(len);
  r.metrics["concave_objective"] = concave.objective;
  r.metrics["ell_e"] = ell_e;
  r.metrics["concave_margin"] = ell_e - concave.objective;
  r.metrics["concave_translation_mass"] = translation_mass(concave.plan, o.e, o.tol);
  r.metrics["convex_objective"] = convex.objective;
  r.metrics["convex_expected"] = len * len;
  r.metrics["convex_translation_mass"] = translation_mass(convex.plan, o.e, o.tol);

  save_plan(concave.plan, o.out / "plan_concave.json",
            {{"objective", concave.objective}, {"cost", cost}});
  save_plan(convex.plan, o.out / "plan_convex.json",
            {{"objective", convex.objective}, {"cost", "quadratic"}});
  r.artifacts = {"plan_concave.json", "plan_concave.csv", "plan_convex.json",
                 "plan_convex.csv"};

  const bool strict = concave.objective < ell_e;
  const bool convex_shift =
      std::abs(r.metrics["convex_translation_mass"] - 1.0) <= 1e-3 &&
      std::abs(convex.objective - len * len) <= 1e-6;
  r.pass = strict && convex_shift;
  if (!strict) r.reason = "concave optimum is not below l(|e|)";
  else if (!convex_shift) r.reason = "quadratic control is not the translation";
  return finish(r, o.out);
}

ExperimentReport cmd_isotropy(const IsotropyCommandOptions& o) {
  DiscreteMeasure mu;
  std::string source;
  if (o.measure) {
    mu = load_measure(*o.measure);
    source = o.measure->string();
  } else if (o.generator == "uniform_box") {
    const std::vector<double> lo(o.dim, 0.0), hi(o.dim, 1.0);
    mu = uniform_box(o.n, o.dim, lo, hi, o.seed);
    source = "uniform_box";
  } else if (o.generator == "hyperplane") {
    mu = hyperplane_sample(o.n, o.dim, o.seed);
    source = "hyperplane";
  } else {
    throw ValidationError("unknown generator " + o.generator);
  }
  prepare_out(o.out);

  IsotropyOptions audit = o.audit;
  audit.seed = o.seed;
  const auto rep = isotropy_audit(mu, audit);

  ExperimentReport r;
  r.experiment = "isotropy";
  r.parameters = {{"source", source}, {"n", mu.size()}, {"dim", mu.dim()},
                  {"seed", o.seed}, {"directions", audit.directions},
                  {"deltas", rep.deltas}, {"epsilons", rep.epsilons},
                  {"epsilon_multipliers", audit.epsilon_multipliers},
                  {"point_sample", audit.point_sample}};
  r.metrics["resolution"] = rep.resolution;
  r.metrics["failing_mass_fraction"] = rep.failing_mass_fraction;
  r.metrics["interior_failing_fraction"] = rep.interior_failing_fraction;
  r.metrics["interior_mass_fraction"] = rep.interior_mass_fraction;
  r.metrics["sampled_atoms"] = static_cast<double>(rep.sampled_atoms.size());
  if (rep.warning) r.warnings.push_back(*rep.warning);

  json witness = nullptr;
  if (rep.worst_witness)
    witness = {{"atom", rep.worst_witness->atom},
               {"direction", rep.worst_witness->direction},
               {"delta", rep.worst_witness->delta},
               {"epsilon", rep.worst_witness->epsilon}};
  write_json(o.out / "isotropy.json",
             {{"resolution", rep.resolution},
              {"degenerate", rep.degenerate},
              {"directions", rep.directions},
              {"direction_failing_fraction", rep.direction_failing_fraction},
              {"failing_mass_fraction", rep.failing_mass_fraction},
              {"interior_failing_fraction", rep.interior_failing_fraction},
              {"worst_witness", witness}});
  std::string csv = "atom,mass,failing_cells,hull_distance\n";
  for (std::size_t k = 0; k < rep.sampled_atoms.size(); ++k)
    csv += std::to_string(rep.sampled_atoms[k]) + "," + fmt(rep.sampled_mass[k]) +
           "," + std::to_string(rep.failing_cells[k]) + "," +
           fmt(rep.hull_distance[k]) + "\n";
  write_text(o.out / "isotropy_atoms.csv", csv);
  r.artifacts = {"isotropy.json", "isotropy_atoms.csv"};

  if (rep.degenerate) {
    r.pass = false;
    r.reason = *rep.warning;
  } else if (!o.measure && o.generator == "hyperplane") {
    std::vector<double> up(mu.dim(), 0.0), down(mu.dim(), 0.0);
    up.back() = 1.0;
    down.back() = -1.0;
    const double fu = rep.failing_fraction_toward(up);
    const double fd = rep.failing_fraction_toward(down);
    r.metrics["normal_up_failing"] = fu;
    r.metrics["normal_down_failing"] = fd;
    r.pass = fu >= 0.95 && fd >= 0.95;
    if (!r.pass) r.reason = "normal directions are charged";
  } else {
    r.pass = rep.interior_failing_fraction <= 0.05;
    if (!r.pass) r.reason = "interior atoms fail the cone test";
  }
  return finish(r, o.out);
}

ExperimentReport cmd_reconstruct(const ReconstructCommandOptions& o) {
  auto mu = share(load_measure(o.mu));
  auto nu = share(load_measure(o.nu));
  if (mu->dim() != nu->dim())
    throw DimensionMismatch("source and target measures differ in dimension");
  nu = snapped(nu, mu, o.pre);
  prepare_out(o.out);

  ExperimentReport r;
  r.experiment = "reconstruct";
  r.parameters = {{"mu", o.mu.string()}, {"nu", o.nu.string()},
                  {"cost", o.cost}, {"k", o.k}, {"kink_tol", o.kink_tol},
                  {"mass_tol", o.mass_tol}, {"grad_tol", kDefaultGradTol},
                  {"preprocessing", pre_json(o.pre)}};
  if (!mutually_singular(*mu, *nu)) {
    r.warnings.push_back("measures share atoms");
    if (o.pre.use_meet) {
      const auto parts = meet(*mu, *nu);
      r.warnings.push_back("common mass subtracted; reconstructing residuals");
      r.metrics["common_mass"] = parts.common.total_mass();
      mu = share(parts.mu_residual);
      nu = share(parts.nu_residual);
    }
  }

  const auto sol = solve_exact(mu, nu, o.cost);
  ReconstructOptions ro;
  ro.k_neighbors = o.k;
  const auto rec = reconstruct_map_from_potential(sol.potentials, sol.plan, o.cost, ro);
  const auto map = extract_map(decompose(sol.plan), o.mass_tol);
  const auto kinks = detect_kink_events(sol.plan, o.cost, o.kink_tol);
  const double resolution = median_nearest_neighbor_distance(nu->points());

  r.parameters["k_resolved"] = rec.k_neighbors;
  r.metrics["objective"] = sol.objective;
  r.metrics["median_error"] = rec.median_error;
  r.metrics["p90_error"] = rec.p90_error;
  r.metrics["target_resolution"] = resolution;
  r.metrics["error_ratio"] = resolution > 0.0 ? rec.median_error / resolution : 0.0;
  r.metrics["aligned_mass_fraction"] = rec.aligned_mass_fraction;
  r.metrics["split_fraction"] = map.split_fraction;
  r.metrics["kink_events"] = static_cast<double>(kinks.count);
  r.metrics["kink_mass"] = kinks.mass;
  r.metrics["gap_events"] = static_cast<double>(rec.gap_events);
  r.metrics["out_of_range"] = static_cast<double>(rec.out_of_range);
  r.metrics["near_diagonal"] = static_cast<double>(rec.near_diagonal);
  r.metrics["median_fit_residual"] = rec.median_fit_residual;

  std::string csv = "source,status,lp_target,error,direction_cosine,fit_residual";
  for (std::size_t c = 0; c < mu->dim(); ++c) csv += ",pred" + std::to_string(c);
  csv += "\n";
  for (std::size_t i = 0; i < rec.atoms.size(); ++i) {
    const auto& a = rec.atoms[i];
    csv += std::to_string(i) + "," + status_name(a.status) + "," +
           (a.lp_target ? std::to_string(*a.lp_target) : std::string()) + "," +
           fmt(a.error) + "," + fmt(a.direction_cosine) + "," + fmt(a.fit_residual);
    for (std::size_t c = 0; c < mu->dim(); ++c)
      csv += "," + (a.predicted.empty() ? std::string() : fmt(a.predicted[c]));
    csv += "\n";
  }
  write_text(o.out / "reconstruction.csv", csv);
  save_plan(sol.plan, o.out / "plan.json", {{"objective", sol.objective}});
  r.artifacts = {"reconstruction.csv", "plan.json", "plan.csv"};

  r.pass = rec.median_error <= 3.0 * resolution;
  if (!r.pass) r.reason = "median prediction error exceeds 3x target resolution";
  return finish(r, o.out);
}

}  // namespace concave_ot
