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

#include "concave_ot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "concave_ot/errors.hpp"
#include "network_simplex.hpp"

namespace concave_ot {
namespace {

void check_instance(const MeasurePtr& mu, const MeasurePtr& nu) {
  if (!mu || !nu) throw ValidationError("null measure");
  if (mu->dim() != nu->dim())
    throw DimensionMismatch("source and target measures differ in dimension");
  if (mu->empty() || nu->empty())
    throw ValidationError("transport between empty measures");
  if (std::abs(mu->total_mass() - nu->total_mass()) > kMarginalTolerance)
    throw ValidationError("source and target masses differ");
}

void check_dense_size(std::size_t m, std::size_t n) {
  if (static_cast<double>(m) * static_cast<double>(n) >
      static_cast<double>(kMaxDenseEntries))
    throw ResourceError(
        "instance has more than 5e7 cost entries; use solve_entropic");
}

}  // namespace

TransportPlan::TransportPlan(MeasurePtr source, MeasurePtr target,
                             std::vector<PlanEntry> entries)
    : source_(std::move(source)),
      target_(std::move(target)),
      entries_(std::move(entries)) {
  if (!source_ || !target_) throw ValidationError("plan needs both measures");
  for (const auto& e : entries_) {
    if (e.source >= source_->size() || e.target >= target_->size())
      throw ValidationError("plan entry index out of range");
    if (!(e.mass >= 0.0) || !std::isfinite(e.mass))
      throw ValidationError("plan masses must be finite and nonnegative");
  }
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> rows(source_->size(), 0.0);
  for (const auto& e : entries_) rows[e.source] += e.mass;
  return rows;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> cols(target_->size(), 0.0);
  for (const auto& e : entries_) cols[e.target] += e.mass;
  return cols;
}

double TransportPlan::marginal_error() const {
  double worst = 0.0;
  const auto rows = row_sums();
  for (std::size_t i = 0; i < rows.size(); ++i)
    worst = std::max(worst, std::abs(rows[i] - source_->weight(i)));
  const auto cols = col_sums();
  for (std::size_t j = 0; j < cols.size(); ++j)
    worst = std::max(worst, std::abs(cols[j] - target_->weight(j)));
  return worst;
}

double TransportPlan::total_mass() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.mass;
  return s;
}

double TransportPlan::objective(const CostMatrix& cost) const {
  if (cost.rows() != source_->size() || cost.cols() != target_->size())
    throw DimensionMismatch("cost matrix shape does not match the plan");
  double s = 0.0;
  for (const auto& e : entries_) s += e.mass * cost(e.source, e.target);
  return s;
}

double TransportPlan::objective(const ConcaveCost& cost) const {
  double s = 0.0;
  for (const auto& e : entries_)
    s += e.mass * cost(source_->point(e.source), target_->point(e.target));
  return s;
}

double DualPotentials::objective(const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu) const {
  if (phi.size() != mu.size() || psi.size() != nu.size())
    throw DimensionMismatch("potentials do not match the measures");
  double s = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) s += phi[i] * mu.weight(i);
  for (std::size_t j = 0; j < psi.size(); ++j) s += psi[j] * nu.weight(j);
  return s;
}

ExactSolution solve_exact(MeasurePtr mu, MeasurePtr nu,
                          const ConcaveCost& cost) {
  check_instance(mu, nu);
  check_dense_size(mu->size(), nu->size());
  const CostMatrix c = cost_matrix(*mu, *nu, cost);
  return solve_exact(std::move(mu), std::move(nu), c);
}

ExactSolution solve_exact(MeasurePtr mu, MeasurePtr nu, const CostMatrix& cost) {
  check_instance(mu, nu);
  check_dense_size(mu->size(), nu->size());
  if (cost.rows() != mu->size() || cost.cols() != nu->size())
    throw DimensionMismatch("cost matrix shape does not match the measures");

  detail::TransportSimplex simplex(mu->weights(), nu->weights(), cost);
  const double nodes = static_cast<double>(mu->size() + nu->size());
  SolverStats stats;
  stats.pivot_budget = static_cast<std::uint64_t>(10.0 * nodes * nodes);
  const bool optimal = simplex.run(stats.pivot_budget);
  stats.pivots = simplex.pivots();
  stats.degenerate_pivots = simplex.degenerate_pivots();
  if (!optimal)
    throw SolverError("network simplex exceeded its pivot budget of " +
                      std::to_string(stats.pivot_budget));
  if (simplex.artificial_flow() > kMarginalTolerance)
    throw SolverError("transport problem left flow on artificial arcs");

  std::vector<PlanEntry> entries;
  for (const auto& f : simplex.flows())
    entries.push_back({f.source, f.target, f.mass});

  DualPotentials pots;
  simplex.potentials(pots.phi, pots.psi);
  const double shift = pots.phi.front();
  for (double& v : pots.phi) v -= shift;
  for (double& v : pots.psi) v += shift;

  TransportPlan plan(std::move(mu), std::move(nu), std::move(entries));
  const double objective = plan.objective(cost);
  return {std::move(plan), std::move(pots), objective, stats};
}

Certificate certify(const TransportPlan& plan, const DualPotentials& potentials,
                    const CostMatrix& cost, double tol) {
  const auto& mu = plan.source();
  const auto& nu = plan.target();
  if (potentials.phi.size() != mu.size() || potentials.psi.size() != nu.size() ||
      cost.rows() != mu.size() || cost.cols() != nu.size())
    throw DimensionMismatch("plan, potentials and cost shapes disagree");

  Certificate cert;
  cert.max_dual_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      cert.max_dual_violation =
          std::max(cert.max_dual_violation,
                   potentials.phi[i] + potentials.psi[j] - cost(i, j));
  for (const auto& e : plan.entries()) {
    if (!(e.mass > 0.0)) continue;
    cert.max_slack_residual = std::max(
        cert.max_slack_residual,
        std::abs(potentials.phi[e.source] + potentials.psi[e.target] -
                 cost(e.source, e.target)));
  }
  cert.feasible_dual = cert.max_dual_violation <= tol;
  cert.slack_ok = cert.max_slack_residual <= tol;
  cert.primal = plan.objective(cost);
  cert.dual = potentials.objective(mu, nu);
  cert.gap = cert.primal - cert.dual;
  return cert;
}

Certificate certify(const TransportPlan& plan, const DualPotentials& potentials,
                    const ConcaveCost& cost, double tol) {
  return certify(plan, potentials, cost_matrix(plan.source(), plan.target(), cost),
                 tol);
}

}  // namespace concave_ot
