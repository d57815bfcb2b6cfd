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

#include <algorithm>
#include <cmath>
#include <limits>

#include "concave_ot/errors.hpp"
#include "concave_ot/solver.hpp"

namespace concave_ot {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dual iterates on the positive-weight atoms only.
struct LogSinkhorn {
  const CostMatrix& cost;
  std::vector<std::size_t> rows, cols;  // original indices
  std::vector<double> log_a, log_b;
  std::vector<double> f, g;
  std::vector<double> scratch;

  double lse_row(std::size_t r, double eps) {
    const std::size_t i = rows[r];
    double hi = kNegInf;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      scratch[c] = (g[c] - cost(i, cols[c])) / eps;
      hi = std::max(hi, scratch[c]);
    }
    double s = 0.0;
    for (std::size_t c = 0; c < cols.size(); ++c) s += std::exp(scratch[c] - hi);
    return hi + std::log(s);
  }

  double lse_col(std::size_t c, double eps) {
    const std::size_t j = cols[c];
    double hi = kNegInf;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      scratch[r] = (f[r] - cost(rows[r], j)) / eps;
      hi = std::max(hi, scratch[r]);
    }
    double s = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) s += std::exp(scratch[r] - hi);
    return hi + std::log(s);
  }

  void sweep(double eps) {
    for (std::size_t r = 0; r < rows.size(); ++r)
      f[r] = eps * (log_a[r] - lse_row(r, eps));
    for (std::size_t c = 0; c < cols.size(); ++c)
      g[c] = eps * (log_b[c] - lse_col(c, eps));
  }

  // Row-marginal violation in total variation; columns are exact right after
  // the g-update.
  double row_violation(double eps) {
    double tv = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r)
      tv += std::abs(std::exp(f[r] / eps + lse_row(r, eps)) - std::exp(log_a[r]));
    return tv;
  }
};

}  // namespace

EntropicSolution solve_entropic(MeasurePtr mu, MeasurePtr nu,
                                const CostMatrix& cost,
                                const EntropicOptions& options) {
  if (!mu || !nu) throw ValidationError("null measure");
  if (mu->dim() != nu->dim())
    throw DimensionMismatch("source and target measures differ in dimension");
  if (mu->empty() || nu->empty())
    throw ValidationError("transport between empty measures");
  if (!(options.epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (options.max_iter == 0) throw DomainError("max_iter must be positive");
  if (cost.rows() != mu->size() || cost.cols() != nu->size())
    throw DimensionMismatch("cost matrix shape does not match the measures");

  LogSinkhorn s{cost, {}, {}, {}, {}, {}, {}, {}};
  for (std::size_t i = 0; i < mu->size(); ++i)
    if (mu->weight(i) > 0.0) {
      s.rows.push_back(i);
      s.log_a.push_back(std::log(mu->weight(i)));
    }
  for (std::size_t j = 0; j < nu->size(); ++j)
    if (nu->weight(j) > 0.0) {
      s.cols.push_back(j);
      s.log_b.push_back(std::log(nu->weight(j)));
    }
  s.f.assign(s.rows.size(), 0.0);
  s.g.assign(s.cols.size(), 0.0);
  s.scratch.resize(std::max(s.rows.size(), s.cols.size()));

  std::vector<double> schedule;
  double eps = options.epsilon;
  if (options.epsilon_scaling) {
    for (double e = std::max(cost.mean(), options.epsilon); e > options.epsilon;
         e *= 0.5)
      schedule.push_back(e);
  }
  schedule.push_back(eps);

  constexpr std::size_t kCheckEvery = 10;
  std::size_t iterations = 0;
  double violation = std::numeric_limits<double>::infinity();
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const bool last = stage + 1 == schedule.size();
    const double stage_eps = schedule[stage];
    eps = stage_eps;
    // Intermediate stages only need a warm start.
    const double stage_tol = last ? options.tolerance : 1e-3;
    std::size_t local = 0;
    while (iterations < options.max_iter) {
      s.sweep(stage_eps);
      ++iterations;
      ++local;
      if (local % kCheckEvery == 1 ||
          iterations == options.max_iter) {
        violation = s.row_violation(stage_eps);
        if (violation <= stage_tol) break;
      }
    }
    if (iterations >= options.max_iter) break;
  }
  const bool converged = eps == options.epsilon && violation <= options.tolerance;

  // Kernel plan on the active atoms, then projected onto the exact marginals:
  // rows and columns are scaled down where they overshoot and the remaining
  // deficit is filled by a rank-one correction.
  const std::size_t m = s.rows.size(), n = s.cols.size();
  std::vector<double> plan(m * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c)
      plan[r * n + c] =
          std::exp((s.f[r] + s.g[c] - cost(s.rows[r], s.cols[c])) / eps);
  std::vector<double> a(m), b(n);
  for (std::size_t r = 0; r < m; ++r) a[r] = mu->weight(s.rows[r]);
  for (std::size_t c = 0; c < n; ++c) b[c] = nu->weight(s.cols[c]);
  for (std::size_t r = 0; r < m; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) sum += plan[r * n + c];
    if (sum > a[r])
      for (std::size_t c = 0; c < n; ++c) plan[r * n + c] *= a[r] / sum;
  }
  std::vector<double> col(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) col[c] += plan[r * n + c];
  for (std::size_t c = 0; c < n; ++c)
    if (col[c] > b[c])
      for (std::size_t r = 0; r < m; ++r) plan[r * n + c] *= b[c] / col[c];
  std::vector<double> da(m), db(n);
  double deficit = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) sum += plan[r * n + c];
    da[r] = std::max(0.0, a[r] - sum);
    deficit += da[r];
  }
  std::fill(col.begin(), col.end(), 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) col[c] += plan[r * n + c];
  for (std::size_t c = 0; c < n; ++c) db[c] = std::max(0.0, b[c] - col[c]);
  if (deficit > 0.0)
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c)
        plan[r * n + c] += da[r] * db[c] / deficit;

  std::vector<PlanEntry> entries;
  double objective = 0.0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double mass = plan[r * n + c];
      if (mass > 0.0) {
        entries.push_back({s.rows[r], s.cols[c], mass});
        objective += mass * cost(s.rows[r], s.cols[c]);
      }
    }

  TransportPlan result(std::move(mu), std::move(nu), std::move(entries));
  double final_violation = 0.0;
  const auto rs = result.row_sums();
  const auto cs = result.col_sums();
  for (std::size_t i = 0; i < rs.size(); ++i)
    final_violation += std::abs(rs[i] - result.source().weight(i));
  for (std::size_t j = 0; j < cs.size(); ++j)
    final_violation += std::abs(cs[j] - result.target().weight(j));
  return EntropicSolution{std::move(result), iterations, converged,
                          final_violation, objective};
}

}  // namespace concave_ot
