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

// Discrete Kantorovich problem: exact network simplex, log-domain Sinkhorn,
// and duality certificates.

#ifndef CONCAVE_OT_SOLVER_HPP_
#define CONCAVE_OT_SOLVER_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "concave_ot/cost.hpp"
#include "concave_ot/measure.hpp"

namespace concave_ot {

using MeasurePtr = std::shared_ptr<const DiscreteMeasure>;

inline MeasurePtr share(DiscreteMeasure m) {
  return std::make_shared<const DiscreteMeasure>(std::move(m));
}

struct PlanEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
};

// Sparse coupling between two measures.
class TransportPlan {
 public:
  TransportPlan(MeasurePtr source, MeasurePtr target,
                std::vector<PlanEntry> entries);

  const DiscreteMeasure& source() const { return *source_; }
  const DiscreteMeasure& target() const { return *target_; }
  const MeasurePtr& source_ptr() const { return source_; }
  const MeasurePtr& target_ptr() const { return target_; }
  const std::vector<PlanEntry>& entries() const { return entries_; }

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  // max over atoms of |row/column sum - weight|.
  double marginal_error() const;
  double total_mass() const;

  double objective(const CostMatrix& cost) const;
  double objective(const ConcaveCost& cost) const;

 private:
  MeasurePtr source_;
  MeasurePtr target_;
  std::vector<PlanEntry> entries_;
};

// phi on source atoms, psi on target atoms.
struct DualPotentials {
  std::vector<double> phi;
  std::vector<double> psi;

  double objective(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const;
};

struct SolverStats {
  std::uint64_t pivots = 0;
  std::uint64_t degenerate_pivots = 0;
  std::uint64_t pivot_budget = 0;
};

struct ExactSolution {
  TransportPlan plan;
  DualPotentials potentials;
  double objective = 0.0;
  SolverStats stats;
};

inline constexpr std::size_t kMaxDenseEntries = 50'000'000;
inline constexpr double kMarginalTolerance = 1e-9;

// Network simplex on the bipartite transport problem. Measures must share
// dim and total mass (within kMarginalTolerance); sub-probability residuals
// are accepted. Potentials are normalized so that phi[0] = 0.
ExactSolution solve_exact(MeasurePtr mu, MeasurePtr nu, const ConcaveCost& cost);
ExactSolution solve_exact(MeasurePtr mu, MeasurePtr nu, const CostMatrix& cost);

struct EntropicOptions {
  double epsilon = 1e-2;
  std::size_t max_iter = 10'000;
  // Stop once the marginal violation (total variation) drops below this.
  double tolerance = 1e-7;
  bool epsilon_scaling = true;
};

struct EntropicSolution {
  TransportPlan plan;
  std::size_t iterations = 0;
  // Whether the Sinkhorn iterate met options.tolerance at the target epsilon.
  bool converged = false;
  // Of the returned plan, in total variation.
  double marginal_violation = 0.0;
  double objective = 0.0;
};

// Log-domain Sinkhorn with epsilon scaling from the mean cost down to
// options.epsilon. The last iterate is rounded onto the exact marginals, so
// the plan is feasible even when converged == false.
EntropicSolution solve_entropic(MeasurePtr mu, MeasurePtr nu,
                                const CostMatrix& cost,
                                const EntropicOptions& options);

struct Certificate {
  bool feasible_dual = false;
  bool slack_ok = false;
  double gap = 0.0;                  // primal - dual objective
  double max_dual_violation = 0.0;   // max_{ij} phi_i + psi_j - c_ij
  double max_slack_residual = 0.0;   // max over support of |phi_i + psi_j - c_ij|
  double primal = 0.0;
  double dual = 0.0;
};

Certificate certify(const TransportPlan& plan, const DualPotentials& potentials,
                    const CostMatrix& cost, double tol);
Certificate certify(const TransportPlan& plan, const DualPotentials& potentials,
                    const ConcaveCost& cost, double tol);

}  // namespace concave_ot

#endif  // CONCAVE_OT_SOLVER_HPP_
