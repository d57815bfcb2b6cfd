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

#include "concave_ot/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "concave_ot/errors.hpp"

namespace concave_ot {
namespace {

enum class Side2 { kSource, kTarget };

DiscreteMeasure marginal(const std::vector<PlanEntry>& entries,
                         const DiscreteMeasure& m, Side2 side) {
  std::vector<double> mass(m.size(), 0.0);
  for (const auto& e : entries)
    mass[side == Side2::kSource ? e.source : e.target] += e.mass;
  PointSet pts(m.dim());
  std::vector<double> w;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (mass[i] > 0.0) {
      pts.push_back(m.point(i));
      w.push_back(mass[i]);
    }
  return DiscreteMeasure::finite(std::move(pts), std::move(w));
}

double max_atomwise_difference(const DiscreteMeasure& a,
                               const DiscreteMeasure& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.weight(i) - b.mass_at(a.point(i))));
  for (std::size_t i = 0; i < b.size(); ++i)
    worst = std::max(worst, std::abs(b.weight(i) - a.mass_at(b.point(i))));
  return worst;
}

// Cost between the source of support entry a and the target of entry b.
class SupportCosts {
 public:
  SupportCosts(const TransportPlan& plan, const ConcaveCost& cost,
               std::vector<std::size_t> support)
      : plan_(plan), cost_(cost), support_(std::move(support)) {
    const std::size_t s = support_.size();
    if (s * s <= kCacheLimit) {
      cache_.resize(s * s);
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = 0; b < s; ++b) cache_[a * s + b] = compute(a, b);
    }
  }

  std::size_t size() const { return support_.size(); }
  std::size_t entry(std::size_t a) const { return support_[a]; }

  double operator()(std::size_t a, std::size_t b) const {
    if (!cache_.empty()) return cache_[a * support_.size() + b];
    return compute(a, b);
  }

  // sum c(x_i, y_i) - sum c(x_i, y_{i+1}) over the cycle.
  double violation(std::span<const std::size_t> cycle) const {
    double v = 0.0;
    for (std::size_t i = 0; i < cycle.size(); ++i)
      v += (*this)(cycle[i], cycle[i]) -
           (*this)(cycle[i], cycle[(i + 1) % cycle.size()]);
    return v;
  }

 private:
  static constexpr std::size_t kCacheLimit = 4'000'000;

  double compute(std::size_t a, std::size_t b) const {
    const auto& ea = plan_.entries()[support_[a]];
    const auto& eb = plan_.entries()[support_[b]];
    return cost_(plan_.source().point(ea.source),
                 plan_.target().point(eb.target));
  }

  const TransportPlan& plan_;
  const ConcaveCost& cost_;
  std::vector<std::size_t> support_;
  std::vector<double> cache_;
};

struct CycleTracker {
  const SupportCosts& costs;
  CcmReport& report;
  std::vector<std::size_t> worst;
  bool any = false;

  void check(std::span<const std::size_t> cycle) {
    const double v = costs.violation(cycle);
    ++report.cycles_checked;
    if (!any || v > report.worst_violation) {
      any = true;
      report.worst_violation = v;
      worst.assign(cycle.begin(), cycle.end());
    }
  }
};

double choose(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    r *= static_cast<double>(n - i) / static_cast<double>(i + 1);
  return r;
}

// Distinct indices, uniformly at random.
void sample_distinct(std::mt19937_64& rng, std::size_t n,
                     std::vector<std::size_t>& out) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t v;
    do {
      v = pick(rng);
    } while (std::find(out.begin(), out.begin() + i, v) != out.begin() + i);
    out[i] = v;
  }
}

}  // namespace

PlanDecomposition decompose(const TransportPlan& plan) {
  PlanDecomposition d;
  const auto& mu = plan.source();
  const auto& nu = plan.target();
  for (const auto& e : plan.entries()) {
    if (same_point(mu.point(e.source), nu.point(e.target)))
      d.diagonal.push_back(e);
    else
      d.off_diagonal.push_back(e);
  }
  d.diagonal_source = marginal(d.diagonal, mu, Side2::kSource);
  d.diagonal_target = marginal(d.diagonal, nu, Side2::kTarget);
  d.off_source = marginal(d.off_diagonal, mu, Side2::kSource);
  d.off_target = marginal(d.off_diagonal, nu, Side2::kTarget);
  d.source = plan.source_ptr();
  d.target = plan.target_ptr();
  return d;
}

StayAtRestReport verify_stay_at_rest(const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu,
                                     const TransportPlan& plan, double tol) {
  if (mu.dim() != plan.source().dim() || nu.dim() != plan.target().dim())
    throw DimensionMismatch("plan and measures differ in dimension");
  const auto d = decompose(plan);
  const auto parts = meet(mu, nu);

  StayAtRestReport r;
  r.diagonal_mass = d.diagonal_mass();
  r.meet_mass = parts.common.total_mass();
  r.max_diagonal_error =
      std::max(max_atomwise_difference(d.diagonal_source, parts.common),
               max_atomwise_difference(d.diagonal_target, parts.common));
  r.diag_matches_meet = r.max_diagonal_error <= tol;

  for (std::size_t i = 0; i < d.off_source.size(); ++i) {
    if (d.off_source.weight(i) <= tol) continue;
    const auto p = d.off_source.point(i);
    if (d.off_target.mass_at(p) > tol)
      r.shared_atoms.push_back(*plan.source().find(p));
  }
  std::sort(r.shared_atoms.begin(), r.shared_atoms.end());
  r.off_marginals_singular = r.shared_atoms.empty();
  return r;
}

CcmReport verify_ccm(const TransportPlan& plan, const ConcaveCost& cost,
                     const CcmOptions& options) {
  if (options.max_cycle_len < 2 || options.max_cycle_len > 4)
    throw DomainError("cycle length must be between 2 and 4");
  std::vector<std::size_t> support;
  for (std::size_t e = 0; e < plan.entries().size(); ++e)
    if (plan.entries()[e].mass > 0.0) support.push_back(e);

  const SupportCosts costs(plan, cost, std::move(support));
  const std::size_t s = costs.size();
  CcmReport report;
  report.support_size = s;
  CycleTracker tracker{costs, report, {}, false};
  std::mt19937_64 rng(options.seed);

  std::vector<std::size_t> cyc;
  for (std::size_t len = 2; len <= options.max_cycle_len; ++len) {
    // Every cyclic order of a k-subset: (k-1)! of them.
    const double orders = len == 2 ? 1.0 : len == 3 ? 2.0 : 6.0;
    const double combos = choose(s, len) * orders;
    const bool exhaustive =
        len == 2 || (len == 3 && s <= options.exhaustive_triple_limit) ||
        combos <= static_cast<double>(options.sample_size);
    report.exhaustive.push_back(exhaustive);
    if (s < len) continue;

    if (!exhaustive) {
      cyc.resize(len);
      for (std::size_t k = 0; k < options.sample_size; ++k) {
        sample_distinct(rng, s, cyc);
        tracker.check(cyc);
      }
      continue;
    }
    if (len == 2) {
      cyc.resize(2);
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = a + 1; b < s; ++b) {
          cyc[0] = a;
          cyc[1] = b;
          tracker.check(cyc);
        }
    } else if (len == 3) {
      cyc.resize(3);
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = a + 1; b < s; ++b)
          for (std::size_t c = b + 1; c < s; ++c) {
            cyc = {a, b, c};
            tracker.check(cyc);
            cyc = {a, c, b};
            tracker.check(cyc);
          }
    } else {
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = a + 1; b < s; ++b)
          for (std::size_t c = b + 1; c < s; ++c)
            for (std::size_t e = c + 1; e < s; ++e) {
              std::vector<std::size_t> rest{b, c, e};
              do {
                cyc = {a, rest[0], rest[1], rest[2]};
                tracker.check(cyc);
              } while (std::next_permutation(rest.begin(), rest.end()));
            }
    }
  }

  if (tracker.any && report.worst_violation > options.tol) {
    CcmWitness w;
    for (std::size_t a : tracker.worst) w.entries.push_back(costs.entry(a));
    w.violation = report.worst_violation;
    report.violating_cycle = std::move(w);
  }
  if (!tracker.any) report.worst_violation = 0.0;
  return report;
}

MapExtract extract_map(const PlanDecomposition& decomposition,
                       double mass_tol) {
  std::map<std::size_t, std::vector<const PlanEntry*>> by_source;
  for (const auto& e : decomposition.off_diagonal)
    if (e.mass > 0.0) by_source[e.source].push_back(&e);

  MapExtract out;
  for (const auto& [source, entries] : by_source) {
    double total = 0.0;
    const PlanEntry* heaviest = entries.front();
    for (const auto* e : entries) {
      total += e->mass;
      if (e->mass > heaviest->mass) heaviest = e;
    }
    out.off_diagonal_mass += total;
    if (total - heaviest->mass <= mass_tol) {
      out.assignments.push_back({source, heaviest->target, total});
      continue;
    }
    SplitSource split{source, {}, {}};
    for (const auto* e : entries) {
      split.targets.push_back(e->target);
      split.masses.push_back(e->mass);
    }
    out.split_fraction += total;
    out.splits.push_back(std::move(split));
  }
  out.split_fraction = std::clamp(out.split_fraction, 0.0, 1.0);
  return out;
}

KinkEvents detect_kink_events(const TransportPlan& plan,
                              const ConcaveCost& cost, double tol) {
  KinkEvents out;
  const auto kinks = cost.kinks();
  if (kinks.empty()) return out;
  for (const auto& e : plan.entries()) {
    if (!(e.mass > 0.0)) continue;
    const double r = distance(plan.source().point(e.source),
                              plan.target().point(e.target));
    if (r == 0.0) continue;
    for (double k : kinks)
      if (std::abs(r - k) <= tol) {
        ++out.count;
        out.mass += e.mass;
        break;
      }
  }
  return out;
}

double translation_mass(const TransportPlan& plan, std::span<const double> e,
                        double tol) {
  if (e.size() != plan.source().dim())
    throw DimensionMismatch("translation vector has the wrong dimension");
  const double len = norm(e);
  if (len == 0.0)
    throw DomainError("zero translation is the diagonal; use decompose");
  const double radius = tol * len;
  std::vector<double> shifted(e.size());
  double mass = 0.0;
  for (const auto& entry : plan.entries()) {
    const auto x = plan.source().point(entry.source);
    for (std::size_t k = 0; k < e.size(); ++k) shifted[k] = x[k] + e[k];
    if (distance(plan.target().point(entry.target), shifted) <= radius)
      mass += entry.mass;
  }
  return mass;
}

ExactSolution solve_exact_with_meet(MeasurePtr mu, MeasurePtr nu,
                                    const ConcaveCost& cost) {
  if (!mu || !nu) throw ValidationError("null measure");
  const auto parts = meet(*mu, *nu);
  if (parts.common.empty()) return solve_exact(std::move(mu), std::move(nu), cost);

  std::vector<PlanEntry> entries;
  for (std::size_t k = 0; k < parts.common.size(); ++k) {
    const auto p = parts.common.point(k);
    entries.push_back({*mu->find(p), *nu->find(p), parts.common.weight(k)});
  }

  SolverStats stats;
  const auto& mres = parts.mu_residual;
  const auto& nres = parts.nu_residual;
  std::vector<double> phi_r;
  const bool residual = mres.total_mass() > kMarginalTolerance ||
                        nres.total_mass() > kMarginalTolerance;
  if (residual) {
    auto sol = solve_exact(share(mres), share(nres), cost);
    stats = sol.stats;
    for (const auto& e : sol.plan.entries())
      entries.push_back({*mu->find(mres.point(e.source)),
                         *nu->find(nres.point(e.target)), e.mass});
    phi_r = std::move(sol.potentials.phi);
  }

  // psi' = (phi_r)^c is c-Lipschitz because c is a metric; f = (psi')^c then
  // gives phi = f, psi = -f, feasible everywhere and tight on the support.
  DualPotentials pots;
  pots.phi.assign(mu->size(), 0.0);
  pots.psi.assign(nu->size(), 0.0);
  if (residual) {
    const auto psi_c = c_transform(phi_r, cost, mres.points(), nres.points());
    const auto f_mu = c_transform(psi_c, cost, nres.points(), mu->points());
    const auto f_nu = c_transform(psi_c, cost, nres.points(), nu->points());
    const double shift = f_mu.front();
    for (std::size_t i = 0; i < mu->size(); ++i) pots.phi[i] = f_mu[i] - shift;
    for (std::size_t j = 0; j < nu->size(); ++j) pots.psi[j] = shift - f_nu[j];
  }

  TransportPlan plan(std::move(mu), std::move(nu), std::move(entries));
  const double objective = plan.objective(cost);
  return {std::move(plan), std::move(pots), objective, stats};
}

}  // namespace concave_ot
