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

#include <cmath>
#include <random>

#include "concave_ot/errors.hpp"
#include "gtest/gtest.h"

namespace concave_ot {
namespace {

// Atoms on a small integer lattice so that the two measures overlap often.
std::pair<MeasurePtr, MeasurePtr> OverlappingInstance(std::mt19937_64& rng,
                                                      std::size_t atoms) {
  std::uniform_int_distribution<int> coord(0, 3);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  auto make = [&] {
    PointSet pts(2);
    std::vector<double> weights;
    for (std::size_t k = 0; k < atoms; ++k) {
      pts.push_back(std::vector<double>{double(coord(rng)), double(coord(rng))});
      weights.push_back(w(rng));
    }
    double total = 0;
    for (double v : weights) total += v;
    for (double& v : weights) v /= total;
    return share(DiscreteMeasure::finite(std::move(pts), std::move(weights)));
  };
  auto mu = make();
  auto nu = make();
  return {mu, nu};
}

MeasurePtr Cloud(std::size_t n, double lo, double hi, std::uint64_t seed) {
  const std::vector<double> a{lo, lo}, b{hi, hi};
  return share(uniform_box(n, 2, a, b, seed));
}

TEST(DecomposeTest, IdenticalMeasuresStayOnTheDiagonal) {
  const auto mu = Cloud(20, 0, 1, 3);
  const auto sol = solve_exact(mu, mu, ConcaveCost::power(0.5));
  const auto d = decompose(sol.plan);
  EXPECT_TRUE(d.off_diagonal.empty());
  EXPECT_NEAR(d.diagonal_mass(), 1.0, 1e-12);
}

TEST(DecomposeTest, DisjointSupportsHaveNoDiagonal) {
  const auto sol = solve_exact(Cloud(15, 0, 1, 1), Cloud(12, 2, 3, 2),
                               ConcaveCost::power(0.5));
  const auto d = decompose(sol.plan);
  EXPECT_TRUE(d.diagonal.empty());
  EXPECT_NEAR(d.off_diagonal_mass(), 1.0, 1e-12);
}

TEST(DecomposeTest, CommonAtomKeepsItsSharedMass) {
  const std::vector<double> a{0, 0}, b{1, 0}, c{0, 1};
  PointSet ps(2), qs(2);
  ps.push_back(a);
  ps.push_back(b);
  qs.push_back(a);
  qs.push_back(c);
  auto mu = share(DiscreteMeasure::probability(ps, {0.5, 0.5}));
  auto nu = share(DiscreteMeasure::probability(qs, {0.3, 0.7}));
  const auto d = decompose(solve_exact(mu, nu, ConcaveCost::power(0.5)).plan);
  EXPECT_NEAR(d.diagonal_source.mass_at(a), 0.3, 1e-15);
  EXPECT_NEAR(d.diagonal_mass(), 0.3, 1e-15);
}

TEST(DecomposeTest, PartitionsEntriesAndMarginals) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    auto [mu, nu] = OverlappingInstance(rng, 10);
    const auto sol = solve_exact(mu, nu, ConcaveCost::power(0.5));
    const auto d = decompose(sol.plan);
    EXPECT_EQ(d.diagonal.size() + d.off_diagonal.size(),
              sol.plan.entries().size());
    EXPECT_NEAR(d.diagonal_mass() + d.off_diagonal_mass(),
                sol.plan.total_mass(), 1e-12);
    EXPECT_TRUE(atomwise_equal(d.diagonal_source, d.diagonal_target, 0.0));
  }
}

TEST(StayAtRestTest, HalfOverlappingIntervalsKeepHalfTheMass) {
  auto mu = share(interval_grid(1000, 0, 1000));
  auto nu = share(interval_grid(1000, 500, 1000));
  const auto sol = solve_exact(mu, nu, ConcaveCost::power(0.5));
  const auto r = verify_stay_at_rest(*mu, *nu, sol.plan, 1e-9);
  EXPECT_TRUE(r.diag_matches_meet);
  EXPECT_TRUE(r.off_marginals_singular);
  EXPECT_NEAR(r.diagonal_mass, 0.5, 1e-9);
  // The moving part is the left half of mu.
  const auto d = decompose(sol.plan);
  for (std::size_t i = 0; i < d.off_source.size(); ++i)
    EXPECT_LT(d.off_source.point(i)[0], 0.5);
}

TEST(StayAtRestTest, HoldsOnRandomOverlappingInstances) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    auto [mu, nu] = OverlappingInstance(rng, 1 + rep % 12);
    const auto sol = solve_exact(mu, nu, ConcaveCost::power(0.5));
    const auto r = verify_stay_at_rest(*mu, *nu, sol.plan, 1e-9);
    EXPECT_TRUE(r.ok()) << "rep " << rep << " err " << r.max_diagonal_error;
  }
}

TEST(StayAtRestTest, QuadraticCostMovesCommonMass) {
  // Two atoms swapped by a half-step: the quadratic optimum moves mass off
  // the shared atom, which the concave optimum never does.
  PointSet ps(1, {0.0, 1.0}), qs(1, {1.0, 2.0});
  auto mu = share(DiscreteMeasure::probability(ps, {0.5, 0.5}));
  auto nu = share(DiscreteMeasure::probability(qs, {0.5, 0.5}));
  const auto quad = solve_exact(mu, nu, cost_matrix(ps, qs, GroundCost(quadratic_cost)));
  EXPECT_FALSE(verify_stay_at_rest(*mu, *nu, quad.plan, 1e-9).ok());
  const auto conc = solve_exact(mu, nu, ConcaveCost::power(0.5));
  EXPECT_TRUE(verify_stay_at_rest(*mu, *nu, conc.plan, 1e-9).ok());
}

TEST(CcmTest, OptimalPlansAreCyclicallyMonotone) {
  std::mt19937_64 rng(4);
  const auto cost = ConcaveCost::log_shift(2.0);
  for (int rep = 0; rep < 10; ++rep) {
    auto [mu, nu] = OverlappingInstance(rng, 12);
    const auto sol = solve_exact(mu, nu, cost);
    CcmOptions o;
    o.max_cycle_len = 4;
    const auto r = verify_ccm(sol.plan, cost, o);
    EXPECT_LE(r.worst_violation, 1e-9);
    EXPECT_FALSE(r.violating_cycle.has_value());
    EXPECT_GT(r.cycles_checked, 0u);
  }
}

TEST(CcmTest, SwappedPairsAreFlagged) {
  PointSet ps(1, {0.0, 1.0}), qs(1, {10.0, 11.0});
  auto mu = share(DiscreteMeasure::probability(ps, {0.5, 0.5}));
  auto nu = share(DiscreteMeasure::probability(qs, {0.5, 0.5}));
  const auto cost = ConcaveCost::power(0.5);
  // For concave costs the nested pairing (0 -> 11, 1 -> 10) is optimal, so
  // the parallel one is the violating plan.
  const TransportPlan parallel(mu, nu, {{0, 0, 0.5}, {1, 1, 0.5}});
  const auto r = verify_ccm(parallel, cost);
  ASSERT_TRUE(r.violating_cycle.has_value());
  EXPECT_GT(r.worst_violation, 1e-3);
  EXPECT_EQ(r.violating_cycle->entries.size(), 2u);
  const double expected = 2 * std::sqrt(10.0) - std::sqrt(11.0) - 3.0;
  EXPECT_NEAR(r.worst_violation, expected, 1e-12);
}

TEST(CcmTest, PointUsedAsSourceAndTargetGivesLengthTwoViolation) {
  const std::vector<double> x{0, 0}, z{1, 0}, y{2, 1};
  PointSet ps(2), qs(2);
  ps.push_back(x);
  ps.push_back(z);
  qs.push_back(z);
  qs.push_back(y);
  auto mu = share(DiscreteMeasure::probability(ps, {0.5, 0.5}));
  auto nu = share(DiscreteMeasure::probability(qs, {0.5, 0.5}));
  const TransportPlan chain(mu, nu, {{0, 0, 0.5}, {1, 1, 0.5}});
  CcmOptions o;
  o.max_cycle_len = 2;
  const auto cost = ConcaveCost::power(0.5);
  const auto r = verify_ccm(chain, cost, o);
  ASSERT_TRUE(r.violating_cycle.has_value());
  EXPECT_NEAR(r.worst_violation,
              cost(x, z) + cost(z, y) - cost(x, y), 1e-12);
  EXPECT_FALSE(verify_stay_at_rest(*mu, *nu, chain, 1e-9).ok());
}

TEST(CcmTest, LargeSupportsAreSampledDeterministically) {
  const auto mu = Cloud(600, 0, 1, 5);
  const auto nu = Cloud(600, 2, 3, 6);
  const auto cost = ConcaveCost::power(0.5);
  const auto sol = solve_exact(mu, nu, cost);
  CcmOptions o;
  o.seed = 17;
  const auto a = verify_ccm(sol.plan, cost, o);
  const auto b = verify_ccm(sol.plan, cost, o);
  ASSERT_EQ(a.exhaustive.size(), 2u);
  EXPECT_TRUE(a.exhaustive[0]);
  EXPECT_FALSE(a.exhaustive[1]);
  EXPECT_EQ(a.worst_violation, b.worst_violation);
  EXPECT_EQ(a.cycles_checked, b.cycles_checked);
  EXPECT_LE(a.worst_violation, 1e-9);
  EXPECT_THROW(verify_ccm(sol.plan, cost, {5}), DomainError);
}

TEST(ExtractMapTest, PermutationCouplingHasNoSplits) {
  const auto mu = Cloud(10, 0, 1, 1);
  const auto nu = Cloud(10, 3, 4, 2);
  std::vector<PlanEntry> entries;
  for (std::size_t i = 0; i < 10; ++i) entries.push_back({i, (i * 3) % 10, 0.1});
  const auto m = extract_map(decompose(TransportPlan(mu, nu, entries)));
  EXPECT_EQ(m.split_fraction, 0.0);
  EXPECT_EQ(m.assignments.size(), 10u);
}

TEST(ExtractMapTest, ThreeSegmentsSolutionsAreMaps) {
  for (std::size_t n : {1, 2, 4, 8}) {
    auto [mu, nu] = three_segments(n);
    const auto sol = solve_exact(share(mu), share(nu), ConcaveCost::power(0.5));
    const auto m = extract_map(decompose(sol.plan));
    EXPECT_EQ(m.split_fraction, 0.0) << n;
    EXPECT_EQ(m.assignments.size(), 2 * n);
  }
}

TEST(ExtractMapTest, HalfAndHalfLimitPlanSplitsEverySource) {
  const std::size_t n = 4;
  auto mu = share(three_segments(n).first);
  PointSet side(2);
  std::vector<double> w;
  for (double x : {1.0, -1.0})
    for (std::size_t k = 0; k < 2 * n; ++k) {
      side.push_back(std::vector<double>{x, mu->point(k)[1]});
      w.push_back(0.5 * mu->weight(k));
    }
  auto nu = share(DiscreteMeasure::finite(side, w));
  std::vector<PlanEntry> entries;
  for (std::size_t k = 0; k < 2 * n; ++k)
    for (double x : {1.0, -1.0})
      entries.push_back(
          {k, *nu->find(std::vector<double>{x, mu->point(k)[1]}), 0.5 * mu->weight(k)});
  const TransportPlan limit(mu, nu, entries);
  const auto m = extract_map(decompose(limit));
  EXPECT_DOUBLE_EQ(m.split_fraction, 1.0);
  EXPECT_EQ(m.splits.size(), 2 * n);
  EXPECT_EQ(limit.objective(ConcaveCost::power(0.5)), 1.0);
}

TEST(ExtractMapTest, MatchedUniformInstancesGiveMaps) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    const auto mu = Cloud(40, 0, 1, rng());
    const auto nu = Cloud(40, 0.5, 2, rng());
    const auto sol = solve_exact(mu, nu, ConcaveCost::power(0.3));
    EXPECT_EQ(extract_map(decompose(sol.plan)).split_fraction, 0.0);
  }
}

TEST(ReconstructTest, AffinePotentialRecoversConstantDisplacement) {
  const auto cost = ConcaveCost::power(0.5);
  const auto mu = Cloud(200, 0, 1, 12);
  const std::vector<double> shift{3.0, 1.0};
  const auto nu = share(translate(*mu, shift));
  std::vector<PlanEntry> entries;
  for (std::size_t i = 0; i < mu->size(); ++i)
    entries.push_back({i, i, mu->weight(i)});
  const TransportPlan plan(mu, nu, entries);

  // phi(x) = -l'(|D|) <D/|D|, x> has gradient pointing from y back to x.
  const double len = norm(shift);
  const double slope = cost.deriv(len, Side::kRight);
  DualPotentials pots;
  for (std::size_t i = 0; i < mu->size(); ++i)
    pots.phi.push_back(-slope * dot(shift, mu->point(i)) / len);
  pots.psi.assign(nu->size(), 0.0);

  const auto rec = reconstruct_map_from_potential(pots, plan, cost);
  EXPECT_EQ(rec.k_neighbors, 8u);
  EXPECT_LE(rec.p90_error, 1e-9);
  EXPECT_DOUBLE_EQ(rec.aligned_mass_fraction, 1.0);
  for (const auto& a : rec.atoms) {
    EXPECT_EQ(a.status, ReconstructionStatus::kOk);
    EXPECT_LE(a.fit_residual, 1e-12);
  }
}

TEST(ReconstructTest, SeparatedCloudsFromLpPotentials) {
  const auto cost = ConcaveCost::power(0.5);
  const auto mu = Cloud(500, 0, 1, 1);
  const auto nu = Cloud(500, 3, 4, 2);
  const auto sol = solve_exact(mu, nu, cost);
  const auto rec = reconstruct_map_from_potential(sol.potentials, sol.plan, cost);
  const double spacing = median_nearest_neighbor_distance(nu->points());
  EXPECT_LE(rec.median_error, 3.0 * spacing);
  EXPECT_GE(rec.aligned_mass_fraction, 0.9);
  EXPECT_EQ(rec.out_of_range, 0u);
  EXPECT_EQ(rec.near_diagonal, 0u);
}

TEST(ReconstructTest, GapUsesKinkRadiusAndFlagsOutOfRange) {
  // Two atoms at distance exactly 1 under a cost with a kink at 1: the exact
  // gradient magnitude is inside the derivative gap.
  const auto cost = ConcaveCost::piecewise({1.0}, {2.0, 0.5}, 0.1);
  PointSet ps(1, {0.0, 0.1, 0.2}), qs(1, {1.0, 1.1, 1.2});
  auto mu = share(DiscreteMeasure::probability(ps, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  auto nu = share(DiscreteMeasure::probability(qs, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  const TransportPlan plan(mu, nu, {{0, 0, 1.0 / 3}, {1, 1, 1.0 / 3}, {2, 2, 1.0 / 3}});
  ReconstructOptions o;
  o.k_neighbors = 3;
  DualPotentials gap{{-0.0, -0.1, -0.2}, {0, 0, 0}};  // |g| = 1
  const auto r = reconstruct_map_from_potential(gap, plan, cost, o);
  EXPECT_EQ(r.gap_events, 3u);
  for (const auto& a : r.atoms) {
    EXPECT_EQ(a.status, ReconstructionStatus::kGap);
    EXPECT_NEAR(a.error, 0.0, 1e-12);
  }
  DualPotentials steep{{0.0, -1.0, -2.0}, {0, 0, 0}};  // |g| = 10
  EXPECT_EQ(reconstruct_map_from_potential(steep, plan, cost, o).out_of_range, 3u);
  DualPotentials flat{{0.0, 0.0, 0.0}, {0, 0, 0}};
  EXPECT_EQ(reconstruct_map_from_potential(flat, plan, cost, o).near_diagonal, 3u);
}

TEST(ReconstructTest, SingleAtomIsAPreconditionError) {
  auto mu = share(DiscreteMeasure::probability(PointSet(2, {0, 0}), {1.0}));
  auto nu = share(DiscreteMeasure::probability(PointSet(2, {1, 0}), {1.0}));
  const auto sol = solve_exact(mu, nu, ConcaveCost::power(0.5));
  EXPECT_THROW(reconstruct_map_from_potential(sol.potentials, sol.plan,
                                              ConcaveCost::power(0.5)),
               PreconditionError);
}

TEST(KinkEventsTest, SmoothCostHasNone) {
  const auto sol = solve_exact(Cloud(50, 0, 1, 1), Cloud(50, 0.5, 1.5, 2),
                               ConcaveCost::power(0.5));
  const auto k = detect_kink_events(sol.plan, ConcaveCost::power(0.5), 1e-3);
  EXPECT_EQ(k.count, 0u);
  EXPECT_EQ(k.mass, 0.0);
}

TEST(KinkEventsTest, PairsAtTheKinkRadiusAreCounted) {
  const auto cost = ConcaveCost::piecewise({1.0}, {2.0, 0.5}, 0.05);
  PointSet ps(2, {0, 0, 5, 5}), qs(2, {1, 0, 5, 7});
  auto mu = share(DiscreteMeasure::probability(ps, {0.25, 0.75}));
  auto nu = share(DiscreteMeasure::probability(qs, {0.25, 0.75}));
  const TransportPlan plan(mu, nu, {{0, 0, 0.25}, {1, 1, 0.75}});
  const auto k = detect_kink_events(plan, cost, 1e-9);
  EXPECT_EQ(k.count, 1u);
  EXPECT_EQ(k.mass, 0.25);
}

TEST(TranslationMassTest, ExactTranslationCouplingCarriesAllMass) {
  const auto mu = Cloud(30, 0, 1, 4);
  const std::vector<double> e{1.0, 0.0};
  const auto nu = share(translate(*mu, e));
  std::vector<PlanEntry> entries;
  for (std::size_t i = 0; i < 30; ++i) entries.push_back({i, i, mu->weight(i)});
  const TransportPlan plan(mu, nu, entries);
  EXPECT_NEAR(translation_mass(plan, e), 1.0, 1e-12);
  EXPECT_THROW(translation_mass(plan, std::vector<double>{0.0, 0.0}), DomainError);
}

TEST(TranslationMassTest, ConcaveOptimaAvoidTranslations) {
  const auto cost = ConcaveCost::power(0.5);
  const std::vector<double> e{1.0, 0.0};
  double previous = 1.0;
  for (std::size_t n : {100, 400, 1600}) {
    const auto mu = Cloud(n, 0, 1, 0);
    const auto nu = share(translate(*mu, e));
    const auto sol = solve_exact(mu, nu, cost);
    const double m = translation_mass(sol.plan, e);
    EXPECT_LT(m, previous) << n;
    EXPECT_LT(sol.objective, cost.eval(1.0));
    previous = m;

    const auto quad = solve_exact(
        mu, nu, cost_matrix(mu->points(), nu->points(), GroundCost(quadratic_cost)));
    EXPECT_NEAR(quad.objective, 1.0, 1e-9);
    EXPECT_NEAR(translation_mass(quad.plan, e), 1.0, 1e-9);
  }
}

TEST(SolveWithMeetTest, MatchesDirectSolveAndCertifies) {
  std::mt19937_64 rng(31);
  const auto cost = ConcaveCost::power(0.5);
  for (int rep = 0; rep < 40; ++rep) {
    auto [mu, nu] = OverlappingInstance(rng, 2 + rep % 10);
    const auto direct = solve_exact(mu, nu, cost);
    const auto split = solve_exact_with_meet(mu, nu, cost);
    EXPECT_NEAR(split.objective, direct.objective, 1e-12);
    EXPECT_LE(split.plan.marginal_error(), 1e-12);
    EXPECT_EQ(split.potentials.phi[0], 0.0);
    const auto cert = certify(split.plan, split.potentials, cost, 1e-9);
    EXPECT_TRUE(cert.feasible_dual) << cert.max_dual_violation;
    EXPECT_TRUE(cert.slack_ok) << cert.max_slack_residual;
    EXPECT_LE(std::abs(cert.gap), 1e-8);
  }
}

TEST(SolveWithMeetTest, IdenticalMeasuresNeedNoSolve) {
  const auto mu = Cloud(25, 0, 1, 2);
  const auto sol = solve_exact_with_meet(mu, mu, ConcaveCost::power(0.5));
  EXPECT_EQ(sol.objective, 0.0);
  EXPECT_EQ(sol.stats.pivots, 0u);
  EXPECT_TRUE(decompose(sol.plan).off_diagonal.empty());
}

TEST(StructurePropertyTest, NoAtomBothSendsAndReceives) {
  std::mt19937_64 rng(77);
  for (const auto& cost : {ConcaveCost::power(0.3), ConcaveCost::log_shift(1.0)}) {
    for (int rep = 0; rep < 25; ++rep) {
      auto [mu, nu] = OverlappingInstance(rng, 3 + rep % 9);
      const auto d = decompose(solve_exact(mu, nu, cost).plan);
      for (std::size_t i = 0; i < d.off_source.size(); ++i)
        EXPECT_LE(std::min(d.off_source.weight(i),
                           d.off_target.mass_at(d.off_source.point(i))),
                  1e-9);
    }
  }
}

}  // namespace
}  // namespace concave_ot
