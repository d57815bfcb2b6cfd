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

#include "concave_ot/geometry.hpp"

#include <cmath>
#include <random>

#include "concave_ot/errors.hpp"
#include "gtest/gtest.h"

namespace concave_ot {
namespace {

using Vec = std::vector<double>;

TEST(ConeTest, Membership) {
  const Cone c(Vec{0, 0}, Vec{1, 0}, 0.5);
  EXPECT_TRUE(cone_contains(c, Vec{1, 0.5}));
  EXPECT_TRUE(cone_contains(c, Vec{3, 0}));
  EXPECT_FALSE(cone_contains(c, Vec{0, 1}));
  EXPECT_FALSE(cone_contains(c, Vec{-1, 0}));
  // Opening angle is acos(1 - delta) = 60 degrees.
  EXPECT_TRUE(cone_contains(c, Vec{1, std::sqrt(3.0) - 1e-9}));
  EXPECT_FALSE(cone_contains(c, Vec{1, std::sqrt(3.0) + 1e-9}));

  const Cone short_cone(Vec{0, 0}, Vec{1, 0}, 0.5, 2.0);
  EXPECT_TRUE(cone_contains(short_cone, Vec{1.9, 0}));
  EXPECT_FALSE(cone_contains(short_cone, Vec{2.1, 0}));
}

TEST(ConeTest, RejectsBadParameters) {
  EXPECT_THROW(Cone(Vec{0, 0}, Vec{1, 1}, 0.5), ValidationError);
  EXPECT_THROW(Cone(Vec{0, 0}, Vec{1, 0}, 0.0), ValidationError);
  EXPECT_THROW(Cone(Vec{0, 0}, Vec{1, 0}, 1.0), ValidationError);
  EXPECT_THROW(Cone(Vec{0, 0}, Vec{1, 0}, 0.5, 0.0), ValidationError);
  EXPECT_THROW(Cone(Vec{0, 0}, Vec{1, 0, 0}, 0.5), DimensionMismatch);
}

TEST(ConeTest, GrowsWithDeltaAndRadius) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t d = 2 + rep % 3;
    Vec x(d), u(d), y(d);
    for (auto& v : x) v = g(rng);
    for (auto& v : u) v = g(rng);
    for (auto& v : y) v = g(rng);
    const double len = norm(u);
    for (auto& v : u) v /= len;
    double d1 = unit(rng), d2 = unit(rng);
    if (d1 > d2) std::swap(d1, d2);
    double e1 = 3 * unit(rng), e2 = 3 * unit(rng);
    if (e1 > e2) std::swap(e1, e2);
    if (cone_contains(Cone(x, u, d1, e1), y)) {
      EXPECT_TRUE(cone_contains(Cone(x, u, d2, e1), y));
      EXPECT_TRUE(cone_contains(Cone(x, u, d1, e2), y));
    }
  }
}

TEST(KDeltaTest, KnownValues) {
  EXPECT_NEAR(k_delta(0.5), 0.5 / std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(k_delta(0.5), 0.5773502691896258, 1e-15);
  EXPECT_NEAR(k_delta(1.0 - 1.0 / std::sqrt(2.0)), 1.0, 1e-12);
  EXPECT_NEAR(k_delta(1.0 - 1e-6), 1e-6, 1e-9);
  EXPECT_GT(k_delta(1e-6), 700.0);
}

TEST(KDeltaTest, SatisfiesTheConeIdentity) {
  for (int i = 1; i < 1000; ++i) {
    const double delta = i / 1000.0;
    const double k = k_delta(delta);
    EXPECT_NEAR(k / std::sqrt(1 + k * k), 1 - delta, 1e-12) << delta;
    if (i > 1) {
      EXPECT_LT(k, k_delta((i - 1) / 1000.0));
    }
  }
}

TEST(KDeltaTest, DomainIsOpenUnitInterval) {
  for (double bad : {0.0, 1.0, -0.1, 1.5, std::nan("")})
    EXPECT_THROW(k_delta(bad), DomainError) << bad;
}

TEST(HalfspaceTest, ConeWithDownwardAxisIsAHalfspaceGraph) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> unit(0.02, 0.98);
  std::size_t checked = 0;
  for (int rep = 0; rep < 20000; ++rep) {
    const std::size_t d = 2 + rep % 4;
    Vec x(d), y(d);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    const auto r = halfspace_equivalence(x, unit(rng), y);
    if (std::abs(r.margin) < 1e-12) continue;
    ++checked;
    EXPECT_TRUE(r.agree()) << "margin " << r.margin;
    EXPECT_EQ(r.halfspace, r.margin >= 0);
  }
  EXPECT_GT(checked, 19000u);
}

TEST(HalfspaceTest, BoundaryAndAxisCases) {
  const double delta = 1.0 - 1.0 / std::sqrt(2.0);  // 45 degree cone, k = 1
  const Vec x{0, 0};
  auto below = halfspace_equivalence(x, delta, Vec{0, -1});
  EXPECT_TRUE(below.cone && below.halfspace);
  auto above = halfspace_equivalence(x, delta, Vec{0, 1});
  EXPECT_FALSE(above.cone || above.halfspace);
  auto edge = halfspace_equivalence(x, delta, Vec{1, -1});
  EXPECT_NEAR(edge.margin, 0.0, 1e-12);
  auto inside = halfspace_equivalence(Vec{0, 0, 0}, delta, Vec{0.3, 0.4, -0.6});
  EXPECT_TRUE(inside.agree());
  EXPECT_TRUE(inside.cone);
}

TEST(DirectionGridTest, UnitVectorsAndCoverage) {
  for (std::size_t d : {1, 2, 3, 4, 6}) {
    const auto dirs = direction_grid(d, 32);
    ASSERT_FALSE(dirs.empty());
    for (const auto& u : dirs) {
      ASSERT_EQ(u.size(), d);
      EXPECT_NEAR(norm(u), 1.0, 1e-12);
    }
  }
  const auto circle = direction_grid(2, 8);
  ASSERT_EQ(circle.size(), 8u);
  EXPECT_NEAR(circle[2][0], std::cos(2 * std::acos(-1.0) * 2 / 8), 1e-12);
  EXPECT_EQ(direction_grid(4, 10), direction_grid(4, 10));
}

TEST(HullDistanceTest, SquareCorners) {
  PointSet pts(2, {0, 0, 1, 0, 1, 1, 0, 1, 0.5, 0.5, 0.25, 0.5});
  const auto d = distance_to_hull(pts);
  ASSERT_EQ(d.size(), 6u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(d[i], 0.0, 1e-15);
  EXPECT_NEAR(d[4], 0.5, 1e-15);
  EXPECT_NEAR(d[5], 0.25, 1e-15);
}

TEST(IsotropyTest, UniformBoxIsIsotropicInside) {
  const Vec lo{0, 0}, hi{1, 1};
  const auto mu = uniform_box(5000, 2, lo, hi, 0);
  const auto r = isotropy_audit(mu);
  EXPECT_FALSE(r.degenerate);
  EXPECT_LE(r.interior_failing_fraction, 0.05);
  EXPECT_GT(r.interior_mass_fraction, 0.5);
  const double eps_min = r.epsilons.front();
  for (std::size_t s = 0; s < r.sampled_atoms.size(); ++s)
    if (r.failing_cells[s] > 0) EXPECT_LT(r.hull_distance[s], eps_min);
}

TEST(IsotropyTest, BoxInThreeDimensions) {
  const Vec lo{0, 0, 0}, hi{1, 1, 1};
  const auto mu = uniform_box(4000, 3, lo, hi, 2);
  IsotropyOptions o;
  o.point_sample = 200;
  const auto r = isotropy_audit(mu, o);
  EXPECT_LE(r.interior_failing_fraction, 0.05);
}

TEST(IsotropyTest, HyperplaneFailsAlongTheNormal) {
  const auto mu = hyperplane_sample(2000, 2, 0);
  IsotropyOptions o;
  o.directions = 8;
  const auto r = isotropy_audit(mu, o);
  EXPECT_GE(r.failing_fraction_toward(Vec{0, 1}), 0.95);
  EXPECT_GE(r.failing_fraction_toward(Vec{0, -1}), 0.95);
  EXPECT_LE(r.failing_fraction_toward(Vec{1, 0}), 0.05);
  ASSERT_TRUE(r.worst_witness.has_value());
}

TEST(IsotropyTest, SingleAtomIsDegenerate) {
  const auto mu = DiscreteMeasure::probability(PointSet(2, {0.3, 0.3}), {1.0});
  IsotropyOptions o;
  o.epsilons = {0.1};
  const auto r = isotropy_audit(mu, o);
  EXPECT_TRUE(r.degenerate);
  ASSERT_EQ(r.failing_cells.size(), 1u);
  EXPECT_EQ(r.failing_cells[0], r.directions.size() * r.deltas.size());
  EXPECT_EQ(r.failing_mass_fraction, 1.0);
}

TEST(IsotropyTest, TooSmallRadiusIsWarned) {
  const Vec lo{0, 0}, hi{1, 1};
  const auto mu = uniform_box(500, 2, lo, hi, 1);
  IsotropyOptions o;
  o.epsilons = {1e-6};
  o.point_sample = 50;
  const auto r = isotropy_audit(mu, o);
  EXPECT_TRUE(r.warning.has_value());
}

TEST(IsotropyTest, SeededSamplingIsReproducible) {
  const Vec lo{0, 0}, hi{1, 1};
  const auto mu = uniform_box(3000, 2, lo, hi, 4);
  IsotropyOptions o;
  o.point_sample = 100;
  o.seed = 9;
  const auto a = isotropy_audit(mu, o);
  const auto b = isotropy_audit(mu, o);
  EXPECT_EQ(a.sampled_atoms, b.sampled_atoms);
  EXPECT_EQ(a.failing_cells, b.failing_cells);
}

}  // namespace
}  // namespace concave_ot
