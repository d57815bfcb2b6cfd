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

// Cones C(x, u, delta, eps) and the isotropy audit of a discrete measure.

#ifndef CONCAVE_OT_GEOMETRY_HPP_
#define CONCAVE_OT_GEOMETRY_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "concave_ot/measure.hpp"
#include "concave_ot/points.hpp"

namespace concave_ot {

// {y : <y - x, u> >= (1 - delta)|y - x|, |y - x| <= radius}.
class Cone {
 public:
  // Throws ValidationError unless |u| = 1 within 1e-12, 0 < delta < 1 and
  // radius > 0 (infinity allowed).
  Cone(std::vector<double> apex, std::vector<double> direction, double delta,
       double radius = std::numeric_limits<double>::infinity());

  const std::vector<double>& apex() const { return apex_; }
  const std::vector<double>& direction() const { return direction_; }
  double delta() const { return delta_; }
  double radius() const { return radius_; }

 private:
  std::vector<double> apex_;
  std::vector<double> direction_;
  double delta_;
  double radius_;
};

bool cone_contains(const Cone& cone, ConstPoint y);

// (1 - delta) / sqrt(delta (2 - delta)); DomainError outside (0, 1).
double k_delta(double delta);

struct HalfspaceAgreement {
  bool cone = false;       // y in C(x, -e_d, delta)
  bool halfspace = false;  // y_d <= x_d - k(delta)|y' - x'|
  double margin = 0.0;     // x_d - y_d - k(delta)|y' - x'|

  bool agree() const { return cone == halfspace; }
};

HalfspaceAgreement halfspace_equivalence(ConstPoint x, double delta,
                                         ConstPoint y);

// Deterministic unit directions: {+1, -1} for d = 1, equally spaced angles on
// S^1 for d = 2, a Fibonacci lattice on S^2 for d = 3 and golden-ratio
// sequences pushed through Box-Muller for d >= 4.
std::vector<std::vector<double>> direction_grid(std::size_t dim,
                                                std::size_t count);

// Distance from each atom to the boundary of the convex hull of all atoms
// (exact for d <= 2, bounding box for d >= 3).
std::vector<double> distance_to_hull(const PointSet& points);

struct IsotropyOptions {
  std::size_t directions = 16;
  std::vector<double> deltas{0.2, 0.5, 0.8};
  // Radii as multiples of the resolution (median nearest-neighbor distance),
  // unless absolute `epsilons` are given.
  std::vector<double> epsilon_multipliers{10.0, 30.0, 100.0};
  std::vector<double> epsilons;
  std::size_t point_sample = 500;
  std::uint64_t seed = 0;
};

struct IsotropyWitness {
  std::size_t atom = 0;
  std::vector<double> direction;
  double delta = 0.0;
  double epsilon = 0.0;
};

struct IsotropyReport {
  double resolution = 0.0;
  std::vector<double> epsilons;
  std::vector<double> deltas;
  std::vector<std::vector<double>> directions;
  bool degenerate = false;
  std::optional<std::string> warning;

  std::vector<std::size_t> sampled_atoms;
  std::vector<double> sampled_mass;          // weight of each sampled atom
  std::vector<std::size_t> failing_cells;    // per sampled atom
  std::vector<double> hull_distance;         // per sampled atom

  double failing_mass_fraction = 0.0;
  double interior_failing_fraction = 0.0;    // hull distance >= min epsilon
  double interior_mass_fraction = 0.0;
  std::vector<double> direction_failing_fraction;
  std::optional<IsotropyWitness> worst_witness;

  // Failing fraction for the grid direction closest to u.
  double failing_fraction_toward(ConstPoint u) const;
};

// For sampled atoms x and every cell (u, delta, eps) of the grid, tests
// whether some atom other than x lies in C(x, u, delta, eps).
IsotropyReport isotropy_audit(const DiscreteMeasure& mu,
                              const IsotropyOptions& options = {});

}  // namespace concave_ot

#endif  // CONCAVE_OT_GEOMETRY_HPP_
