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

// Weighted point clouds, their lattice operations and example generators.

#ifndef CONCAVE_OT_MEASURE_HPP_
#define CONCAVE_OT_MEASURE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "concave_ot/cost.hpp"
#include "concave_ot/points.hpp"
#include "json.hpp"

namespace concave_ot {

inline constexpr double kMassTolerance = 1e-12;

// Finite atomic measure on R^dim. Exactly-equal points are merged on
// construction (weights summed, first occurrence keeps its index), so atoms
// are pairwise distinct. Immutable once built.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  // Probability measure: weights >= 0 summing to 1 within kMassTolerance.
  static DiscreteMeasure probability(PointSet points,
                                     std::vector<double> weights);
  // Any finite nonnegative mass; used for lattice parts and plan marginals.
  static DiscreteMeasure finite(PointSet points, std::vector<double> weights);
  static DiscreteMeasure zero(std::size_t dim);

  std::size_t dim() const { return points_.dim(); }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }

  const PointSet& points() const { return points_; }
  ConstPoint point(std::size_t i) const { return points_[i]; }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  double total_mass() const { return total_; }

  // Index of the atom located exactly at p.
  std::optional<std::size_t> find(ConstPoint p) const;
  // Mass at exactly p (0 if p is not an atom).
  double mass_at(ConstPoint p) const;

 private:
  static DiscreteMeasure build(PointSet points, std::vector<double> weights);

  PointSet points_;
  std::vector<double> weights_;
  double total_ = 0.0;
  std::vector<std::size_t> sorted_;  // atom indices ordered lexicographically
};

// Compensated sum.
double accurate_sum(std::span<const double> values);

// mu ^ nu together with the residuals (mu - nu)_+ and (nu - mu)_+.
struct MassDecomposition {
  DiscreteMeasure common;
  DiscreteMeasure mu_residual;
  DiscreteMeasure nu_residual;
};

MassDecomposition meet(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// True iff no point carries positive mass in both measures.
bool mutually_singular(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Atomwise comparison: every point's mass agrees within tol.
bool atomwise_equal(const DiscreteMeasure& a, const DiscreteMeasure& b,
                    double tol);

// Moves every atom of `m` that lies within tol of an atom of `reference`
// onto that atom (nearest one). tol = 0 leaves m unchanged.
DiscreteMeasure snap_onto(const DiscreteMeasure& m,
                          const DiscreteMeasure& reference, double tol);

// Midpoint discretization of H^1 on A = {0} x [0,1] (2n atoms) against the
// average of H^1 on B = {1} x [0,1] and C = {-1} x [0,1] (n atoms each).
std::pair<DiscreteMeasure, DiscreteMeasure> three_segments(std::size_t n);

// n i.i.d. uniform atoms of weight 1/n in the box [lo, hi].
DiscreteMeasure uniform_box(std::size_t n, std::size_t dim,
                            std::span<const double> lo,
                            std::span<const double> hi, std::uint64_t seed);

// n uniform atoms on {x_d = 0} within the unit box.
DiscreteMeasure hyperplane_sample(std::size_t n, std::size_t dim,
                                  std::uint64_t seed);

// Midpoint grid of Lebesgue measure on [k0 / n, (k0 + count) / n]: atoms at
// (k + 1/2) / n for k in [k0, k0 + count), each of weight 1 / count. Shared
// indices give bit-identical points across measures.
DiscreteMeasure interval_grid(std::size_t n, std::int64_t k0,
                              std::size_t count);

DiscreteMeasure translate(const DiscreteMeasure& mu, std::span<const double> e);

// Median distance from an atom to its nearest other atom.
double median_nearest_neighbor_distance(const PointSet& points);

// File formats. CSV: one row per atom, dim coordinates then the weight;
// lines starting with '#' are comments. JSON: {"dim":d,"atoms":[{"x":[..],"w":..}]}.
DiscreteMeasure load_measure(const std::filesystem::path& path);
void save_measure(const DiscreteMeasure& mu, const std::filesystem::path& path);
DiscreteMeasure parse_measure_csv(const std::string& text);
std::string format_measure_csv(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const nlohmann::json& j);
nlohmann::json measure_to_json(const DiscreteMeasure& mu);

inline CostMatrix cost_matrix(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu,
                              const ConcaveCost& cost) {
  return cost_matrix(mu.points(), nu.points(), cost);
}

}  // namespace concave_ot

#endif  // CONCAVE_OT_MEASURE_HPP_
