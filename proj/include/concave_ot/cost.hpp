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

// Radial concave costs c(x, y) = l(|x - y|) and their calculus.

#ifndef CONCAVE_OT_COST_HPP_
#define CONCAVE_OT_COST_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "concave_ot/points.hpp"
#include "json.hpp"

namespace concave_ot {

enum class Side { kLeft, kRight };

// l(t) = t^alpha, 0 < alpha < 1.
struct PowerCost {
  double alpha = 0.5;
};

// l(t) = log(1 + a t), a > 0.
struct LogShiftCost {
  double a = 1.0;
};

// Piecewise-linear concave profile with kinks at `breakpoints` and slope
// slopes[i] on the i-th piece (slopes.size() == breakpoints.size() + 1),
// plus an optional smooth strictly concave term curvature * log(1 + t).
// With curvature == 0 the profile is linear between kinks, so it is only
// strictly concave across kinks; curvature > 0 makes it strictly concave
// everywhere while keeping the same kink set.
struct PiecewiseCost {
  std::vector<double> breakpoints;
  std::vector<double> slopes;
  double curvature = 0.0;
};

// Interval of subgradients at a kink t0 of l: (right_slope, left_slope).
struct DerivativeGap {
  double point = 0.0;
  double left_slope = 0.0;
  double right_slope = 0.0;
};

struct OutOfRange {
  enum class Reason {
    kAboveSupremum,  // p >= lim_{t->0+} l'(t)
    kBelowInfimum,   // p <= lim_{t->inf} l'(t)
    kFlatPiece,      // p is the slope of a linear piece: the radius is an interval
  };
  Reason reason = Reason::kAboveSupremum;
};

using InverseDerivative = std::variant<double, DerivativeGap, OutOfRange>;

class ConcaveCost {
 public:
  using Kind = std::variant<PowerCost, LogShiftCost, PiecewiseCost>;

  // Validating constructors.
  static ConcaveCost power(double alpha);
  static ConcaveCost log_shift(double a);
  static ConcaveCost piecewise(std::vector<double> breakpoints,
                               std::vector<double> slopes,
                               double curvature = 0.0);

  const Kind& kind() const { return kind_; }

  // l(t). Throws DomainError for t < 0.
  double eval(double t) const;
  // c(x, y) = l(|x - y|).
  double operator()(ConstPoint x, ConstPoint y) const {
    return eval(distance(x, y));
  }

  // One-sided derivative at t > 0.
  double deriv(double t, Side side) const;

  // Radius t with l'_r(t) <= p <= l'_l(t). A p strictly inside the
  // subgradient interval of a kink yields that kink as a DerivativeGap.
  InverseDerivative inv_deriv(double p) const;

  // Non-differentiability points of l (empty for smooth costs).
  std::vector<double> kinks() const;

  // lim_{t->0+} l'(t); +inf for power costs.
  double slope_at_zero() const;

  std::string describe() const;

 private:
  explicit ConcaveCost(Kind kind) : kind_(std::move(kind)) {}
  double piecewise_value(const PiecewiseCost& pw, double t) const;

  Kind kind_;
  std::vector<double> pw_values_;  // l_pw at each breakpoint
};

void to_json(nlohmann::json& j, const ConcaveCost& cost);
ConcaveCost cost_from_json(const nlohmann::json& j);

struct SubadditivityReport {
  double min_margin = 0.0;
  std::size_t violations = 0;  // pairs with margin <= threshold
  std::size_t samples = 0;
};

// margin(s, t) = l(s) + l(t) - l(s + t) over the given pairs.
SubadditivityReport check_strict_subadditivity(
    const ConcaveCost& cost, std::span<const std::pair<double, double>> samples,
    double threshold = 0.0);

// l(|x - y|) + l(|y - z|) - l(|x - z|). Requires x != y and y != z.
double strict_triangle(const ConcaveCost& cost, ConstPoint x, ConstPoint y,
                       ConstPoint z);

struct SemiconcavityProbe {
  std::vector<double> x;
  std::vector<double> v;  // unit direction
  double h = 1e-2;
};

struct SemiconcavityReport {
  double modulus = 0.0;  // lambda in g(x) = l(|x|) - lambda/2 |x|^2
  double worst_second_difference = 0.0;
  std::size_t worst_probe = 0;
};

// Concavity modulus of x -> l(|x|) on {|x| >= d0}: the largest second
// derivative of l(|x|) there is l'_r(d0) / d0 (tangential), so
// lambda = l'_r(d0) * max(1, 1 / d0).
double semiconcavity_modulus(const ConcaveCost& cost, double d0);

// Second central differences of g(x) = l(|x|) - lambda/2 |x|^2 along each
// probe; worst_second_difference must be <= 0 up to rounding. Throws
// DomainError if an evaluated point has norm < d0.
SemiconcavityReport semiconcavity_margin(
    const ConcaveCost& cost, double d0,
    std::span<const SemiconcavityProbe> probes);

// psi(y) = min_x c(x, y) - values(x) over the finite support `from`.
std::vector<double> c_transform(std::span<const double> values,
                                const ConcaveCost& cost, const PointSet& from,
                                const PointSet& to);

// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  std::span<const double> data() const { return data_; }
  double max() const;
  double mean() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using GroundCost = std::function<double(ConstPoint, ConstPoint)>;

CostMatrix cost_matrix(const PointSet& from, const PointSet& to,
                       const ConcaveCost& cost);
CostMatrix cost_matrix(const PointSet& from, const PointSet& to,
                       const GroundCost& cost);

// |x - y|^2; the convex reference cost used as a control.
inline double quadratic_cost(ConstPoint x, ConstPoint y) {
  return squared_distance(x, y);
}

}  // namespace concave_ot

#endif  // CONCAVE_OT_COST_HPP_
