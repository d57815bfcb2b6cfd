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

#include "concave_ot/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "concave_ot/errors.hpp"

namespace concave_ot {
namespace {

bool lex_less(ConstPoint a, ConstPoint b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void require_same_dim(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("measures live in different dimensions (" +
                            std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()) + ")");
}

// Union of the two supports in lexicographic order, with the masses each
// measure places there.
struct JointAtom {
  ConstPoint point;
  double mu = 0.0;
  double nu = 0.0;
};

std::vector<JointAtom> joint_atoms(const DiscreteMeasure& mu,
                                   const DiscreteMeasure& nu) {
  std::vector<JointAtom> out;
  out.reserve(mu.size() + nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    out.push_back({mu.point(i), mu.weight(i), nu.mass_at(mu.point(i))});
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (!mu.find(nu.point(j))) out.push_back({nu.point(j), 0.0, nu.weight(j)});
  return out;
}

}  // namespace

double accurate_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

DiscreteMeasure DiscreteMeasure::build(PointSet points,
                                       std::vector<double> weights) {
  if (points.dim() == 0) throw ValidationError("measure dimension must be positive");
  if (points.size() != weights.size())
    throw ValidationError("point and weight counts differ");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ValidationError("weights must be finite and nonnegative");
  for (double c : points.coords())
    if (!std::isfinite(c)) throw ValidationError("coordinates must be finite");

  // Canonicalize -0.0 so that equal points compare and print identically.
  std::vector<double> coords = points.coords();
  for (double& c : coords) c += 0.0;
  const PointSet canon(points.dim(), std::move(coords));

  std::vector<std::size_t> order(canon.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(canon[a], canon[b]);
  });

  // Group equal points; the group's representative is its first occurrence.
  std::vector<std::size_t> rep(canon.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && same_point(canon[order[k]], canon[order[k - 1]]))
      rep[order[k]] = rep[order[k - 1]];
    else
      rep[order[k]] = order[k];
  }

  DiscreteMeasure m;
  m.points_ = PointSet(canon.dim());
  std::vector<std::size_t> new_index(canon.size(), 0);
  for (std::size_t i = 0; i < canon.size(); ++i) {
    if (rep[i] == i) {
      new_index[i] = m.weights_.size();
      m.points_.push_back(canon[i]);
      m.weights_.push_back(weights[i]);
    } else {
      m.weights_[new_index[rep[i]]] += weights[i];
    }
  }
  m.total_ = accurate_sum(m.weights_);
  m.sorted_.resize(m.weights_.size());
  std::iota(m.sorted_.begin(), m.sorted_.end(), 0);
  std::sort(m.sorted_.begin(), m.sorted_.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(m.points_[a], m.points_[b]);
  });
  return m;
}

DiscreteMeasure DiscreteMeasure::probability(PointSet points,
                                             std::vector<double> weights) {
  DiscreteMeasure m = build(std::move(points), std::move(weights));
  const double deficit = 1.0 - m.total_;
  if (std::abs(deficit) > kMassTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << m.total_ << ", not 1 (deficit " << deficit
       << ")";
    throw ValidationError(os.str());
  }
  return m;
}

DiscreteMeasure DiscreteMeasure::finite(PointSet points,
                                        std::vector<double> weights) {
  return build(std::move(points), std::move(weights));
}

DiscreteMeasure DiscreteMeasure::zero(std::size_t dim) {
  return build(PointSet(dim), {});
}

std::optional<std::size_t> DiscreteMeasure::find(ConstPoint p) const {
  if (p.size() != dim()) throw DimensionMismatch("lookup point dimension mismatch");
  const auto it = std::lower_bound(
      sorted_.begin(), sorted_.end(), p,
      [&](std::size_t idx, ConstPoint q) { return lex_less(points_[idx], q); });
  if (it != sorted_.end() && same_point(points_[*it], p)) return *it;
  return std::nullopt;
}

double DiscreteMeasure::mass_at(ConstPoint p) const {
  const auto idx = find(p);
  return idx ? weights_[*idx] : 0.0;
}

MassDecomposition meet(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require_same_dim(mu, nu);
  PointSet common_pts(mu.dim()), mu_pts(mu.dim()), nu_pts(mu.dim());
  std::vector<double> common_w, mu_w, nu_w;
  for (const auto& atom : joint_atoms(mu, nu)) {
    const double c = std::min(atom.mu, atom.nu);
    if (c > 0.0) {
      common_pts.push_back(atom.point);
      common_w.push_back(c);
    }
    if (atom.mu - c > 0.0) {
      mu_pts.push_back(atom.point);
      mu_w.push_back(atom.mu - c);
    }
    if (atom.nu - c > 0.0) {
      nu_pts.push_back(atom.point);
      nu_w.push_back(atom.nu - c);
    }
  }
  return {DiscreteMeasure::finite(std::move(common_pts), std::move(common_w)),
          DiscreteMeasure::finite(std::move(mu_pts), std::move(mu_w)),
          DiscreteMeasure::finite(std::move(nu_pts), std::move(nu_w))};
}

bool mutually_singular(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require_same_dim(mu, nu);
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.weight(i) > 0.0 && nu.mass_at(mu.point(i)) > 0.0) return false;
  return true;
}

bool atomwise_equal(const DiscreteMeasure& a, const DiscreteMeasure& b,
                    double tol) {
  require_same_dim(a, b);
  for (const auto& atom : joint_atoms(a, b))
    if (std::abs(atom.mu - atom.nu) > tol) return false;
  return true;
}

DiscreteMeasure snap_onto(const DiscreteMeasure& m,
                          const DiscreteMeasure& reference, double tol) {
  require_same_dim(m, reference);
  if (!(tol > 0.0)) return m;
  PointSet pts(m.dim());
  std::vector<double> w(m.weights().begin(), m.weights().end());
  const double tol2 = tol * tol;
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::optional<std::size_t> best;
    double best_d2 = tol2;
    for (std::size_t r = 0; r < reference.size(); ++r) {
      const double d2 = squared_distance(m.point(i), reference.point(r));
      if (d2 <= best_d2) {
        best_d2 = d2;
        best = r;
      }
    }
    pts.push_back(best ? reference.point(*best) : m.point(i));
  }
  return DiscreteMeasure::finite(std::move(pts), std::move(w));
}

std::pair<DiscreteMeasure, DiscreteMeasure> three_segments(std::size_t n) {
  if (n == 0) throw ValidationError("three_segments needs n >= 1");
  const double w = 1.0 / static_cast<double>(2 * n);
  PointSet a(2);
  for (std::size_t k = 0; k < 2 * n; ++k) {
    const double y = (static_cast<double>(k) + 0.5) / static_cast<double>(2 * n);
    a.push_back(std::vector<double>{0.0, y});
  }
  PointSet bc(2);
  for (std::size_t k = 0; k < n; ++k) {
    const double y = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    bc.push_back(std::vector<double>{1.0, y});
    bc.push_back(std::vector<double>{-1.0, y});
  }
  return {DiscreteMeasure::probability(std::move(a), std::vector<double>(2 * n, w)),
          DiscreteMeasure::probability(std::move(bc),
                                       std::vector<double>(2 * n, w))};
}

DiscreteMeasure uniform_box(std::size_t n, std::size_t dim,
                            std::span<const double> lo,
                            std::span<const double> hi, std::uint64_t seed) {
  if (n == 0) throw ValidationError("uniform_box needs n >= 1");
  if (dim == 0 || lo.size() != dim || hi.size() != dim)
    throw DimensionMismatch("box corners must have the requested dimension");
  for (std::size_t k = 0; k < dim; ++k)
    if (!(lo[k] < hi[k])) throw ValidationError("degenerate box: lo >= hi");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> coords(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dim; ++k)
      coords[i * dim + k] = lo[k] + (hi[k] - lo[k]) * unit(rng);
  return DiscreteMeasure::probability(
      PointSet(dim, std::move(coords)),
      std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure hyperplane_sample(std::size_t n, std::size_t dim,
                                  std::uint64_t seed) {
  if (dim < 2) throw ValidationError("hyperplane_sample needs dim >= 2");
  if (n == 0) throw ValidationError("hyperplane_sample needs n >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> coords(n * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k + 1 < dim; ++k) coords[i * dim + k] = unit(rng);
  return DiscreteMeasure::probability(
      PointSet(dim, std::move(coords)),
      std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure interval_grid(std::size_t n, std::int64_t k0,
                              std::size_t count) {
  if (n == 0 || count == 0) throw ValidationError("interval_grid needs n, count >= 1");
  PointSet pts(1);
  for (std::size_t k = 0; k < count; ++k) {
    const double x = (static_cast<double>(k0 + static_cast<std::int64_t>(k)) + 0.5) /
                     static_cast<double>(n);
    pts.push_back(std::span<const double>(&x, 1));
  }
  return DiscreteMeasure::probability(
      std::move(pts), std::vector<double>(count, 1.0 / static_cast<double>(count)));
}

DiscreteMeasure translate(const DiscreteMeasure& mu, std::span<const double> e) {
  if (e.size() != mu.dim())
    throw DimensionMismatch("translation vector dimension mismatch");
  std::vector<double> coords = mu.points().coords();
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t k = 0; k < mu.dim(); ++k) coords[i * mu.dim() + k] += e[k];
  std::vector<double> w(mu.weights().begin(), mu.weights().end());
  return DiscreteMeasure::finite(PointSet(mu.dim(), std::move(coords)),
                                 std::move(w));
}

double median_nearest_neighbor_distance(const PointSet& points) {
  if (points.size() < 2) return 0.0;
  std::vector<double> nn(points.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d2 = squared_distance(points[i], points[j]);
      nn[i] = std::min(nn[i], d2);
      nn[j] = std::min(nn[j], d2);
    }
  const auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  return std::sqrt(*mid);
}

}  // namespace concave_ot
