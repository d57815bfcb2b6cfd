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

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "concave_ot/errors.hpp"

namespace concave_ot {
namespace {

double cross(const std::array<double, 2>& o, const std::array<double, 2>& a,
             const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double segment_distance(const std::array<double, 2>& p,
                        const std::array<double, 2>& a,
                        const std::array<double, 2>& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy));
}

std::vector<double> hull_distance_2d(const PointSet& points) {
  const std::size_t n = points.size();
  std::vector<std::array<double, 2>> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = {points[i][0], points[i][1]};
  std::vector<std::array<double, 2>> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::array<double, 2>> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], sorted[i]) <= 0.0) --k;
    hull[k++] = sorted[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], sorted[i]) <= 0.0) --k;
    hull[k++] = sorted[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);

  std::vector<double> out(n, 0.0);
  if (hull.size() < 3) return out;  // collinear: the hull has no interior
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < hull.size(); ++e)
      best = std::min(best,
                      segment_distance(p[i], hull[e], hull[(e + 1) % hull.size()]));
    out[i] = best;
  }
  return out;
}

std::vector<double> box_distance(const PointSet& points) {
  const std::size_t d = points.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t c = 0; c < d; ++c) {
      lo[c] = std::min(lo[c], points[i][c]);
      hi[c] = std::max(hi[c], points[i][c]);
    }
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < d; ++c)
      best = std::min({best, points[i][c] - lo[c], hi[c] - points[i][c]});
    out[i] = best;
  }
  return out;
}

}  // namespace

Cone::Cone(std::vector<double> apex, std::vector<double> direction,
           double delta, double radius)
    : apex_(std::move(apex)),
      direction_(std::move(direction)),
      delta_(delta),
      radius_(radius) {
  if (apex_.size() != direction_.size())
    throw DimensionMismatch("cone apex and direction differ in dimension");
  if (std::abs(norm(direction_) - 1.0) > 1e-12)
    throw ValidationError("cone direction must be a unit vector");
  if (!(delta_ > 0.0 && delta_ < 1.0))
    throw ValidationError("cone opening must lie in (0, 1)");
  if (!(radius_ > 0.0)) throw ValidationError("cone radius must be positive");
}

bool cone_contains(const Cone& cone, ConstPoint y) {
  if (y.size() != cone.apex().size())
    throw DimensionMismatch("point and cone differ in dimension");
  double along = 0.0, len2 = 0.0;
  for (std::size_t c = 0; c < y.size(); ++c) {
    const double v = y[c] - cone.apex()[c];
    along += v * cone.direction()[c];
    len2 += v * v;
  }
  const double len = std::sqrt(len2);
  return along >= (1.0 - cone.delta()) * len && len <= cone.radius();
}

double k_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw DomainError("k(delta) needs 0 < delta < 1");
  return (1.0 - delta) / std::sqrt(delta * (2.0 - delta));
}

HalfspaceAgreement halfspace_equivalence(ConstPoint x, double delta,
                                         ConstPoint y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DimensionMismatch("half-space test needs two points of dim >= 2");
  const std::size_t d = x.size();
  std::vector<double> down(d, 0.0);
  down[d - 1] = -1.0;
  const Cone cone(std::vector<double>(x.begin(), x.end()), down, delta);

  double lateral2 = 0.0;
  for (std::size_t c = 0; c + 1 < d; ++c)
    lateral2 += (y[c] - x[c]) * (y[c] - x[c]);
  HalfspaceAgreement out;
  out.cone = cone_contains(cone, y);
  out.margin = x[d - 1] - y[d - 1] - k_delta(delta) * std::sqrt(lateral2);
  out.halfspace = out.margin >= 0.0;
  return out;
}

std::vector<std::vector<double>> direction_grid(std::size_t dim,
                                                std::size_t count) {
  if (dim == 0 || count == 0) throw DomainError("empty direction grid");
  std::vector<std::vector<double>> out;
  if (dim == 1) {
    out = {{1.0}, {-1.0}};
    out.resize(std::min<std::size_t>(count, 2));
    return out;
  }
  constexpr double kPi = std::numbers::pi;
  if (dim == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(count);
      out.push_back({std::cos(a), std::sin(a)});
    }
    return out;
  }
  if (dim == 3) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) /
                                 static_cast<double>(count);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * static_cast<double>(k);
      out.push_back({r * std::cos(a), r * std::sin(a), z});
    }
    return out;
  }
  const std::size_t m = dim + dim % 2;
  double g = 2.0;  // root of x^(m+1) = x + 1
  for (int it = 0; it < 64; ++it) g = std::pow(1.0 + g, 1.0 / static_cast<double>(m + 1));
  std::vector<double> alpha(m);
  for (std::size_t j = 0; j < m; ++j)
    alpha[j] = std::fmod(1.0 / std::pow(g, static_cast<double>(j + 1)), 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> u(m), v(dim);
    for (std::size_t j = 0; j < m; ++j) {
      u[j] = std::fmod(0.5 + static_cast<double>(k + 1) * alpha[j], 1.0);
      u[j] = std::clamp(u[j], 1e-12, 1.0 - 1e-12);
    }
    for (std::size_t j = 0; j < dim; j += 2) {
      const double r = std::sqrt(-2.0 * std::log(u[j]));
      v[j] = r * std::cos(2.0 * kPi * u[j + 1]);
      if (j + 1 < dim) v[j + 1] = r * std::sin(2.0 * kPi * u[j + 1]);
    }
    const double len = norm(v);
    for (double& c : v) c /= len;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> distance_to_hull(const PointSet& points) {
  if (points.size() == 0) return {};
  if (points.dim() == 2) return hull_distance_2d(points);
  return box_distance(points);
}

double IsotropyReport::failing_fraction_toward(ConstPoint u) const {
  if (directions.empty()) return 1.0;
  std::size_t best = 0;
  double best_dot = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < directions.size(); ++k) {
    const double v = dot(directions[k], u);
    if (v > best_dot) {
      best_dot = v;
      best = k;
    }
  }
  return direction_failing_fraction[best];
}

IsotropyReport isotropy_audit(const DiscreteMeasure& mu,
                              const IsotropyOptions& options) {
  if (mu.empty()) throw ValidationError("isotropy audit of an empty measure");
  for (double delta : options.deltas)
    if (!(delta > 0.0 && delta < 1.0))
      throw DomainError("cone openings must lie in (0, 1)");

  IsotropyReport r;
  r.deltas = options.deltas;
  r.directions = direction_grid(mu.dim(), options.directions);
  r.resolution = median_nearest_neighbor_distance(mu.points());
  if (mu.size() < 2) {
    r.degenerate = true;
    r.warning = "single atom: no other atom can charge a cone";
  }
  if (!options.epsilons.empty()) {
    r.epsilons = options.epsilons;
  } else {
    for (double m : options.epsilon_multipliers)
      r.epsilons.push_back(m * (r.degenerate ? 1.0 : r.resolution));
  }
  for (double eps : r.epsilons)
    if (!(eps > 0.0)) throw DomainError("cone radii must be positive");
  if (!r.degenerate &&
      *std::min_element(r.epsilons.begin(), r.epsilons.end()) < r.resolution)
    r.warning = "cone radius below the resolution scale of the measure";

  // Atoms by mass: all of them when few, otherwise a seeded draw.
  std::map<std::size_t, double> picked;
  if (mu.size() <= options.point_sample) {
    for (std::size_t i = 0; i < mu.size(); ++i)
      if (mu.weight(i) > 0.0) picked[i] = mu.weight(i);
  } else {
    std::mt19937_64 rng(options.seed);
    std::discrete_distribution<std::size_t> draw(mu.weights().begin(),
                                                 mu.weights().end());
    const double unit = 1.0 / static_cast<double>(options.point_sample);
    for (std::size_t k = 0; k < options.point_sample; ++k) picked[draw(rng)] += unit;
  }

  const auto all_hull = distance_to_hull(mu.points());
  const std::size_t nd = r.directions.size(), ndel = r.deltas.size(),
                    neps = r.epsilons.size();
  const double max_eps = *std::max_element(r.epsilons.begin(), r.epsilons.end());
  const double min_eps = *std::min_element(r.epsilons.begin(), r.epsilons.end());
  std::vector<double> dir_fail(nd, 0.0);
  std::vector<char> hit(nd * ndel * neps);
  std::vector<double> v(mu.dim());
  double total = 0.0, failing = 0.0, interior = 0.0, interior_failing = 0.0;

  for (const auto& [i, mass] : picked) {
    std::fill(hit.begin(), hit.end(), 0);
    const auto x = mu.point(i);
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (j == i || !(mu.weight(j) > 0.0)) continue;
      const auto y = mu.point(j);
      double len2 = 0.0;
      for (std::size_t c = 0; c < v.size(); ++c) {
        v[c] = y[c] - x[c];
        len2 += v[c] * v[c];
      }
      const double len = std::sqrt(len2);
      if (len > max_eps) continue;
      for (std::size_t a = 0; a < nd; ++a) {
        const double along = dot(v, r.directions[a]);
        for (std::size_t b = 0; b < ndel; ++b) {
          if (!(along >= (1.0 - r.deltas[b]) * len)) continue;
          for (std::size_t e = 0; e < neps; ++e)
            if (len <= r.epsilons[e]) hit[(a * ndel + b) * neps + e] = 1;
        }
      }
    }

    std::size_t fails = 0;
    for (std::size_t a = 0; a < nd; ++a) {
      bool dir_failed = false;
      for (std::size_t b = 0; b < ndel; ++b)
        for (std::size_t e = 0; e < neps; ++e) {
          if (hit[(a * ndel + b) * neps + e]) continue;
          ++fails;
          dir_failed = true;
          const bool stronger =
              !r.worst_witness || r.deltas[b] > r.worst_witness->delta ||
              (r.deltas[b] == r.worst_witness->delta &&
               r.epsilons[e] > r.worst_witness->epsilon);
          if (stronger)
            r.worst_witness = IsotropyWitness{i, r.directions[a], r.deltas[b],
                                              r.epsilons[e]};
        }
      if (dir_failed) dir_fail[a] += mass;
    }

    r.sampled_atoms.push_back(i);
    r.sampled_mass.push_back(mass);
    r.failing_cells.push_back(fails);
    r.hull_distance.push_back(all_hull[i]);
    total += mass;
    if (fails > 0) failing += mass;
    if (all_hull[i] >= min_eps) {
      interior += mass;
      if (fails > 0) interior_failing += mass;
    }
  }

  r.failing_mass_fraction = total > 0.0 ? failing / total : 0.0;
  r.interior_mass_fraction = total > 0.0 ? interior / total : 0.0;
  r.interior_failing_fraction = interior > 0.0 ? interior_failing / interior : 0.0;
  r.direction_failing_fraction.resize(nd);
  for (std::size_t a = 0; a < nd; ++a)
    r.direction_failing_fraction[a] = total > 0.0 ? dir_fail[a] / total : 0.0;
  return r;
}

}  // namespace concave_ot
