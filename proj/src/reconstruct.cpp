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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "concave_ot/errors.hpp"
#include "concave_ot/structure.hpp"

namespace concave_ot {
namespace {

// Indices of the k nearest atoms to atom i (i itself included, ties by index).
std::vector<std::size_t> nearest(const PointSet& pts, std::size_t i,
                                 std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j)
    d[j] = {squared_distance(pts[i], pts[j]), j};
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k),
                    d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t r = 0; r < k; ++r) out[r] = d[r].second;
  return out;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  const auto pos = static_cast<std::size_t>(
      std::min<double>(v.size() - 1, std::floor(q * static_cast<double>(v.size()))));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(pos),
                   v.end());
  return v[pos];
}

}  // namespace

Reconstruction reconstruct_map_from_potential(const DualPotentials& potentials,
                                              const TransportPlan& plan,
                                              const ConcaveCost& cost,
                                              const ReconstructOptions& options) {
  const auto& mu = plan.source();
  const auto& nu = plan.target();
  const std::size_t n = mu.size();
  const std::size_t d = mu.dim();
  if (n < 2)
    throw PreconditionError(
        "gradient fit needs at least two source atoms");
  if (potentials.phi.size() != n)
    throw DimensionMismatch("potential size does not match the source measure");

  std::size_t k = options.k_neighbors == 0 ? std::max<std::size_t>(d + 1, 8)
                                           : options.k_neighbors;
  if (k < d + 1)
    throw PreconditionError("k_neighbors must be at least dim + 1");
  k = std::min(k, n);

  // Heaviest off-diagonal target per source.
  std::vector<std::optional<std::size_t>> lp_target(n);
  std::vector<double> lp_mass(n, 0.0);
  for (const auto& e : plan.entries()) {
    if (!(e.mass > 0.0) || same_point(mu.point(e.source), nu.point(e.target)))
      continue;
    if (e.mass > lp_mass[e.source]) {
      lp_mass[e.source] = e.mass;
      lp_target[e.source] = e.target;
    }
  }

  Reconstruction out;
  out.k_neighbors = k;
  out.atoms.resize(n);
  std::vector<double> errors, residuals;
  double moving_mass = 0.0, aligned_mass = 0.0;

  Eigen::MatrixXd a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd b(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < n; ++i) {
    auto& atom = out.atoms[i];
    const auto x = mu.point(i);
    const auto nbrs = nearest(mu.points(), i, k);
    for (std::size_t r = 0; r < k; ++r) {
      const auto z = mu.point(nbrs[r]);
      const auto row = static_cast<Eigen::Index>(r);
      a(row, 0) = 1.0;
      for (std::size_t c = 0; c < d; ++c)
        a(row, static_cast<Eigen::Index>(c + 1)) = z[c] - x[c];
      b(row) = potentials.phi[nbrs[r]];
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    atom.fit_residual =
        (a * coef - b).norm() / std::sqrt(static_cast<double>(k));
    residuals.push_back(atom.fit_residual);
    atom.gradient.resize(d);
    for (std::size_t c = 0; c < d; ++c)
      atom.gradient[c] = coef(static_cast<Eigen::Index>(c + 1));
    const double gnorm = norm(atom.gradient);
    atom.lp_target = lp_target[i];

    if (atom.lp_target && gnorm > 0.0) {
      const auto y = nu.point(*atom.lp_target);
      double dot_v = 0.0;
      for (std::size_t c = 0; c < d; ++c)
        dot_v -= atom.gradient[c] * (y[c] - x[c]);
      atom.direction_cosine = dot_v / (gnorm * distance(x, y));
    }
    if (atom.lp_target) {
      moving_mass += mu.weight(i);
      if (atom.direction_cosine >= 0.9) aligned_mass += mu.weight(i);
    }

    if (gnorm <= options.grad_tol) {
      atom.status = ReconstructionStatus::kNearDiagonal;
      ++out.near_diagonal;
      continue;
    }
    const auto inv = cost.inv_deriv(gnorm);
    if (const auto* t = std::get_if<double>(&inv)) {
      atom.radius = *t;
    } else if (const auto* gap = std::get_if<DerivativeGap>(&inv)) {
      atom.status = ReconstructionStatus::kGap;
      atom.radius = gap->point;
      ++out.gap_events;
    } else {
      atom.status = ReconstructionStatus::kOutOfRange;
      ++out.out_of_range;
      continue;
    }
    atom.predicted.resize(d);
    for (std::size_t c = 0; c < d; ++c)
      atom.predicted[c] = x[c] - atom.radius * atom.gradient[c] / gnorm;
    if (atom.lp_target) {
      atom.error = distance(atom.predicted, nu.point(*atom.lp_target));
      errors.push_back(atom.error);
    }
  }

  out.median_error = quantile(errors, 0.5);
  out.p90_error = quantile(errors, 0.9);
  out.median_fit_residual = quantile(residuals, 0.5);
  out.aligned_mass_fraction = moving_mass > 0.0 ? aligned_mass / moving_mass : 0.0;
  return out;
}

}  // namespace concave_ot
