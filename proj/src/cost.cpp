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

#include "concave_ot/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <new>
#include <sstream>

#include "concave_ot/errors.hpp"

namespace concave_ot {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ConcaveCost ConcaveCost::power(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("power cost needs 0 < alpha < 1");
  return ConcaveCost(PowerCost{alpha});
}

ConcaveCost ConcaveCost::log_shift(double a) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw ValidationError("logshift cost needs a finite a > 0");
  return ConcaveCost(LogShiftCost{a});
}

ConcaveCost ConcaveCost::piecewise(std::vector<double> breakpoints,
                                   std::vector<double> slopes,
                                   double curvature) {
  if (slopes.size() != breakpoints.size() + 1)
    throw ValidationError(
        "piecewise cost needs exactly one more slope than breakpoints");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > 0.0) || !std::isfinite(breakpoints[i]))
      throw ValidationError("piecewise breakpoints must be finite and positive");
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
      throw ValidationError("piecewise breakpoints must be strictly increasing");
  }
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    if (!(slopes[i] > 0.0) || !std::isfinite(slopes[i]))
      throw ValidationError("piecewise slopes must be finite and positive");
    if (i > 0 && !(slopes[i] < slopes[i - 1]))
      throw ValidationError("piecewise slopes must be strictly decreasing");
  }
  if (!(curvature >= 0.0) || !std::isfinite(curvature))
    throw ValidationError("piecewise curvature must be finite and >= 0");

  ConcaveCost cost(PiecewiseCost{std::move(breakpoints), std::move(slopes),
                                 curvature});
  const auto& pw = std::get<PiecewiseCost>(cost.kind_);
  cost.pw_values_.resize(pw.breakpoints.size());
  double value = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < pw.breakpoints.size(); ++i) {
    value += pw.slopes[i] * (pw.breakpoints[i] - prev);
    prev = pw.breakpoints[i];
    cost.pw_values_[i] = value;
  }
  return cost;
}

double ConcaveCost::piecewise_value(const PiecewiseCost& pw, double t) const {
  const auto it =
      std::upper_bound(pw.breakpoints.begin(), pw.breakpoints.end(), t);
  const auto piece = static_cast<std::size_t>(it - pw.breakpoints.begin());
  const double base = piece == 0 ? 0.0 : pw_values_[piece - 1];
  const double start = piece == 0 ? 0.0 : pw.breakpoints[piece - 1];
  return base + pw.slopes[piece] * (t - start) +
         pw.curvature * std::log1p(t);
}

double ConcaveCost::eval(double t) const {
  if (!(t >= 0.0)) throw DomainError("cost evaluated at negative length");
  if (t == 0.0) return 0.0;
  return std::visit(
      Overloaded{
          [&](const PowerCost& c) { return std::pow(t, c.alpha); },
          [&](const LogShiftCost& c) { return std::log1p(c.a * t); },
          [&](const PiecewiseCost& c) { return piecewise_value(c, t); }},
      kind_);
}

double ConcaveCost::deriv(double t, Side side) const {
  if (!(t > 0.0))
    throw DomainError("cost derivative requires t > 0");
  return std::visit(
      Overloaded{
          [&](const PowerCost& c) {
            return c.alpha * std::pow(t, c.alpha - 1.0);
          },
          [&](const LogShiftCost& c) { return c.a / (1.0 + c.a * t); },
          [&](const PiecewiseCost& c) {
            const auto& b = c.breakpoints;
            const auto it = side == Side::kRight
                                ? std::upper_bound(b.begin(), b.end(), t)
                                : std::lower_bound(b.begin(), b.end(), t);
            const auto piece = static_cast<std::size_t>(it - b.begin());
            return c.slopes[piece] + c.curvature / (1.0 + t);
          }},
      kind_);
}

InverseDerivative ConcaveCost::inv_deriv(double p) const {
  if (!(p > 0.0)) throw DomainError("inverse derivative requires p > 0");
  return std::visit(
      Overloaded{
          [&](const PowerCost& c) -> InverseDerivative {
            return std::pow(p / c.alpha, 1.0 / (c.alpha - 1.0));
          },
          [&](const LogShiftCost& c) -> InverseDerivative {
            if (p >= c.a) return OutOfRange{OutOfRange::Reason::kAboveSupremum};
            return 1.0 / p - 1.0 / c.a;
          },
          [&](const PiecewiseCost& c) -> InverseDerivative {
            const double kappa = c.curvature;
            const std::size_t pieces = c.slopes.size();
            const double sup = c.slopes.front() + kappa;
            const double inf = c.slopes.back();
            if (p > sup || (p == sup && kappa > 0.0))
              return OutOfRange{OutOfRange::Reason::kAboveSupremum};
            if (p < inf || (p == inf && kappa > 0.0))
              return OutOfRange{OutOfRange::Reason::kBelowInfimum};

            if (kappa == 0.0 &&
                std::find(c.slopes.begin(), c.slopes.end(), p) != c.slopes.end())
              return OutOfRange{OutOfRange::Reason::kFlatPiece};
            for (std::size_t k = 0; k < c.breakpoints.size(); ++k) {
              const double t0 = c.breakpoints[k];
              const double smooth = kappa / (1.0 + t0);
              const double left = c.slopes[k] + smooth;
              const double right = c.slopes[k + 1] + smooth;
              if (p == left || p == right) return t0;
              if (right < p && p < left) return DerivativeGap{t0, left, right};
            }
            for (std::size_t i = 0; kappa > 0.0 && i < pieces; ++i) {
              const double lo_t = i == 0 ? 0.0 : c.breakpoints[i - 1];
              const double hi_t = i + 1 < pieces ? c.breakpoints[i] : kInf;
              const double hi_p = c.slopes[i] + kappa / (1.0 + lo_t);
              const double lo_p =
                  c.slopes[i] + (std::isinf(hi_t) ? 0.0 : kappa / (1.0 + hi_t));
              if (lo_p < p && p < hi_p) return kappa / (p - c.slopes[i]) - 1.0;
            }
            // Only reachable through rounding at piece ends.
            return OutOfRange{OutOfRange::Reason::kBelowInfimum};
          }},
      kind_);
}

std::vector<double> ConcaveCost::kinks() const {
  if (const auto* pw = std::get_if<PiecewiseCost>(&kind_))
    return pw->breakpoints;
  return {};
}

double ConcaveCost::slope_at_zero() const {
  return std::visit(
      Overloaded{[](const PowerCost&) { return kInf; },
                 [](const LogShiftCost& c) { return c.a; },
                 [](const PiecewiseCost& c) {
                   return c.slopes.front() + c.curvature;
                 }},
      kind_);
}

std::string ConcaveCost::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{[&](const PowerCost& c) { os << "power(" << c.alpha << ")"; },
                        [&](const LogShiftCost& c) {
                          os << "logshift(" << c.a << ")";
                        },
                        [&](const PiecewiseCost& c) {
                          os << "piecewise(" << c.breakpoints.size()
                             << " kinks, curvature " << c.curvature << ")";
                        }},
             kind_);
  return os.str();
}

void to_json(nlohmann::json& j, const ConcaveCost& cost) {
  std::visit(Overloaded{[&](const PowerCost& c) {
                          j = {{"kind", "power"}, {"alpha", c.alpha}};
                        },
                        [&](const LogShiftCost& c) {
                          j = {{"kind", "logshift"}, {"a", c.a}};
                        },
                        [&](const PiecewiseCost& c) {
                          j = {{"kind", "piecewise"},
                               {"breakpoints", c.breakpoints},
                               {"slopes", c.slopes}};
                          if (c.curvature != 0.0) j["curvature"] = c.curvature;
                        }},
             cost.kind());
}

ConcaveCost cost_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ValidationError("cost must be a JSON object with a string \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "power") return ConcaveCost::power(j.value("alpha", 0.5));
    if (kind == "logshift") return ConcaveCost::log_shift(j.value("a", 1.0));
    if (kind == "piecewise")
      return ConcaveCost::piecewise(
          j.at("breakpoints").get<std::vector<double>>(),
          j.at("slopes").get<std::vector<double>>(), j.value("curvature", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed cost JSON: ") + e.what());
  }
  throw ValidationError("unknown cost kind \"" + kind + "\"");
}

SubadditivityReport check_strict_subadditivity(
    const ConcaveCost& cost, std::span<const std::pair<double, double>> samples,
    double threshold) {
  SubadditivityReport report;
  report.min_margin = kInf;
  for (const auto& [s, t] : samples) {
    if (!(s > 0.0) || !(t > 0.0))
      throw DomainError("subadditivity samples must be positive");
    const double margin = cost.eval(s) + cost.eval(t) - cost.eval(s + t);
    report.min_margin = std::min(report.min_margin, margin);
    if (margin <= threshold) ++report.violations;
  }
  report.samples = samples.size();
  return report;
}

double strict_triangle(const ConcaveCost& cost, ConstPoint x, ConstPoint y,
                       ConstPoint z) {
  if (x.size() != y.size() || y.size() != z.size())
    throw DimensionMismatch("triangle points differ in dimension");
  if (same_point(x, y) || same_point(y, z))
    throw ValidationError("strict triangle needs x != y and y != z");
  return cost(x, y) + cost(y, z) - cost(x, z);
}

double semiconcavity_modulus(const ConcaveCost& cost, double d0) {
  if (!(d0 > 0.0)) throw DomainError("semiconcavity needs d0 > 0");
  return cost.deriv(d0, Side::kRight) * std::max(1.0, 1.0 / d0);
}

SemiconcavityReport semiconcavity_margin(
    const ConcaveCost& cost, double d0,
    std::span<const SemiconcavityProbe> probes) {
  SemiconcavityReport report;
  report.modulus = semiconcavity_modulus(cost, d0);
  report.worst_second_difference = -kInf;
  const double lambda = report.modulus;

  auto g = [&](std::span<const double> x) {
    const double r = norm(x);
    if (r < d0)
      throw DomainError("semiconcavity probe evaluated inside the d0 ball");
    return cost.eval(r) - 0.5 * lambda * r * r;
  };

  std::vector<double> plus, minus;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const auto& probe = probes[k];
    if (probe.x.size() != probe.v.size())
      throw DimensionMismatch("probe point and direction differ in dimension");
    if (!(probe.h > 0.0)) throw DomainError("probe step must be positive");
    plus = probe.x;
    minus = probe.x;
    for (std::size_t c = 0; c < probe.x.size(); ++c) {
      plus[c] += probe.h * probe.v[c];
      minus[c] -= probe.h * probe.v[c];
    }
    const double second =
        (g(plus) - 2.0 * g(probe.x) + g(minus)) / (probe.h * probe.h);
    if (second > report.worst_second_difference) {
      report.worst_second_difference = second;
      report.worst_probe = k;
    }
  }
  return report;
}

std::vector<double> c_transform(std::span<const double> values,
                                const ConcaveCost& cost, const PointSet& from,
                                const PointSet& to) {
  if (from.empty() || to.empty())
    throw ValidationError("c-transform over an empty support");
  if (values.size() != from.size())
    throw DimensionMismatch("c-transform values do not match the support");
  if (from.dim() != to.dim())
    throw DimensionMismatch("c-transform supports differ in dimension");
  std::vector<double> out(to.size(), kInf);
  for (std::size_t j = 0; j < to.size(); ++j)
    for (std::size_t i = 0; i < from.size(); ++i)
      out[j] = std::min(out[j], cost(from[i], to[j]) - values[i]);
  return out;
}

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols) {
  try {
    data_.assign(rows * cols, 0.0);
  } catch (const std::bad_alloc&) {
    throw ResourceError("cannot allocate a " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " cost matrix");
  } catch (const std::length_error&) {
    throw ResourceError("cost matrix size overflows");
  }
}

double CostMatrix::max() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double CostMatrix::mean() const {
  if (data_.empty()) return 0.0;
  double s = 0.0;
  for (double v : data_) s += v;
  return s / static_cast<double>(data_.size());
}

CostMatrix cost_matrix(const PointSet& from, const PointSet& to,
                       const ConcaveCost& cost) {
  return cost_matrix(from, to, [&cost](ConstPoint x, ConstPoint y) {
    return cost(x, y);
  });
}

CostMatrix cost_matrix(const PointSet& from, const PointSet& to,
                       const GroundCost& cost) {
  if (from.empty() || to.empty())
    throw ValidationError("cost matrix over an empty support");
  if (from.dim() != to.dim())
    throw DimensionMismatch("cost matrix supports differ in dimension");
  CostMatrix m(from.size(), to.size());
  for (std::size_t i = 0; i < from.size(); ++i)
    for (std::size_t j = 0; j < to.size(); ++j) m(i, j) = cost(from[i], to[j]);
  return m;
}

}  // namespace concave_ot
