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

#ifndef CONCAVE_OT_POINTS_HPP_
#define CONCAVE_OT_POINTS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "concave_ot/errors.hpp"

namespace concave_ot {

using ConstPoint = std::span<const double>;

// A list of points in R^dim stored contiguously, row-major.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> coords)
      : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw ValidationError("point dimension must be positive");
    if (coords_.size() % dim_ != 0)
      throw ValidationError("coordinate count is not a multiple of dim");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  ConstPoint operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  void push_back(ConstPoint p) {
    if (p.size() != dim_) throw DimensionMismatch("point dimension mismatch");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

inline double squared_distance(ConstPoint a, ConstPoint b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline double distance(ConstPoint a, ConstPoint b) {
  return std::sqrt(squared_distance(a, b));
}

inline double norm(ConstPoint a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline double dot(ConstPoint a, ConstPoint b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline bool same_point(ConstPoint a, ConstPoint b) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] != b[k]) return false;
  return true;
}

}  // namespace concave_ot

#endif  // CONCAVE_OT_POINTS_HPP_
