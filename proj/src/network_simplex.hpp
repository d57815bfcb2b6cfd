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

#ifndef CONCAVE_OT_SRC_NETWORK_SIMPLEX_HPP_
#define CONCAVE_OT_SRC_NETWORK_SIMPLEX_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "concave_ot/cost.hpp"

namespace concave_ot::detail {

// Primal network simplex on the complete bipartite transportation network
// sources -> targets with uncapacitated arcs. The spanning tree is rooted at
// an artificial node joined to every real node by a big-M arc; trees are kept
// strongly feasible (Cunningham's leaving-arc rule), which rules out cycling,
// and entering arcs are chosen by block-search pricing.
class TransportSimplex {
 public:
  struct Flow {
    std::size_t source;
    std::size_t target;
    double mass;
  };

  TransportSimplex(std::span<const double> supply,
                   std::span<const double> demand, const CostMatrix& cost);

  // Returns false if the pivot budget ran out before optimality.
  bool run(std::uint64_t max_pivots);

  std::uint64_t pivots() const { return pivots_; }
  std::uint64_t degenerate_pivots() const { return degenerate_pivots_; }
  // Basic flows with positive mass, sorted by (source, target).
  std::vector<Flow> flows() const;
  // Duals with phi_i + psi_j <= c_ij; unnormalized.
  void potentials(std::vector<double>& phi, std::vector<double>& psi) const;
  // Largest flow left on artificial arcs; zero for balanced input.
  double artificial_flow() const;

 private:
  using Node = std::int32_t;
  static constexpr Node kNone = -1;

  std::int64_t arc_source(std::int64_t arc) const;
  std::int64_t arc_target(std::int64_t arc) const;
  double arc_cost(std::int64_t arc) const;

  std::int64_t find_entering();
  void pivot(std::int64_t in_arc);
  void cut(Node u);
  void link(Node u, Node parent);
  void shift_subtree(Node top, double sigma);
  void recompute_tree_values();

  std::size_t m_, n_;
  Node root_;
  std::int64_t real_arcs_;
  const CostMatrix& cost_;
  double art_cost_;
  double eps_;
  std::vector<double> supply_;  // per node; targets negative

  std::vector<Node> parent_;
  std::vector<std::int64_t> pred_;
  std::vector<char> up_;  // pred arc oriented node -> parent
  std::vector<double> flow_;  // flow on pred arc
  std::vector<double> pi_;
  std::vector<std::int32_t> depth_;
  std::vector<Node> first_child_, next_sibling_, prev_sibling_;
  std::vector<char> in_tree_;
  std::vector<Node> stack_;

  std::size_t block_size_;
  std::size_t next_i_ = 0, next_j_ = 0;
  std::uint64_t pivots_ = 0;
  std::uint64_t degenerate_pivots_ = 0;
};

}  // namespace concave_ot::detail

#endif  // CONCAVE_OT_SRC_NETWORK_SIMPLEX_HPP_
