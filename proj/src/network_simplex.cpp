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

#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "concave_ot/errors.hpp"

namespace concave_ot::detail {
namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TransportSimplex::TransportSimplex(std::span<const double> supply,
                                   std::span<const double> demand,
                                   const CostMatrix& cost)
    : m_(supply.size()),
      n_(demand.size()),
      root_(static_cast<Node>(supply.size() + demand.size())),
      real_arcs_(static_cast<std::int64_t>(supply.size() * demand.size())),
      cost_(cost) {
  if (cost.rows() != m_ || cost.cols() != n_)
    throw DimensionMismatch("cost matrix shape does not match the marginals");
  const std::size_t nodes = m_ + n_;
  if (nodes + 1 > static_cast<std::size_t>(std::numeric_limits<Node>::max()))
    throw ResourceError("too many atoms for the network simplex");

  const double max_cost = cost.max();
  art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes + 1);
  eps_ = 1e-12 * max_cost;
  block_size_ = std::max<std::size_t>(
      10, static_cast<std::size_t>(std::sqrt(static_cast<double>(real_arcs_))));

  supply_.resize(nodes);
  for (std::size_t i = 0; i < m_; ++i) supply_[i] = supply[i];
  for (std::size_t j = 0; j < n_; ++j) supply_[m_ + j] = -demand[j];

  const std::size_t total = nodes + 1;
  parent_.assign(total, kNone);
  pred_.assign(total, -1);
  up_.assign(total, 0);
  flow_.assign(total, 0.0);
  pi_.assign(total, 0.0);
  depth_.assign(total, 0);
  first_child_.assign(total, kNone);
  next_sibling_.assign(total, kNone);
  prev_sibling_.assign(total, kNone);
  in_tree_.assign(static_cast<std::size_t>(real_arcs_), 0);

  // Initial strongly feasible tree: every node hangs off the root by its
  // artificial arc, oriented along its supply.
  for (std::size_t u = 0; u < nodes; ++u) {
    const Node node = static_cast<Node>(u);
    pred_[u] = real_arcs_ + static_cast<std::int64_t>(u);
    depth_[u] = 1;
    if (supply_[u] >= 0.0) {
      up_[u] = 1;
      flow_[u] = supply_[u];
      pi_[u] = 0.0;
    } else {
      up_[u] = 0;
      flow_[u] = -supply_[u];
      pi_[u] = art_cost_;
    }
    link(node, root_);
  }
}

std::int64_t TransportSimplex::arc_source(std::int64_t arc) const {
  if (arc < real_arcs_) return arc / static_cast<std::int64_t>(n_);
  const std::int64_t u = arc - real_arcs_;
  return supply_[static_cast<std::size_t>(u)] >= 0.0 ? u : root_;
}

std::int64_t TransportSimplex::arc_target(std::int64_t arc) const {
  if (arc < real_arcs_)
    return static_cast<std::int64_t>(m_) + arc % static_cast<std::int64_t>(n_);
  const std::int64_t u = arc - real_arcs_;
  return supply_[static_cast<std::size_t>(u)] >= 0.0 ? root_ : u;
}

double TransportSimplex::arc_cost(std::int64_t arc) const {
  if (arc < real_arcs_) return cost_.data()[static_cast<std::size_t>(arc)];
  const std::int64_t u = arc - real_arcs_;
  return supply_[static_cast<std::size_t>(u)] >= 0.0 ? 0.0 : art_cost_;
}

void TransportSimplex::cut(Node u) {
  const Node p = parent_[u];
  if (prev_sibling_[u] != kNone)
    next_sibling_[prev_sibling_[u]] = next_sibling_[u];
  else
    first_child_[p] = next_sibling_[u];
  if (next_sibling_[u] != kNone)
    prev_sibling_[next_sibling_[u]] = prev_sibling_[u];
  prev_sibling_[u] = next_sibling_[u] = kNone;
  parent_[u] = kNone;
}

void TransportSimplex::link(Node u, Node parent) {
  parent_[u] = parent;
  prev_sibling_[u] = kNone;
  next_sibling_[u] = first_child_[parent];
  if (first_child_[parent] != kNone) prev_sibling_[first_child_[parent]] = u;
  first_child_[parent] = u;
}

void TransportSimplex::shift_subtree(Node top, double sigma) {
  stack_.clear();
  stack_.push_back(top);
  while (!stack_.empty()) {
    const Node u = stack_.back();
    stack_.pop_back();
    pi_[u] += sigma;
    depth_[u] = depth_[parent_[u]] + 1;
    for (Node c = first_child_[u]; c != kNone; c = next_sibling_[c])
      stack_.push_back(c);
  }
}

std::int64_t TransportSimplex::find_entering() {
  const double* cost = cost_.data().data();
  const double* pi_t = pi_.data() + m_;
  double best = -eps_;
  std::int64_t entering = -1;
  std::size_t budget = block_size_;
  std::size_t i = next_i_, j = next_j_;
  for (std::int64_t scanned = 0; scanned < real_arcs_; ++scanned) {
    const std::size_t arc = i * n_ + j;
    if (!in_tree_[arc]) {
      const double rc = cost[arc] + pi_[i] - pi_t[j];
      if (rc < best) {
        best = rc;
        entering = static_cast<std::int64_t>(arc);
      }
    }
    if (++j == n_) {
      j = 0;
      if (++i == m_) i = 0;
    }
    if (--budget == 0) {
      if (entering >= 0) break;
      budget = block_size_;
    }
  }
  next_i_ = i;
  next_j_ = j;
  return entering;
}

void TransportSimplex::pivot(std::int64_t in_arc) {
  const Node first = static_cast<Node>(arc_source(in_arc));
  const Node second = static_cast<Node>(arc_target(in_arc));

  Node a = first, b = second;
  while (a != b) {
    if (depth_[a] >= depth_[b])
      a = parent_[a];
    else
      b = parent_[b];
  }
  const Node join = a;

  // Flow runs first -> second over the entering arc, up from second to the
  // join and down from the join to first. Ties prefer the last blocking arc
  // in cycle order (from the join), which keeps the tree strongly feasible.
  double delta = kInf;
  Node u_out = kNone;
  bool out_on_first = false;
  for (Node u = first; u != join; u = parent_[u]) {
    const double residual = up_[u] ? flow_[u] : kInf;
    if (residual < delta) {
      delta = residual;
      u_out = u;
      out_on_first = true;
    }
  }
  for (Node u = second; u != join; u = parent_[u]) {
    const double residual = up_[u] ? kInf : flow_[u];
    if (residual <= delta) {
      delta = residual;
      u_out = u;
      out_on_first = false;
    }
  }
  if (u_out == kNone || !std::isfinite(delta))
    throw SolverError("unbounded pivot in transportation simplex");

  if (delta > 0.0) {
    for (Node u = first; u != join; u = parent_[u])
      flow_[u] += up_[u] ? -delta : delta;
    for (Node u = second; u != join; u = parent_[u])
      flow_[u] += up_[u] ? delta : -delta;
  } else {
    ++degenerate_pivots_;
  }

  const Node u_in = out_on_first ? first : second;
  const Node v_in = out_on_first ? second : first;
  const std::int64_t out_arc = pred_[u_out];

  // Re-hang the path u_in .. u_out below v_in, reversing parent links.
  Node w = u_in;
  Node new_parent = v_in;
  std::int64_t new_arc = in_arc;
  char new_up = static_cast<char>(arc_source(in_arc) == u_in);
  double new_flow = delta;
  for (;;) {
    const Node old_parent = parent_[w];
    const std::int64_t old_arc = pred_[w];
    const char old_up = up_[w];
    const double old_flow = flow_[w];
    cut(w);
    pred_[w] = new_arc;
    up_[w] = new_up;
    flow_[w] = new_flow;
    link(w, new_parent);
    if (w == u_out) break;
    new_parent = w;
    new_arc = old_arc;
    new_up = static_cast<char>(!old_up);
    new_flow = old_flow;
    w = old_parent;
  }

  if (out_arc < real_arcs_) in_tree_[static_cast<std::size_t>(out_arc)] = 0;
  in_tree_[static_cast<std::size_t>(in_arc)] = 1;

  const double c = arc_cost(in_arc);
  const double target_pi =
      arc_source(in_arc) == u_in ? pi_[v_in] - c : pi_[v_in] + c;
  shift_subtree(u_in, target_pi - pi_[u_in]);
  ++pivots_;
}

void TransportSimplex::recompute_tree_values() {
  // Preorder from the root: potentials exactly along tree paths; then
  // subtree net supplies in reverse order give the basic flows.
  std::vector<Node> order;
  order.reserve(parent_.size());
  stack_.clear();
  stack_.push_back(root_);
  pi_[root_] = 0.0;
  depth_[root_] = 0;
  while (!stack_.empty()) {
    const Node u = stack_.back();
    stack_.pop_back();
    order.push_back(u);
    if (u != root_) {
      const double c = arc_cost(pred_[u]);
      pi_[u] = up_[u] ? pi_[parent_[u]] - c : pi_[parent_[u]] + c;
      depth_[u] = depth_[parent_[u]] + 1;
    }
    for (Node c = first_child_[u]; c != kNone; c = next_sibling_[c])
      stack_.push_back(c);
  }
  std::vector<double> net(parent_.size(), 0.0);
  for (std::size_t u = 0; u < supply_.size(); ++u) net[u] = supply_[u];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Node u = *it;
    if (u == root_) continue;
    flow_[u] = up_[u] ? net[u] : -net[u];
    net[parent_[u]] += net[u];
  }
}

bool TransportSimplex::run(std::uint64_t max_pivots) {
  for (;;) {
    for (std::int64_t arc = find_entering(); arc >= 0; arc = find_entering()) {
      if (pivots_ >= max_pivots) return false;
      pivot(arc);
    }
    // Incremental potentials drift; confirm optimality on exact values.
    recompute_tree_values();
    next_i_ = next_j_ = 0;
    if (find_entering() < 0) return true;
  }
}

std::vector<TransportSimplex::Flow> TransportSimplex::flows() const {
  std::vector<Flow> out;
  for (std::size_t u = 0; u < supply_.size(); ++u) {
    const std::int64_t arc = pred_[u];
    if (arc >= real_arcs_ || !(flow_[u] > 0.0)) continue;
    out.push_back({static_cast<std::size_t>(arc_source(arc)),
                   static_cast<std::size_t>(arc_target(arc)) - m_, flow_[u]});
  }
  std::sort(out.begin(), out.end(), [](const Flow& a, const Flow& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  return out;
}

void TransportSimplex::potentials(std::vector<double>& phi,
                                  std::vector<double>& psi) const {
  phi.resize(m_);
  psi.resize(n_);
  for (std::size_t i = 0; i < m_; ++i) phi[i] = -pi_[i];
  for (std::size_t j = 0; j < n_; ++j) psi[j] = pi_[m_ + j];
}

double TransportSimplex::artificial_flow() const {
  double worst = 0.0;
  for (std::size_t u = 0; u < supply_.size(); ++u)
    if (pred_[u] >= real_arcs_) worst = std::max(worst, std::abs(flow_[u]));
  return worst;
}

}  // namespace concave_ot::detail
