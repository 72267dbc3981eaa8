#include "bilgr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bilgr/error.hpp"

namespace bilgr {

Graph::Graph(std::size_t node_count) : adjacency_(node_count) {}

Graph::Graph(std::size_t node_count, std::span<const Edge> edges) : adjacency_(node_count) {
  for (const Edge& e : edges) add_edge(e.u, e.v, e.weight);
}

void Graph::check_node(NodeId v) const {
  if (v < 0 || static_cast<std::size_t>(v) >= adjacency_.size()) {
    throw IndexError("node id " + std::to_string(v) + " out of range for graph with " +
                     std::to_string(adjacency_.size()) + " nodes");
  }
}

namespace {

bool insert_sorted(std::vector<Neighbor>& list, Neighbor nb) {
  auto it = std::lower_bound(list.begin(), list.end(), nb.node,
                             [](const Neighbor& a, NodeId id) { return a.node < id; });
  if (it != list.end() && it->node == nb.node) return false;
  list.insert(it, nb);
  return true;
}

}  // namespace

void Graph::add_edge(NodeId u, NodeId v, double weight) {
  check_node(u);
  check_node(v);
  if (u == v) throw ParameterError("self-loop on node " + std::to_string(u));
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw ParameterError("edge weight must be positive and finite");
  }
  if (!insert_sorted(adjacency_[u], {v, weight})) {
    throw ParameterError("duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
  }
  insert_sorted(adjacency_[v], {u, weight});
  ++edge_count_;
}

std::span<const Neighbor> Graph::neighbors(NodeId v) const {
  check_node(v);
  return adjacency_[v];
}

double Graph::weighted_degree(NodeId v) const {
  double s = 0.0;
  for (const Neighbor& nb : neighbors(v)) s += nb.weight;
  return s;
}

bool Graph::has_edge(NodeId u, NodeId v) const { return edge_weight(u, v) > 0.0; }

double Graph::edge_weight(NodeId u, NodeId v) const {
  auto list = neighbors(u);
  check_node(v);
  auto it = std::lower_bound(list.begin(), list.end(), v,
                             [](const Neighbor& a, NodeId id) { return a.node < id; });
  return (it != list.end() && it->node == v) ? it->weight : 0.0;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t u = 0; u < adjacency_.size(); ++u) {
    for (const Neighbor& nb : adjacency_[u]) {
      if (static_cast<std::size_t>(nb.node) > u) {
        out.push_back({static_cast<NodeId>(u), nb.node, nb.weight});
      }
    }
  }
  return out;
}

std::vector<NodeId> Graph::component_ids() const {
  const std::size_t n = adjacency_.size();
  std::vector<NodeId> comp(n, -1);
  std::vector<NodeId> stack;
  NodeId next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(static_cast<NodeId>(s));
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (const Neighbor& nb : adjacency_[v]) {
        if (comp[nb.node] < 0) {
          comp[nb.node] = next;
          stack.push_back(nb.node);
        }
      }
    }
    ++next;
  }
  return comp;
}

std::size_t Graph::component_count() const {
  auto ids = component_ids();
  return ids.empty() ? 0 : static_cast<std::size_t>(*std::max_element(ids.begin(), ids.end()) + 1);
}

Graph generate_power_law_cluster(std::size_t n, std::size_t m, double p, RngSeed seed) {
  if (m < 1 || n < m + 1) {
    throw ParameterError("power-law cluster graph needs n >= m + 1 >= 2 (n=" + std::to_string(n) +
                         ", m=" + std::to_string(m) + ")");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("triad probability p must lie in [0, 1]");

  Rng rng(seed);
  Graph g(n);
  // Each node appears once per incident edge, so uniform draws are degree-proportional.
  std::vector<NodeId> pool(m);
  std::iota(pool.begin(), pool.end(), 0);

  auto attach = [&](NodeId source, NodeId target) {
    g.add_edge(source, target);
    pool.push_back(target);
  };

  std::vector<NodeId> targets;
  std::vector<NodeId> triad;
  for (std::size_t s = m; s < n; ++s) {
    const auto source = static_cast<NodeId>(s);

    targets.clear();
    while (targets.size() < m) {
      NodeId x = pool[rng.below(pool.size())];
      if (std::find(targets.begin(), targets.end(), x) == targets.end()) targets.push_back(x);
    }

    auto next_preferential = [&]() -> NodeId {
      while (!targets.empty()) {
        NodeId t = targets.back();
        targets.pop_back();
        if (!g.has_edge(source, t)) return t;
      }
      // Subset exhausted by triad closures landing on it; redraw from the pool.
      for (;;) {
        NodeId t = pool[rng.below(pool.size())];
        if (t != source && !g.has_edge(source, t)) return t;
      }
    };

    NodeId target = next_preferential();
    attach(source, target);
    for (std::size_t count = 1; count < m; ++count) {
      if (rng.uniform() < p) {
        triad.clear();
        for (const Neighbor& nb : g.neighbors(target)) {
          if (nb.node != source && !g.has_edge(source, nb.node)) triad.push_back(nb.node);
        }
        if (!triad.empty()) {
          attach(source, triad[rng.below(triad.size())]);
          continue;
        }
      }
      target = next_preferential();
      attach(source, target);
    }
    pool.insert(pool.end(), m, source);
  }
  return g;
}

NoisyGraph add_noise_links(const Graph& g, double node_fraction, RngSeed seed) {
  if (!(node_fraction > 0.0 && node_fraction <= 1.0)) {
    throw ParameterError("noise node fraction must lie in (0, 1]");
  }
  const std::size_t n = g.node_count();
  const auto k = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(node_fraction * static_cast<double>(n) - 1e-9)));

  Rng rng(seed);
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(order[i], order[i + rng.below(n - i)]);
  }

  NoisyGraph out{g, 0, 0};
  for (std::size_t i = 0; i < k; ++i) {
    const NodeId u = order[i];
    auto nbrs = out.graph.neighbors(u);
    const std::size_t free_slots = n - 1 - nbrs.size();
    if (free_slots == 0) {
      ++out.skipped;
      continue;
    }
    // Walk ids in order, skipping u and its (sorted) neighbors, to the r-th gap.
    std::size_t r = rng.below(free_slots);
    std::size_t nb_pos = 0;
    NodeId pick = -1;
    for (NodeId v = 0; static_cast<std::size_t>(v) < n; ++v) {
      if (nb_pos < nbrs.size() && nbrs[nb_pos].node == v) {
        ++nb_pos;
        continue;
      }
      if (v == u) continue;
      if (r == 0) {
        pick = v;
        break;
      }
      --r;
    }
    out.graph.add_edge(u, pick, 1.0);
    ++out.added;
  }
  return out;
}

NodeFeatures raw_features(const Graph& g) {
  const std::size_t n = g.node_count();
  Vector wdeg(static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) wdeg[v] = g.weighted_degree(static_cast<NodeId>(v));

  NodeFeatures f{Matrix::Zero(static_cast<Eigen::Index>(n), 2)};
  for (std::size_t v = 0; v < n; ++v) {
    auto nbrs = g.neighbors(static_cast<NodeId>(v));
    double s = 0.0;
    for (const Neighbor& nb : nbrs) s += wdeg[nb.node];
    f.values(v, 0) = wdeg[v];
    f.values(v, 1) = nbrs.empty() ? 0.0 : s / static_cast<double>(nbrs.size());
  }
  return f;
}

NodeFeatures compute_features(const Graph& g) {
  NodeFeatures f = raw_features(g);
  for (Eigen::Index c = 0; c < f.values.cols(); ++c) {
    auto col = f.values.col(c);
    if (col.size() == 0) break;
    const double lo = col.minCoeff();
    const double range = col.maxCoeff() - lo;
    if (range > 0.0) {
      col = (col.array() - lo) / range;
    } else {
      col.setZero();
    }
  }
  return f;
}

ResidualGraph remove_node(const Graph& g, NodeId v) {
  const std::size_t n = g.node_count();
  if (v < 0 || static_cast<std::size_t>(v) >= n) {
    throw IndexError("cannot remove node " + std::to_string(v) + " from graph with " +
                     std::to_string(n) + " nodes");
  }
  ResidualGraph r{Graph(n - 1), std::vector<NodeId>(n, -1), {}};
  r.new_to_old.reserve(n - 1);
  for (std::size_t u = 0; u < n; ++u) {
    if (static_cast<NodeId>(u) == v) continue;
    r.old_to_new[u] = static_cast<NodeId>(r.new_to_old.size());
    r.new_to_old.push_back(static_cast<NodeId>(u));
  }
  for (const Edge& e : g.edges()) {
    if (e.u == v || e.v == v) continue;
    r.graph.add_edge(r.old_to_new[e.u], r.old_to_new[e.v], e.weight);
  }
  return r;
}

Matrix adjacency_matrix(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Matrix a = Matrix::Zero(n, n);
  for (const Edge& e : g.edges()) {
    a(e.u, e.v) = e.weight;
    a(e.v, e.u) = e.weight;
  }
  return a;
}

}  // namespace bilgr
