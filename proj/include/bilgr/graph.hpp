#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bilgr/rng.hpp"

namespace bilgr {

using NodeId = std::int32_t;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Neighbor {
  NodeId node;
  double weight;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct Edge {
  NodeId u;
  NodeId v;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted simple graph on dense node ids 0..N-1.
///
/// Adjacency lists are kept sorted by neighbor id, so iteration order (and
/// everything computed from it) depends only on the edge set.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t node_count);
  Graph(std::size_t node_count, std::span<const Edge> edges);

  /// Inserts {u, v} with weight w. Throws ParameterError on self-loops,
  /// duplicates, or non-positive / non-finite weights; IndexError on bad ids.
  void add_edge(NodeId u, NodeId v, double weight = 1.0);

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  std::span<const Neighbor> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }
  double weighted_degree(NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const;
  double edge_weight(NodeId u, NodeId v) const;  // 0 when absent

  /// Every edge once, with u < v, in lexicographic order.
  std::vector<Edge> edges() const;

  /// Connected-component id per node, ids assigned in order of lowest member.
  std::vector<NodeId> component_ids() const;
  std::size_t component_count() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  void check_node(NodeId v) const;

  std::vector<std::vector<Neighbor>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Holme–Kim growth: each new node attaches m edges, preferentially by
/// degree; after the first attachment, with probability p the next edge
/// closes a triangle through a random neighbor of the last target.
/// Starts from m isolated seed nodes, all joined by node m. Unit weights.
Graph generate_power_law_cluster(std::size_t n, std::size_t m, double p, RngSeed seed);

struct NoisyGraph {
  Graph graph;
  std::size_t added = 0;
  std::size_t skipped = 0;  // selected nodes already adjacent to everyone
};

/// Picks ceil(node_fraction * N) distinct nodes and gives each one new
/// unit-weight edge to a uniformly random non-neighbor.
NoisyGraph add_noise_links(const Graph& g, double node_fraction, RngSeed seed);

/// N x 2 matrix: [weighted degree, mean weighted degree of neighbors].
struct NodeFeatures {
  Matrix values;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
};

NodeFeatures raw_features(const Graph& g);

/// raw_features followed by per-column min-max scaling into [0, 1]; a
/// zero-range column maps to 0.
NodeFeatures compute_features(const Graph& g);

struct ResidualGraph {
  Graph graph;
  std::vector<NodeId> old_to_new;  // -1 for the removed node
  std::vector<NodeId> new_to_old;
};

ResidualGraph remove_node(const Graph& g, NodeId v);

/// Dense weighted adjacency matrix.
Matrix adjacency_matrix(const Graph& g);

}  // namespace bilgr
