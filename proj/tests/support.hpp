#pragma once

#include <cstdint>
#include <vector>

#include "bilgr/graph.hpp"
#include "bilgr/graph_learning.hpp"
#include "bilgr/graphsage.hpp"
#include "bilgr/robustness.hpp"
#include "bilgr/rng.hpp"

namespace bilgr::testing {

inline Graph path_graph(std::size_t n) {
  Graph g(n);
  for (std::size_t i = 0; i + 1 < n; ++i) g.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(i + 1));
  return g;
}

inline Graph complete_graph(std::size_t n) {
  Graph g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(j));
  return g;
}

// Hub 0 plus n-1 leaves.
inline Graph star_graph(std::size_t n) {
  Graph g(n);
  for (std::size_t i = 1; i < n; ++i) g.add_edge(0, static_cast<NodeId>(i));
  return g;
}

// G(n, p) with weights in [0.5, 2) when weighted, else unit.
inline Graph random_graph(std::size_t n, double p, std::uint64_t seed, bool weighted = false) {
  Rng rng(seed);
  Graph g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) {
        g.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(j), weighted ? 0.5 + 1.5 * rng.uniform() : 1.0);
      }
  return g;
}

// Random spanning tree plus G(n, p) extras, so the result is connected.
inline Graph random_connected_graph(std::size_t n, double p, std::uint64_t seed, bool weighted = false) {
  Rng rng(seed);
  Graph g(n);
  auto w = [&] { return weighted ? 0.5 + 1.5 * rng.uniform() : 1.0; };
  for (std::size_t i = 1; i < n; ++i) g.add_edge(static_cast<NodeId>(rng.below(i)), static_cast<NodeId>(i), w());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!g.has_edge(static_cast<NodeId>(i), static_cast<NodeId>(j)) && rng.bernoulli(p)) {
        g.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(j), w());
      }
  return g;
}

// Same graph with node v renamed perm[v].
inline Graph permuted(const Graph& g, const std::vector<NodeId>& perm) {
  Graph out(g.node_count());
  for (const auto& e : g.edges()) out.add_edge(perm[e.u], perm[e.v], e.weight);
  return out;
}

inline std::vector<NodeId> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<NodeId> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<NodeId>(i);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

// Spectral graph resistance rebuilt from pairwise resistances. For a
// component c with n_c nodes, sum of 1/lambda over its nonzero spectrum is
// (1/n_c) * sum of r_ij over its pairs; pairs across components add nothing.
inline double brute_force_resistance(const Graph& g) {
  const ResistanceOracle oracle(g);
  const auto comp = g.component_ids();
  const auto n = static_cast<NodeId>(g.node_count());
  std::vector<double> pair_sum(n, 0.0), size(n, 0.0);
  for (NodeId i = 0; i < n; ++i) size[comp[i]] += 1.0;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (comp[i] == comp[j]) pair_sum[comp[i]] += oracle.resistance(i, j);
  double total = 0.0;
  for (NodeId c = 0; c < n; ++c)
    if (size[c] > 0.0) total += pair_sum[c] / size[c];
  return 2.0 * total / static_cast<double>(n - 1);
}

inline DistanceMatrix random_distances(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix e(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < 3; ++c) e(i, c) = scale * rng.uniform();
  return distance_matrix(e);
}

// Exact cyclic coordinate descent: each free weight is set to the root of its
// one-dimensional derivative 2Z + 4bw - a/(d_i + w) - a/(d_j + w), clamped at 0.
inline Matrix coordinate_descent(const Matrix& z, double alpha, double beta, int sweeps) {
  const auto n = z.rows();
  Matrix w = Matrix::Constant(n, n, 1.0);
  w.diagonal().setZero();
  for (int s = 0; s < sweeps; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double ri = w.row(i).sum() - w(i, j);
        const double rj = w.row(j).sum() - w(i, j);
        auto deriv = [&](double x) {
          return 2.0 * z(i, j) + 4.0 * beta * x - alpha / (ri + x) - alpha / (rj + x);
        };
        double lo = 0.0, hi = 1.0;
        if (ri > 0.0 && rj > 0.0 && deriv(0.0) >= 0.0) {
          w(i, j) = w(j, i) = 0.0;
          continue;
        }
        while (deriv(hi) < 0.0) hi *= 2.0;
        for (int k = 0; k < 200; ++k) {
          const double mid = 0.5 * (lo + hi);
          (deriv(mid) < 0.0 ? lo : hi) = mid;
        }
        w(i, j) = w(j, i) = 0.5 * (lo + hi);
      }
    }
  }
  return w;
}

inline sage::ModelParams biased_model(std::uint64_t seed) {
  sage::ModelParams p = sage::ModelParams::initialize(2, RngSeed{seed});
  Rng rng(seed + 100);
  // Nonzero biases keep units off the relu kink at zero input.
  for (auto& l : p.aggregators) l.bias = Vector::NullaryExpr(l.bias.size(), [&] { return 0.1 + 0.2 * rng.uniform(); });
  p.hidden.bias = Vector::NullaryExpr(p.hidden.bias.size(), [&] { return 0.1 + 0.2 * rng.uniform(); });
  return p;
}

}  // namespace bilgr::testing
