#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "bilgr/error.hpp"
#include "bilgr/graph.hpp"
#include "bilgr/graph_io.hpp"
#include "support.hpp"

using namespace bilgr;
using namespace bilgr::testing;

namespace {

// Mean local clustering by direct triangle counting on the dense adjacency.
double average_clustering(const Graph& g) {
  const Matrix a = adjacency_matrix(g).cwiseSign();
  const auto n = a.rows();
  double total = 0.0;
  for (Eigen::Index v = 0; v < n; ++v) {
    const double k = a.row(v).sum();
    if (k < 2) continue;
    double tri = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) tri += a(v, i) * a(v, j) * a(i, j);
    total += tri / (k * (k - 1) / 2.0);
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST(Graph, AddEdgeRejectsBadInput) {
  Graph g(3);
  g.add_edge(0, 1, 2.0);
  EXPECT_THROW(g.add_edge(1, 1), ParameterError);
  EXPECT_THROW(g.add_edge(1, 0), ParameterError);
  EXPECT_THROW(g.add_edge(0, 2, 0.0), ParameterError);
  EXPECT_THROW(g.add_edge(0, 2, -1.0), ParameterError);
  EXPECT_THROW(g.add_edge(0, 2, NAN), ParameterError);
  EXPECT_THROW(g.add_edge(0, 3), IndexError);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_DOUBLE_EQ(g.edge_weight(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(g.edge_weight(0, 2), 0.0);
}

TEST(Graph, SymmetricAdjacencyAndEdgeCount) {
  const Graph g = random_graph(30, 0.2, 4, true);
  std::size_t entries = 0;
  for (NodeId v = 0; v < 30; ++v) {
    for (const auto& nb : g.neighbors(v)) {
      EXPECT_DOUBLE_EQ(g.edge_weight(nb.node, v), nb.weight);
      ++entries;
    }
  }
  EXPECT_EQ(g.edge_count() * 2, entries);
}

TEST(Graph, ComponentIds) {
  Graph g(5);
  g.add_edge(0, 3);
  g.add_edge(1, 4);
  EXPECT_EQ(g.component_ids(), (std::vector<NodeId>{0, 1, 2, 0, 1}));
  EXPECT_EQ(g.component_count(), 3u);
}

TEST(Generator, ThreeNodeTree) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Graph g = generate_power_law_cluster(3, 1, 0.0, RngSeed{s});
    EXPECT_EQ(g.edge_count(), 2u);
    EXPECT_EQ(g.component_count(), 1u);
  }
}

TEST(Generator, TreeEdgeCountLarge) {
  const Graph g = generate_power_law_cluster(5000, 1, 0.1, RngSeed{3});
  EXPECT_EQ(g.edge_count(), 4999u);
  EXPECT_EQ(g.component_count(), 1u);
}

TEST(Generator, AttachCountAndConnectivity) {
  const Graph g = generate_power_law_cluster(400, 3, 0.5, RngSeed{9});
  EXPECT_EQ(g.edge_count(), 3u * (400 - 3));
  EXPECT_EQ(g.component_count(), 1u);
}

TEST(Generator, Deterministic) {
  EXPECT_EQ(generate_power_law_cluster(300, 2, 0.3, RngSeed{5}), generate_power_law_cluster(300, 2, 0.3, RngSeed{5}));
  EXPECT_NE(generate_power_law_cluster(300, 2, 0.3, RngSeed{5}), generate_power_law_cluster(300, 2, 0.3, RngSeed{6}));
}

TEST(Generator, TriadClosureRaisesClustering) {
  const Graph closed = generate_power_law_cluster(1000, 2, 0.3, RngSeed{42});
  const Graph open = generate_power_law_cluster(1000, 2, 0.0, RngSeed{42});
  EXPECT_GT(average_clustering(closed), average_clustering(open));
}

TEST(Generator, HeavyTail) {
  const Graph g = generate_power_law_cluster(1000, 2, 0.3, RngSeed{42});
  std::size_t max_deg = 0;
  for (NodeId v = 0; v < 1000; ++v) max_deg = std::max(max_deg, g.degree(v));
  // mean degree is ~4; preferential attachment grows hubs far beyond it
  EXPECT_GT(max_deg, 40u);
}

TEST(Generator, BadParameters) {
  EXPECT_THROW(generate_power_law_cluster(1, 1, 0.1, RngSeed{1}), ParameterError);
  EXPECT_THROW(generate_power_law_cluster(5, 0, 0.1, RngSeed{1}), ParameterError);
  EXPECT_THROW(generate_power_law_cluster(3, 3, 0.1, RngSeed{1}), ParameterError);
  EXPECT_THROW(generate_power_law_cluster(10, 1, 1.5, RngSeed{1}), ParameterError);
  EXPECT_THROW(generate_power_law_cluster(10, 1, -0.1, RngSeed{1}), ParameterError);
}

TEST(Noise, CompleteGraphSkips) {
  const Graph p2 = path_graph(2);
  const NoisyGraph r = add_noise_links(p2, 0.5, RngSeed{1});
  EXPECT_EQ(r.graph, p2);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.added, 0u);
}

TEST(Noise, AddsOneLinkPerSelectedNode) {
  const Graph g = generate_power_law_cluster(5000, 1, 0.1, RngSeed{1});
  for (double frac : {0.02, 0.04}) {
    const NoisyGraph r = add_noise_links(g, frac, RngSeed{2});
    const auto want = static_cast<std::size_t>(std::ceil(frac * 5000));
    EXPECT_EQ(r.added + r.skipped, want);
    // two selected nodes may pick each other; at most a handful collide
    EXPECT_GE(r.graph.edge_count(), g.edge_count() + want - 5);
    EXPECT_EQ(r.graph.edge_count(), g.edge_count() + r.added);
  }
}

TEST(Noise, PreservesOriginalEdges) {
  const Graph g = random_graph(60, 0.1, 3);
  const NoisyGraph r = add_noise_links(g, 0.3, RngSeed{4});
  EXPECT_GE(r.graph.edge_count(), g.edge_count());
  for (const auto& e : g.edges()) EXPECT_DOUBLE_EQ(r.graph.edge_weight(e.u, e.v), e.weight);
  for (const auto& e : r.graph.edges()) {
    if (!g.has_edge(e.u, e.v)) EXPECT_DOUBLE_EQ(e.weight, 1.0);
  }
  EXPECT_THROW(add_noise_links(g, 0.0, RngSeed{1}), ParameterError);
  EXPECT_THROW(add_noise_links(g, 1.5, RngSeed{1}), ParameterError);
}

TEST(Features, StarRaw) {
  const NodeFeatures f = raw_features(star_graph(5));
  EXPECT_DOUBLE_EQ(f.values(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(f.values(0, 1), 1.0);
  for (int v = 1; v < 5; ++v) {
    EXPECT_DOUBLE_EQ(f.values(v, 0), 1.0);
    EXPECT_DOUBLE_EQ(f.values(v, 1), 4.0);
  }
}

TEST(Features, TriangleScalesToZero) {
  const Graph k3 = complete_graph(3);
  const NodeFeatures raw = raw_features(k3);
  EXPECT_TRUE(raw.values.isApprox(Matrix::Constant(3, 2, 2.0)));
  EXPECT_TRUE(compute_features(k3).values.isZero(0.0));
}

TEST(Features, MatchAdjacencyProducts) {
  const Graph g = random_graph(40, 0.15, 8, true);
  const Matrix a = adjacency_matrix(g);
  const Vector wdeg = a.rowwise().sum();
  const Matrix ind = a.cwiseSign();
  const Vector cnt = ind.rowwise().sum();
  const Vector nsum = ind * wdeg;
  const NodeFeatures f = raw_features(g);
  for (Eigen::Index v = 0; v < 40; ++v) {
    EXPECT_NEAR(f.values(v, 0), wdeg[v], 1e-12);
    EXPECT_NEAR(f.values(v, 1), cnt[v] > 0 ? nsum[v] / cnt[v] : 0.0, 1e-12);
  }
  EXPECT_NEAR(f.values.col(0).sum(), a.sum(), 1e-9);
  const NodeFeatures s = compute_features(g);
  EXPECT_GE(s.values.minCoeff(), 0.0);
  EXPECT_LE(s.values.maxCoeff(), 1.0);
}

TEST(Features, UnitWeightDegree) {
  const Graph g = generate_power_law_cluster(100, 2, 0.2, RngSeed{1});
  const NodeFeatures f = raw_features(g);
  for (NodeId v = 0; v < 100; ++v) EXPECT_DOUBLE_EQ(f.values(v, 0), static_cast<double>(g.degree(v)));
}

TEST(RemoveNode, Examples) {
  const ResidualGraph k3 = remove_node(complete_graph(3), 1);
  EXPECT_EQ(k3.graph, path_graph(2));
  EXPECT_EQ(k3.old_to_new, (std::vector<NodeId>{0, -1, 1}));

  const ResidualGraph hub = remove_node(star_graph(5), 0);
  EXPECT_EQ(hub.graph.node_count(), 4u);
  EXPECT_EQ(hub.graph.edge_count(), 0u);

  const ResidualGraph leaf = remove_node(star_graph(5), 4);
  EXPECT_EQ(leaf.graph, star_graph(4));

  EXPECT_THROW(remove_node(star_graph(5), 5), IndexError);
  EXPECT_THROW(remove_node(star_graph(5), -1), IndexError);
}

TEST(RemoveNode, EdgeCountProperty) {
  const Graph g = random_graph(50, 0.1, 12, true);
  for (NodeId v = 0; v < 50; v += 7) {
    const ResidualGraph r = remove_node(g, v);
    EXPECT_EQ(r.graph.edge_count(), g.edge_count() - g.degree(v));
    for (const auto& e : r.graph.edges()) {
      EXPECT_DOUBLE_EQ(g.edge_weight(r.new_to_old[e.u], r.new_to_old[e.v]), e.weight);
    }
  }
}

TEST(EdgeListIo, RoundTrip) {
  const Graph g = random_graph(40, 0.2, 2, true);
  std::stringstream s;
  write_edge_list(g, s);
  EXPECT_EQ(read_edge_list(s), g);

  const Graph h = generate_power_law_cluster(200, 2, 0.3, RngSeed{4});
  const auto path = std::filesystem::temp_directory_path() / "bilgr_roundtrip.edges";
  save_edge_list(h, path);
  EXPECT_EQ(load_edge_list(path), h);
  std::filesystem::remove(path);
}

TEST(EdgeListIo, RejectsSelfLoop) {
  std::istringstream s("#nodes 3\n0 0 1.0\n");
  try {
    read_edge_list(s);
    FAIL() << "self-loop accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(EdgeListIo, MissingWeightReportsLine) {
  std::istringstream s("#nodes 3\n0 1 1.0\n1 2\n");
  try {
    read_edge_list(s);
    FAIL() << "short line accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(EdgeListIo, MissingHeader) {
  std::istringstream s("0 1 1.0\n");
  EXPECT_THROW(read_edge_list(s), ParseError);
}

TEST(GraphJson, RoundTrip) {
  const Graph g = random_graph(20, 0.3, 6, true);
  EXPECT_EQ(graph_from_json(graph_to_json(g)), g);
}
