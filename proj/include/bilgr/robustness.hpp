#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bilgr/graph.hpp"
#include "bilgr/linalg.hpp"

namespace bilgr {

/// Criticality class: 1 = high, 2 = medium, 3 = low.
using ClassLabel = int;
inline constexpr int kClassCount = 3;

/// L = D - A with D the weighted degree diagonal.
Matrix laplacian_matrix(const Graph& g);

/// 2/(N-1) * sum of 1/lambda over the nonzero Laplacian eigenvalues. The c
/// zero eigenvalues (one per connected component) are dropped, so a
/// disconnected graph is handled without infinities. For a connected graph
/// the value equals the mean effective resistance over all node pairs.
/// Throws DomainError for N < 2.
double effective_graph_resistance(const Graph& g);

/// Pairwise effective resistances from the Moore–Penrose pseudoinverse of the
/// Laplacian, r_ij = L+_ii + L+_jj - 2 L+_ij. Uses a different eigensolver
/// from effective_graph_resistance so the two can check each other.
class ResistanceOracle {
 public:
  explicit ResistanceOracle(const Graph& g);

  /// +infinity when i and j are in different components.
  double resistance(NodeId i, NodeId j) const;

  /// Mean of r_ij over all N(N-1)/2 pairs; +infinity if disconnected.
  double mean_pairwise_resistance() const;

  const Matrix& pseudoinverse() const { return pinv_; }

 private:
  Matrix pinv_;
  std::vector<NodeId> component_;
};

double pairwise_effective_resistance(const Graph& g, NodeId i, NodeId j);

struct CriticalityOptions {
  unsigned threads = 1;
};

struct CriticalityResult {
  double base_resistance = 0.0;    // R_g of the intact graph
  std::vector<double> raw_delta;   // R_g(G - n) - R_g(G)
  std::vector<double> score;       // min-max of raw_delta; 0 = largest drop in R_g
  std::vector<ClassLabel> label;
  bool degenerate = false;         // every node had the same impact
  std::vector<std::string> warnings;
};

/// Exhaustive node-removal oracle. Each removal is an independent dense
/// eigenproblem; with options.threads > 1 they are spread over workers and
/// the result does not depend on scheduling. Requires N >= 3.
CriticalityResult criticality_scores(const Graph& g, const CriticalityOptions& options = {});

/// [0, 0.3) -> 1, [0.3, 0.7) -> 2, [0.7, 1] -> 3. DomainError outside [0, 1].
ClassLabel label_for_score(double score);
std::vector<ClassLabel> label_nodes(std::span<const double> scores);

/// CSV with header "node_id,raw_delta,score,label".
void write_criticality_csv(const CriticalityResult& r, std::ostream& out);
CriticalityResult read_criticality_csv(std::istream& in);

}  // namespace bilgr
