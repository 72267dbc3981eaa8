#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "bilgr/graph.hpp"

namespace bilgr {

/// Symmetric, nonnegative, zero diagonal.
struct DistanceMatrix {
  Matrix values;
};

/// Z_ij = ||e_i - e_j||^2 over the rows of `embeddings`. Needs >= 2 rows.
DistanceMatrix distance_matrix(const Matrix& embeddings);

/// Rescales Z so its mean off-diagonal entry is 1 (unchanged if all zero).
DistanceMatrix normalize_mean(const DistanceMatrix& z);

struct GraphLearnConfig {
  double alpha = 1.0;  // log-degree barrier weight
  double beta = 0.5;   // squared Frobenius weight
  int max_iters = 5000;
  double tolerance = 0.0;        // stop on relative objective change below this; 0 disables
  double kkt_tolerance = 1e-7;   // stop once the KKT residual is this small; 0 disables
  double step_size = 1.0;        // first trial step of the line search
  double sparsify_ratio = 0.05;  // used by sparsify_to_graph in the pipeline

  void validate() const;
};

struct SolverTraceRow {
  int iter;
  double objective;
  double kkt_residual;
  double step;
};

struct LearnedAdjacency {
  Matrix weights;  // symmetric, nonnegative, zero diagonal
  double objective = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  std::vector<SolverTraceRow> trace;  // row 0 is the starting point
  std::vector<std::string> warnings;
};

/// f(A) = sum_ij A_ij Z_ij - alpha sum_i log(sum_j A_ij) + beta sum_ij A_ij^2
/// over the full symmetric matrix; +infinity if some row sum is <= 0.
double graph_learning_objective(const Matrix& a, const Matrix& z, double alpha, double beta);

/// Gradient of f with respect to the free upper-triangular weights
/// (w_ij = A_ij = A_ji), stored symmetrically with zero diagonal:
///   g_ij = 2 Z_ij - alpha (1/d_i + 1/d_j) + 4 beta w_ij.
Matrix graph_learning_gradient(const Matrix& a, const Matrix& z, double alpha, double beta);

/// max over i<j of |g_ij| where w_ij > 0 and max(0, -g_ij) where w_ij = 0.
double kkt_residual(const Matrix& a, const Matrix& gradient);

/// Minimizes f by projected gradient descent (clamp to >= 0) on the
/// upper-triangular weights, Barzilai–Borwein trial steps and Armijo
/// backtracking. Accepted iterates never increase f. Throws NumericError if
/// no trial step keeps every row sum positive.
LearnedAdjacency learn_graph_map(const DistanceMatrix& z, const GraphLearnConfig& cfg);

struct SparsifiedGraph {
  Graph graph;
  std::size_t isolated = 0;
};

/// Keeps entries >= ratio * max(A) (and > 0) as weighted edges. Throws
/// NumericError if nothing survives.
SparsifiedGraph sparsify_to_graph(const LearnedAdjacency& a, double ratio);

/// CSV: iter,objective,kkt_residual,step
void write_solver_trace_csv(const LearnedAdjacency& a, std::ostream& out);

}  // namespace bilgr
