#include "bilgr/graph_learning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "bilgr/error.hpp"

namespace bilgr {

DistanceMatrix distance_matrix(const Matrix& embeddings) {
  const auto n = embeddings.rows();
  if (n < 2) throw DomainError("distance matrix needs at least 2 nodes");
  // ||e_i||^2 + ||e_j||^2 - 2 e_i.e_j cancels badly for near-equal rows; go direct.
  Matrix z = Matrix::Zero(n, n);
  const Matrix et = embeddings.transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d = (et.col(i) - et.col(j)).squaredNorm();
      z(i, j) = d;
      z(j, i) = d;
    }
  }
  return {std::move(z)};
}

DistanceMatrix normalize_mean(const DistanceMatrix& z) {
  const auto n = z.values.rows();
  if (n < 2) return z;
  const double mean = z.values.sum() / static_cast<double>(n * (n - 1));
  if (!(mean > 0.0)) return z;
  return {z.values / mean};
}

void GraphLearnConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ParameterError("graph learning needs alpha > 0 and beta > 0");
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (!(tolerance >= 0.0) || !(kkt_tolerance >= 0.0)) throw ParameterError("tolerances must be >= 0");
  if (!(step_size > 0.0)) throw ParameterError("step_size must be positive");
  if (!(sparsify_ratio >= 0.0 && sparsify_ratio < 1.0)) throw ParameterError("sparsify_ratio must lie in [0, 1)");
}

double graph_learning_objective(const Matrix& a, const Matrix& z, double alpha, double beta) {
  const Vector d = a.rowwise().sum();
  if ((d.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
  return a.cwiseProduct(z).sum() - alpha * d.array().log().sum() + beta * a.squaredNorm();
}

Matrix graph_learning_gradient(const Matrix& a, const Matrix& z, double alpha, double beta) {
  const Vector inv_d = a.rowwise().sum().cwiseInverse();
  // inv_d(i) + inv_d(j) as one term keeps g exactly symmetric
  const auto n = a.rows();
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      g(i, j) = 2.0 * z(i, j) + 4.0 * beta * a(i, j) - alpha * (inv_d(i) + inv_d(j));
  g.diagonal().setZero();
  return g;
}

double kkt_residual(const Matrix& a, const Matrix& gradient) {
  double r = 0.0;
  const auto n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double g = gradient(i, j);
      r = std::max(r, a(i, j) > 0.0 ? std::abs(g) : std::max(0.0, -g));
    }
  }
  return r;
}

LearnedAdjacency learn_graph_map(const DistanceMatrix& zm, const GraphLearnConfig& cfg) {
  cfg.validate();
  const auto n = zm.values.rows();
  if (n < 2 || zm.values.cols() != n) throw ContractError("distance matrix must be square with N >= 2");
  if ((zm.values.array() < 0.0).any() || !zm.values.allFinite())
    throw ContractError("distances must be finite and nonnegative");
  // A is symmetric, so only the symmetric part of Z matters.
  const Matrix z = 0.5 * (zm.values + zm.values.transpose());

  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-20;
  constexpr double kInitEpsilon = 1.0;

  const double mean_z = z.sum() / static_cast<double>(n * (n - 1));
  const double w0 = cfg.alpha / (static_cast<double>(n) * mean_z + kInitEpsilon);

  LearnedAdjacency out;
  Matrix w = Matrix::Constant(n, n, w0);
  w.diagonal().setZero();
  double f = graph_learning_objective(w, z, cfg.alpha, cfg.beta);
  Matrix g = graph_learning_gradient(w, z, cfg.alpha, cfg.beta);
  double kkt = kkt_residual(w, g);
  out.trace.push_back({0, f, kkt, 0.0});

  double step = cfg.step_size;
  Matrix trial(n, n);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (cfg.kkt_tolerance > 0.0 && kkt <= cfg.kkt_tolerance) {
      out.converged = true;
      break;
    }
    double t = step;
    double f_new = std::numeric_limits<double>::infinity();
    bool any_finite = false;
    bool accepted = false;
    while (t >= kMinStep) {
      trial = (w - t * g).cwiseMax(0.0);
      trial.diagonal().setZero();
      f_new = graph_learning_objective(trial, z, cfg.alpha, cfg.beta);
      if (std::isfinite(f_new)) {
        any_finite = true;
        // Halved because the full matrix counts each free weight twice.
        const double decrease = 0.5 * g.cwiseProduct(trial - w).sum();
        if (f_new <= f + kArmijo * decrease && f_new <= f) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!any_finite) {
        std::ostringstream msg;
        msg << "graph learning: every trial step drove a row sum to zero at iteration " << it
            << " (objective " << f << ", KKT residual " << kkt << ")";
        throw NumericError(msg.str());
      }
      out.warnings.push_back("line search stalled at iteration " + std::to_string(it));
      break;
    }

    const Matrix s = trial - w;
    Matrix g_new = graph_learning_gradient(trial, z, cfg.alpha, cfg.beta);
    const double sy = 0.5 * s.cwiseProduct(g_new - g).sum();
    const double ss = 0.5 * s.squaredNorm();
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : std::min(2.0 * t, 1e12);

    const double rel_change = std::abs(f - f_new) / std::max(1.0, std::abs(f));
    w.swap(trial);
    g.swap(g_new);
    f = f_new;
    kkt = kkt_residual(w, g);
    out.iterations = it;
    out.trace.push_back({it, f, kkt, t});

    if (cfg.kkt_tolerance > 0.0 && kkt <= cfg.kkt_tolerance) {
      out.converged = true;
      break;
    }
    if (cfg.tolerance > 0.0 && rel_change < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }

  out.weights = std::move(w);
  out.objective = f;
  out.kkt_residual = kkt;
  return out;
}

SparsifiedGraph sparsify_to_graph(const LearnedAdjacency& a, double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ParameterError("sparsify ratio must lie in [0, 1)");
  const Matrix& w = a.weights;
  const auto n = w.rows();
  const double cut = ratio * (n > 0 ? w.maxCoeff() : 0.0);
  SparsifiedGraph out{Graph(static_cast<std::size_t>(n)), 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = 0.5 * (w(i, j) + w(j, i));
      if (v > 0.0 && v >= cut) out.graph.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(j), v);
    }
  }
  if (out.graph.edge_count() == 0) throw NumericError("sparsification removed every edge; graph estimate is degenerate");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.graph.degree(static_cast<NodeId>(i)) == 0) ++out.isolated;
  }
  return out;
}

void write_solver_trace_csv(const LearnedAdjacency& a, std::ostream& out) {
  out << "iter,objective,kkt_residual,step\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : a.trace) out << r.iter << ',' << r.objective << ',' << r.kkt_residual << ',' << r.step << '\n';
}

}  // namespace bilgr
