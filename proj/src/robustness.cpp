#include "bilgr/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <thread>

#include <Eigen/Eigenvalues>

#include "bilgr/error.hpp"
#include "text_util.hpp"

namespace bilgr {

Matrix laplacian_matrix(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Matrix l = Matrix::Zero(n, n);
  for (const Edge& e : g.edges()) {
    l(e.u, e.v) -= e.weight;
    l(e.v, e.u) -= e.weight;
    l(e.u, e.u) += e.weight;
    l(e.v, e.v) += e.weight;
  }
  return l;
}

double effective_graph_resistance(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n < 2) throw DomainError("effective graph resistance needs at least 2 nodes");

  const Spectrum spec = symmetric_eigenvalues(laplacian_matrix(g));
  const std::size_t c = g.component_count();
  const auto& ev = spec.eigenvalues;
  // The c smallest eigenvalues are the component null space; the next one must not be.
  if (spec.zero_count() != c) {
    throw NumericError("Laplacian spectrum has " + std::to_string(spec.zero_count()) +
                       " near-zero eigenvalues but the graph has " + std::to_string(c) +
                       " components (smallest nonzero " + std::to_string(c < n ? ev[c] : 0.0) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = c; i < n; ++i) sum += 1.0 / ev[i];
  return 2.0 / static_cast<double>(n - 1) * sum;
}

ResistanceOracle::ResistanceOracle(const Graph& g) : component_(g.component_ids()) {
  const Matrix l = laplacian_matrix(g);
  Eigen::SelfAdjointEigenSolver<Matrix> es(l);
  if (es.info() != Eigen::Success) throw NumericError("pseudoinverse eigendecomposition failed");
  const Vector& lambda = es.eigenvalues();
  const double tol =
      kDefaultRelativeZeroTolerance * (lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0);
  Vector inv = Vector::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > tol) inv[i] = 1.0 / lambda[i];
  }
  pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double ResistanceOracle::resistance(NodeId i, NodeId j) const {
  const auto n = static_cast<NodeId>(component_.size());
  if (i < 0 || j < 0 || i >= n || j >= n) throw IndexError("resistance query out of range");
  if (component_[i] != component_[j]) return std::numeric_limits<double>::infinity();
  return pinv_(i, i) + pinv_(j, j) - 2.0 * pinv_(i, j);
}

double ResistanceOracle::mean_pairwise_resistance() const {
  const auto n = static_cast<NodeId>(component_.size());
  double sum = 0.0;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) sum += resistance(i, j);
  }
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double pairwise_effective_resistance(const Graph& g, NodeId i, NodeId j) {
  return ResistanceOracle(g).resistance(i, j);
}

ClassLabel label_for_score(double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw DomainError("criticality score " + std::to_string(score) + " outside [0, 1]");
  }
  if (score < 0.3) return 1;
  if (score < 0.7) return 2;
  return 3;
}

std::vector<ClassLabel> label_nodes(std::span<const double> scores) {
  std::vector<ClassLabel> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(label_for_score(s));
  return out;
}

CriticalityResult criticality_scores(const Graph& g, const CriticalityOptions& options) {
  const std::size_t n = g.node_count();
  if (n < 3) throw DomainError("criticality scores need at least 3 nodes");

  CriticalityResult r;
  r.base_resistance = effective_graph_resistance(g);
  r.raw_delta.assign(n, 0.0);

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t v = first; v < n; v += stride) {
      const ResidualGraph residual = remove_node(g, static_cast<NodeId>(v));
      r.raw_delta[v] = effective_graph_resistance(residual.graph) - r.base_resistance;
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            work(t, threads);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(r.raw_delta.begin(), r.raw_delta.end());
  const double lo = *lo_it, hi = *hi_it;
  const double spread_floor = 1e-10 * std::max(1.0, std::abs(r.base_resistance));
  r.score.resize(n);
  if (hi - lo <= spread_floor) {
    r.degenerate = true;
    r.warnings.push_back("all nodes have identical removal impact; scores set to 0.5 (class 2)");
    std::fill(r.score.begin(), r.score.end(), 0.5);
  } else {
    for (std::size_t v = 0; v < n; ++v) {
      r.score[v] = std::clamp((r.raw_delta[v] - lo) / (hi - lo), 0.0, 1.0);
    }
  }
  r.label = label_nodes(r.score);
  return r;
}

void write_criticality_csv(const CriticalityResult& r, std::ostream& out) {
  out << "node_id,raw_delta,score,label\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t v = 0; v < r.raw_delta.size(); ++v) {
    out << v << ',' << r.raw_delta[v] << ',' << r.score[v] << ',' << r.label[v] << '\n';
  }
}

CriticalityResult read_criticality_csv(std::istream& in) {
  CriticalityResult r;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (header) {
      if (detail::split(line, ',') != std::vector<std::string>{"node_id", "raw_delta", "score", "label"}) {
        throw ParseError("expected header node_id,raw_delta,score,label", line_no);
      }
      header = false;
      continue;
    }
    auto f = detail::split(line, ',');
    if (f.size() != 4) throw ParseError("expected 4 fields", line_no);
    const auto id = detail::parse_field<std::size_t>(f[0], line_no, "node id");
    if (id != r.raw_delta.size()) throw ParseError("node ids must be consecutive from 0", line_no);
    r.raw_delta.push_back(detail::parse_field<double>(f[1], line_no, "raw_delta"));
    r.score.push_back(detail::parse_field<double>(f[2], line_no, "score"));
    const auto label = detail::parse_field<int>(f[3], line_no, "label");
    if (label < 1 || label > kClassCount) throw ParseError("label must be 1, 2 or 3", line_no);
    r.label.push_back(label);
  }
  if (header) throw ParseError("empty criticality file");
  return r;
}

}  // namespace bilgr
