#include "bilgr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bilgr/error.hpp"

namespace bilgr {

std::size_t Spectrum::zero_count() const {
  return static_cast<std::size_t>(std::count_if(eigenvalues.begin(), eigenvalues.end(), [&](double l) {
    return std::abs(l) <= zero_tolerance;
  }));
}

namespace {

constexpr int kMaxQlSweepsPerEigenvalue = 60;

void check_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw ContractError("eigensolver needs a square matrix, got " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) {
        throw ContractError("matrix is not symmetric at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
      }
    }
  }
}

// Row-major dense copy; only the lower triangle is read or written below.
struct Work {
  std::size_t n;
  std::vector<double> a;

  double* row(std::size_t i) { return a.data() + i * n; }
  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
};

Work to_work(const Matrix& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  Work w{n, std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) w.at(i, j) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return w;
}

// Reduces the lower triangle of w to tridiagonal form: diag in d, sub-diagonal
// in e (e[i] couples i and i+1, e[n-1] = 0). When tau is non-null the
// Householder vector of step k is left in column k below the diagonal and its
// scale in tau[k].
void tridiagonalize(Work& w, std::vector<double>& d, std::vector<double>& e, std::vector<double>* tau) {
  const std::size_t n = w.n;
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  if (tau) tau->assign(n, 0.0);
  std::vector<double> v(n), p(n);

  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    double norm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) norm2 += w.at(i, k) * w.at(i, k);
    d[k] = w.at(k, k);
    if (norm2 == 0.0) continue;

    const double x0 = w.at(k + 1, k);
    const double alpha = x0 > 0 ? -std::sqrt(norm2) : std::sqrt(norm2);
    double* vv = v.data() + k + 1;
    for (std::size_t i = 0; i < m; ++i) vv[i] = w.at(k + 1 + i, k);
    vv[0] -= alpha;
    const double vnorm2 = norm2 - x0 * x0 + vv[0] * vv[0];
    e[k] = alpha;
    if (vnorm2 == 0.0) continue;
    const double t = 2.0 / vnorm2;

    // p = t * A22 v using the lower triangle only.
    double* pp = p.data() + k + 1;
    std::fill(pp, pp + m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* r = w.row(k + 1 + i) + k + 1;
      const double vi = vv[i];
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      std::size_t j = 0;
      for (; j + 4 <= i; j += 4) {
        s0 += r[j] * vv[j];
        s1 += r[j + 1] * vv[j + 1];
        s2 += r[j + 2] * vv[j + 2];
        s3 += r[j + 3] * vv[j + 3];
      }
      for (; j < i; ++j) s0 += r[j] * vv[j];
      for (j = 0; j < i; ++j) pp[j] += r[j] * vi;
      pp[i] += (s0 + s1) + (s2 + s3) + r[i] * vi;
    }
    double vp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      pp[i] *= t;
      vp += vv[i] * pp[i];
    }
    const double half = 0.5 * t * vp;
    for (std::size_t i = 0; i < m; ++i) pp[i] -= half * vv[i];

    // A22 -= v w^T + w v^T
    for (std::size_t i = 0; i < m; ++i) {
      double* r = w.row(k + 1 + i) + k + 1;
      const double vi = vv[i], wi = pp[i];
      for (std::size_t j = 0; j <= i; ++j) r[j] -= vi * pp[j] + wi * vv[j];
    }

    if (tau) {
      for (std::size_t i = 0; i < m; ++i) w.at(k + 1 + i, k) = vv[i];
      (*tau)[k] = t;
    }
  }
  if (n >= 2) {
    d[n - 2] = w.at(n - 2, n - 2);
    e[n - 2] = w.at(n - 1, n - 2);
  }
  if (n >= 1) d[n - 1] = w.at(n - 1, n - 1);
}

// Implicit-shift QL on a symmetric tridiagonal matrix. If z is non-null its
// columns are rotated along (z is n x n, column-major Eigen storage).
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, Matrix* z) {
  const auto n = static_cast<std::ptrdiff_t>(d.size());
  constexpr double eps = std::numeric_limits<double>::epsilon();
  // The relative test alone never fires inside a cluster of (near-)zero
  // eigenvalues, which Laplacians of disconnected graphs always have.
  double norm = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) norm = std::max(norm, std::abs(d[i]) + std::abs(e[i]));
  const double floor = eps * norm;
  for (std::ptrdiff_t l = 0; l < n; ++l) {
    int sweeps = 0;
    std::ptrdiff_t m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd || std::abs(e[m]) <= floor) break;
      }
      if (m == l) break;
      if (sweeps++ == kMaxQlSweepsPerEigenvalue) {
        throw NumericError("QL iteration did not converge for eigenvalue " + std::to_string(l));
      }
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (std::ptrdiff_t i = m - 1; i >= l; --i) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        if (z) {
          auto zi = z->col(i);
          auto zi1 = z->col(i + 1);
          for (Eigen::Index k = 0; k < z->rows(); ++k) {
            const double t = zi1[k];
            zi1[k] = s * zi[k] + c * t;
            zi[k] = c * zi[k] - s * t;
          }
        }
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }
}

}  // namespace

Spectrum symmetric_eigenvalues(const Matrix& m, double relative_zero_tolerance) {
  check_symmetric(m);
  Work w = to_work(m);
  std::vector<double> d, e;
  tridiagonalize(w, d, e, nullptr);
  tridiagonal_ql(d, e, nullptr);
  std::sort(d.begin(), d.end());

  Spectrum s;
  double scale = 0.0;
  for (double l : d) scale = std::max(scale, std::abs(l));
  s.zero_tolerance = relative_zero_tolerance * scale;
  s.eigenvalues = std::move(d);
  return s;
}

EigenDecomposition symmetric_eigen_decomposition(const Matrix& m) {
  check_symmetric(m);
  Work w = to_work(m);
  const std::size_t n = w.n;
  std::vector<double> d, e, tau;
  tridiagonalize(w, d, e, &tau);

  // Q = H_0 H_1 ... H_{n-3}, accumulated right to left.
  Matrix q = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t kk = n >= 2 ? n - 2 : 0; kk-- > 0;) {
    if (tau[kk] == 0.0) continue;
    const auto len = static_cast<Eigen::Index>(n - kk - 1);
    Vector v(len);
    for (Eigen::Index i = 0; i < len; ++i) v[i] = w.at(kk + 1 + static_cast<std::size_t>(i), kk);
    auto block = q.bottomRightCorner(len, len);
    Eigen::RowVectorXd vt_block = v.transpose() * block;
    block.noalias() -= tau[kk] * v * vt_block;
  }

  tridiagonal_ql(d, e, &q);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  EigenDecomposition out{Vector(static_cast<Eigen::Index>(n)), Matrix(q.rows(), q.cols())};
  for (std::size_t i = 0; i < n; ++i) {
    out.values[static_cast<Eigen::Index>(i)] = d[order[i]];
    out.vectors.col(static_cast<Eigen::Index>(i)) = q.col(static_cast<Eigen::Index>(order[i]));
  }
  return out;
}

double eigen_residual(const Matrix& m, double lambda, const Vector& v) {
  if (m.cols() != v.size()) throw ContractError("eigen_residual: vector length mismatch");
  return (m * v - lambda * v).norm();
}

}  // namespace bilgr
