#pragma once

#include <cstddef>
#include <vector>

#include "bilgr/graph.hpp"

namespace bilgr {

/// Ascending eigenvalues of a real symmetric matrix.
struct Spectrum {
  std::vector<double> eigenvalues;
  double zero_tolerance = 0.0;  // absolute; derived from the relative tolerance

  /// Number of eigenvalues with |lambda| <= zero_tolerance.
  std::size_t zero_count() const;
  double largest() const { return eigenvalues.empty() ? 0.0 : eigenvalues.back(); }
};

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // column i pairs with values[i]
};

inline constexpr double kDefaultRelativeZeroTolerance = 1e-9;

/// Householder tridiagonalization followed by implicit-shift QL.
/// Throws ContractError if m is not symmetric within 1e-12 (scaled by its
/// largest entry) and NumericError if QL fails to converge.
Spectrum symmetric_eigenvalues(const Matrix& m,
                               double relative_zero_tolerance = kDefaultRelativeZeroTolerance);

/// Same algorithm, accumulating the orthogonal transforms.
EigenDecomposition symmetric_eigen_decomposition(const Matrix& m);

/// ||M v - lambda v||_2.
double eigen_residual(const Matrix& m, double lambda, const Vector& v);

}  // namespace bilgr
