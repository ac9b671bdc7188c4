#pragma once

// Materialised superoperators in the column-major vec convention:
// vec(rho)[i + d j] = rho(i, j), vec(A rho B) = (B^T (x) A) vec(rho).

#include <unsupported/Eigen/MatrixFunctions>

#include "rcotto/generators.hpp"

namespace rcotto {

inline Vector vec(const Matrix& rho) { return Eigen::Map<const Vector>(rho.data(), rho.size()); }

inline Matrix unvec(const Vector& v, int dim) {
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

/// d^2 x d^2 matrix of `g`, built by applying it to every matrix unit.
inline Matrix materialize(const Generator& g, int dim) {
  const int d2 = dim * dim;
  Matrix s(d2, d2);
  Matrix unit = Matrix::Zero(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) {
      unit(i, j) = 1.0;
      s.col(i + dim * j) = vec(g.apply(unit));
      unit(i, j) = 0.0;
    }
  return s;
}

/// Superoperator of rho -> left * rho * right.
inline Matrix sandwich(const Matrix& left, const Matrix& right) {
  return kron(right.transpose(), left);
}

inline Matrix expm(const Matrix& m) { return m.exp(); }

}  // namespace rcotto
