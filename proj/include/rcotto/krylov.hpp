#pragma once

// Restarted GMRES for matrix-free linear operators on complex vectors.

#include <cmath>
#include <vector>

#include "rcotto/types.hpp"

namespace rcotto {

struct GmresResult {
  Vector x;
  double residual = 0.0;  ///< 2-norm of b - A x
  int iterations = 0;     ///< operator applications
  bool converged = false;
};

/// Solves A x = b from x = 0 until ||b - A x|| <= abs_tol.
template <class Op>
GmresResult gmres(Op&& apply, const Vector& b, double abs_tol, int restart = 60,
                  int max_iterations = 300) {
  GmresResult res;
  res.x = Vector::Zero(b.size());
  Vector r = b;
  double beta = r.norm();
  res.residual = beta;
  while (beta > abs_tol && res.iterations < max_iterations) {
    const int m = std::min(restart, max_iterations - res.iterations);
    std::vector<Vector> v;
    v.reserve(m + 1);
    v.push_back(r / beta);
    Matrix h = Matrix::Zero(m + 1, m);
    std::vector<double> cs(m);
    std::vector<Complex> sn(m);
    Vector g = Vector::Zero(m + 1);
    g(0) = beta;
    int k = 0;
    for (; k < m; ++k) {
      Vector w = apply(v[k]);
      ++res.iterations;
      for (int i = 0; i <= k; ++i) {  // modified Gram-Schmidt
        h(i, k) = v[i].dot(w);
        w -= h(i, k) * v[i];
      }
      h(k + 1, k) = w.norm();
      for (int i = 0; i < k; ++i) {
        const Complex t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -std::conj(sn[i]) * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const Complex h1 = h(k, k), h2 = h(k + 1, k);
      const double nu = std::sqrt(std::norm(h1) + std::norm(h2));
      if (std::abs(h1) == 0.0) {
        cs[k] = 0.0;
        sn[k] = 1.0;
      } else {
        cs[k] = std::abs(h1) / nu;
        sn[k] = (h1 / std::abs(h1)) * std::conj(h2) / nu;
      }
      h(k, k) = cs[k] * h1 + sn[k] * h2;
      h(k + 1, k) = 0.0;
      g(k + 1) = -std::conj(sn[k]) * g(k);
      g(k) = cs[k] * g(k);
      const double wn = std::abs(h2);
      if (wn > 0.0) v.push_back(w / wn);
      if (std::abs(g(k + 1)) <= abs_tol || wn == 0.0) {
        ++k;
        break;
      }
    }
    // back substitution on the k x k triangle
    Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int i = 0; i < k; ++i) res.x += y(i) * v[i];
    r = b - apply(res.x);
    ++res.iterations;
    beta = r.norm();
    res.residual = beta;
  }
  res.converged = res.residual <= abs_tol;
  return res;
}

}  // namespace rcotto
