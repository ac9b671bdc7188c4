#pragma once

// Dense operator algebra on the enlarged space TLS (x) RC_h (x) RC_c.

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rcotto/types.hpp"

namespace rcotto {

/// Tensor factors in their fixed global order.
enum class Factor : int { tls = 0, rc_hot = 1, rc_cold = 2 };

inline Factor rc_factor(Reservoir r) {
  return r == Reservoir::hot ? Factor::rc_hot : Factor::rc_cold;
}

class SpaceLayout {
 public:
  explicit SpaceLayout(int rc_levels) : rc_levels_(rc_levels) {
    if (rc_levels < 2) throw std::invalid_argument("rc_levels must be >= 2");
  }

  int rc_levels() const { return rc_levels_; }
  static constexpr int tls_dim() { return 2; }
  int factor_dim(Factor f) const { return f == Factor::tls ? 2 : rc_levels_; }
  int total_dim() const { return 2 * rc_levels_ * rc_levels_; }
  std::array<int, 3> dims() const { return {2, rc_levels_, rc_levels_}; }

  bool operator==(const SpaceLayout&) const = default;

 private:
  int rc_levels_;
};

// ---------------------------------------------------------------------------
// Elementary factor-local operators

inline Matrix identity(int dim) { return Matrix::Identity(dim, dim); }

inline Matrix pauli_z() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

inline Matrix pauli_x() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

/// Truncated annihilation operator on `levels` Fock states: a|n> = sqrt(n)|n-1>.
inline Matrix annihilation(int levels) {
  Matrix a = Matrix::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline Matrix number_operator(int levels) {
  Matrix n = Matrix::Zero(levels, levels);
  for (int k = 0; k < levels; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// ---------------------------------------------------------------------------
// Embedding and partial traces over arbitrary factor lists

/// Kronecker embedding of a single-factor operator into a product space with
/// factor dimensions `dims`.
inline Matrix tensor_embed(const Matrix& op, std::span<const int> dims, int slot) {
  if (slot < 0 || slot >= static_cast<int>(dims.size()))
    throw std::invalid_argument("tensor_embed: slot out of range");
  if (op.rows() != dims[slot] || op.cols() != dims[slot])
    throw std::invalid_argument("tensor_embed: operator dimension does not match factor");
  Matrix out = Matrix::Identity(1, 1);
  for (int k = 0; k < static_cast<int>(dims.size()); ++k)
    out = kron(out, k == slot ? op : identity(dims[k]));
  return out;
}

inline Matrix tensor_embed(const Matrix& op, const SpaceLayout& layout, Factor slot) {
  const auto dims = layout.dims();
  return tensor_embed(op, std::span<const int>(dims), static_cast<int>(slot));
}

/// Reduced operator on the factors flagged in `keep` (kept factors stay in
/// their original relative order).
inline Matrix partial_trace(const Matrix& rho, std::span<const int> dims,
                            std::span<const bool> keep) {
  const int nf = static_cast<int>(dims.size());
  if (static_cast<int>(keep.size()) != nf)
    throw std::invalid_argument("partial_trace: keep mask size mismatch");
  if (std::none_of(keep.begin(), keep.end(), [](bool b) { return b; }))
    throw std::invalid_argument("partial_trace: empty keep set");
  int total = 1;
  for (int d : dims) total *= d;
  if (rho.rows() != total || rho.cols() != total)
    throw std::invalid_argument("partial_trace: operator dimension mismatch");

  std::vector<int> kept_dims, traced_dims;
  for (int k = 0; k < nf; ++k) (keep[k] ? kept_dims : traced_dims).push_back(dims[k]);
  int dk = 1, dt = 1;
  for (int d : kept_dims) dk *= d;
  for (int d : traced_dims) dt *= d;

  // Split each full index into (kept multi-index, traced multi-index).
  std::vector<int> kept_of(total), traced_of(total);
  std::vector<int> digit(nf);
  for (int idx = 0; idx < total; ++idx) {
    int rem = idx;
    for (int k = nf - 1; k >= 0; --k) {
      digit[k] = rem % dims[k];
      rem /= dims[k];
    }
    int ki = 0, ti = 0;
    for (int k = 0; k < nf; ++k) {
      if (keep[k])
        ki = ki * dims[k] + digit[k];
      else
        ti = ti * dims[k] + digit[k];
    }
    kept_of[idx] = ki;
    traced_of[idx] = ti;
  }
  // full index from (kept, traced)
  std::vector<int> full_of(static_cast<std::size_t>(dk) * dt);
  for (int idx = 0; idx < total; ++idx) full_of[kept_of[idx] * dt + traced_of[idx]] = idx;

  Matrix out = Matrix::Zero(dk, dk);
  for (int i = 0; i < dk; ++i)
    for (int j = 0; j < dk; ++j) {
      Complex s = 0.0;
      for (int t = 0; t < dt; ++t) s += rho(full_of[i * dt + t], full_of[j * dt + t]);
      out(i, j) = s;
    }
  return out;
}

inline Matrix partial_trace(const Matrix& rho, const SpaceLayout& layout,
                            std::initializer_list<Factor> keep) {
  const auto dims = layout.dims();
  std::array<bool, 3> mask{false, false, false};
  for (Factor f : keep) mask[static_cast<int>(f)] = true;
  return partial_trace(rho, std::span<const int>(dims), std::span<const bool>(mask));
}

// ---------------------------------------------------------------------------
// Embedded TLS and RC operators

enum class Pauli { x, z };

inline Matrix build_pauli(const SpaceLayout& layout, Pauli which) {
  return tensor_embed(which == Pauli::z ? pauli_z() : pauli_x(), layout, Factor::tls);
}

struct Ladder {
  Matrix annihilation;
  Matrix creation;
};

inline Ladder build_ladder(const SpaceLayout& layout, Reservoir reservoir) {
  Matrix a = tensor_embed(annihilation(layout.rc_levels()), layout, rc_factor(reservoir));
  Matrix ad = a.adjoint();
  return {std::move(a), std::move(ad)};
}

// ---------------------------------------------------------------------------
// Small matrix utilities

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }
inline Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double hermitian_defect(const Matrix& m) { return max_abs(m - m.adjoint()); }

inline Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline RealVector hermitian_eigenvalues(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const Matrix& rho) { return hermitian_eigenvalues(rho).minCoeff(); }

/// Trace distance 1/2 ||rho - sigma||_1 for Hermitian arguments.
inline double trace_distance(const Matrix& rho, const Matrix& sigma) {
  return 0.5 * hermitian_eigenvalues(rho - sigma).cwiseAbs().sum();
}

/// Sum of |off-diagonal| entries of `rho` in the basis given by the columns of `basis`.
inline double l1_coherence(const Matrix& rho, const Matrix& basis) {
  const Matrix r = basis.adjoint() * rho * basis;
  return r.cwiseAbs().sum() - r.diagonal().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition with degeneracy grouping

struct EigenSystem {
  RealVector values;                     ///< ascending
  Matrix vectors;                        ///< columns are eigenvectors
  std::vector<std::vector<int>> groups;  ///< consecutive indices with gaps <= threshold
  std::vector<int> group_of;             ///< index -> group id
  double threshold = 0.0;

  int dim() const { return static_cast<int>(values.size()); }
  double range() const { return values.size() ? values(values.size() - 1) - values(0) : 0.0; }
};

inline constexpr double kHermitianTolerance = 1e-10;

/// Default degeneracy threshold: 1e-9 of the spectral range.
inline double default_degeneracy_threshold(double range) {
  return std::max(1e-9 * range, 1e-14);
}

inline EigenSystem eigh(const Matrix& h, double eps_deg = -1.0) {
  if (h.rows() != h.cols()) throw std::invalid_argument("eigh: matrix is not square");
  const double scale = std::max(1.0, max_abs(h));
  if (hermitian_defect(h) > kHermitianTolerance * scale)
    throw std::invalid_argument("eigh: matrix is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h));
  if (es.info() != Eigen::Success) throw NumericalError("eigh: diagonalisation failed");
  EigenSystem sys;
  sys.values = es.eigenvalues();
  sys.vectors = es.eigenvectors();
  sys.threshold = eps_deg >= 0.0 ? eps_deg : default_degeneracy_threshold(sys.range());

  const int n = sys.dim();
  sys.group_of.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    if (i == 0 || sys.values(i) - sys.values(i - 1) > sys.threshold) sys.groups.emplace_back();
    sys.groups.back().push_back(i);
    sys.group_of[i] = static_cast<int>(sys.groups.size()) - 1;
  }
  return sys;
}

/// Projector onto the eigenspace of group `g`.
inline Matrix group_projector(const EigenSystem& sys, int g) {
  Matrix p = Matrix::Zero(sys.dim(), sys.dim());
  for (int i : sys.groups.at(g)) p += sys.vectors.col(i) * sys.vectors.col(i).adjoint();
  return p;
}

}  // namespace rcotto
