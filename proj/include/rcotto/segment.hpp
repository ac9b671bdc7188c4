#pragma once

// Exact propagation of an isochore by exploiting its tensor structure.
//
// During isochore j the generator is L_pair (x) id + id (x) L_rc, where
// L_pair acts on TLS (x) RC_j and L_rc (free rotation + rethermalisation)
// acts on the uncoupled RC_k. L_rc is phase covariant, so it preserves the
// Fock-coherence sectors |b><b'| with fixed b - b'. The eigenspace dephasing
// of H_S'_j = H_pair (x) id + id (x) Omega_k n_k is diagonal in the product
// eigenbasis and, within one sector, acts on the pair factor only. Each sector
// therefore evolves with exp(t (L_pair + D_sector)) (x) exp(t L_rc), and only
// (2n)^2 and n^2 sized superoperators are ever exponentiated.

#include <map>
#include <vector>

#include "rcotto/config.hpp"
#include "rcotto/generators.hpp"
#include "rcotto/superop.hpp"

namespace rcotto {

class SegmentMap;

class FactorizedSegment {
 public:
  FactorizedSegment(const EngineConfig& config, Reservoir coupled, bool dephasing)
      : coupled_(coupled), dephasing_(dephasing), n_(config.rc_levels) {
    const Reservoir k = other(coupled);
    const RcParams rc_j = config.rc(coupled);
    const RcParams rc_k = config.rc(k);
    const int dp = 2 * n_;

    // Pair Hamiltonian on TLS (x) RC_j, index s * n + r
    const Matrix a_rc = annihilation(n_);
    const Matrix a_pair = kron(identity(2), a_rc + a_rc.adjoint());
    const Matrix h_pair = kron(tls_hamiltonian(config.tls, coupled), identity(n_)) +
                          rc_j.omega * kron(identity(2), number_operator(n_)) -
                          rc_j.lambda * kron(pauli_z(), a_rc + a_rc.adjoint());
    pair_ = eigh(h_pair);
    const ChiXi cx = build_chi_xi(pair_, a_pair, config.temps.beta(coupled), rc_j.gamma);

    // Pair generator in the pair eigenbasis, where H is diagonal.
    const Matrix& v = pair_.vectors;
    const Matrix h_e = pair_.values.cast<Complex>().asDiagonal();
    const ChiXi cx_e{v.adjoint() * cx.chi * v, v.adjoint() * cx.xi * v};
    const Matrix a_e = v.adjoint() * a_pair * v;
    pair_generator_ = materialize(rc_dissipative_generator(h_e, a_e, cx_e, pair_.range()), dp);

    // Uncoupled RC: free rotation plus thermalising dissipator.
    omega_k_ = rc_k.omega;
    occupation_k_ = bose_occupation(config.temps.beta(k), rc_k.omega);
    const Matrix h_rc = rc_k.omega * number_operator(n_);
    Generator g_rc(n_);
    g_rc.add("rotation", [h_rc](const Matrix& r) -> Matrix { return -I * (h_rc * r - r * h_rc); });
    g_rc.add(thermalizing_dissipator(a_rc, config.resolved_gamma_d(), occupation_k_));
    rc_generator_ = materialize(g_rc, n_);
    rc_thermal_ = rc_thermal_state(rc_k.omega, config.temps.beta(k), n_);

    // Sector masks for dephasing; sectors with identical masks share one exponential.
    const double full_range = pair_.range() + (n_ - 1) * std::abs(rc_k.omega);
    eps_deg_ = default_degeneracy_threshold(full_range);
    sector_group_.assign(2 * n_ - 1, 0);
    if (dephasing_) {
      std::map<std::vector<char>, int> seen;
      for (int s = 0; s < 2 * n_ - 1; ++s) {
        const int dist = s - (n_ - 1);  // b - b'
        std::vector<char> mask(static_cast<std::size_t>(dp) * dp);
        for (int kp = 0; kp < dp; ++kp)
          for (int kk = 0; kk < dp; ++kk)
            mask[kk + dp * kp] =
                std::abs(pair_.values(kk) - pair_.values(kp) + dist * rc_k.omega) <= eps_deg_;
        auto [it, inserted] = seen.emplace(std::move(mask), static_cast<int>(masks_.size()));
        if (inserted) masks_.push_back(it->first);
        sector_group_[s] = it->second;
      }
      gamma_dep_ = config.gamma_dep;
    } else {
      masks_.emplace_back();  // unused placeholder: single group, no dephasing
    }

    // Full-index permutation: (pair index a, uncoupled index b) -> a * n + b
    const int d = 2 * n_ * n_;
    perm_.resize(d);
    for (int s = 0; s < 2; ++s)
      for (int rj = 0; rj < n_; ++rj)
        for (int rk = 0; rk < n_; ++rk) {
          const int a = s * n_ + rj;
          const int h = coupled == Reservoir::hot ? rj : rk;
          const int c = coupled == Reservoir::hot ? rk : rj;
          perm_[a * n_ + rk] = (s * n_ + h) * n_ + c;
        }
    row_basis_ = kron(v, identity(n_));
  }

  Reservoir coupled() const { return coupled_; }
  bool dephasing() const { return dephasing_; }
  int rc_levels() const { return n_; }
  /// Eigensystem of the coupled-pair Hamiltonian on TLS (x) RC_j.
  const EigenSystem& pair_eigensystem() const { return pair_; }
  const Matrix& uncoupled_thermal_state() const { return rc_thermal_; }
  double uncoupled_frequency() const { return omega_k_; }
  double degeneracy_threshold() const { return eps_deg_; }
  int distinct_sector_groups() const { return static_cast<int>(masks_.size()); }

  /// Pair generator (in the pair eigenbasis) including the dephasing of sector group `g`.
  Matrix pair_superoperator(int g) const {
    Matrix l = pair_generator_;
    if (dephasing_) {
      const auto& mask = masks_.at(g);
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (!mask[i]) l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= 2.0 * gamma_dep_;
    }
    return l;
  }

  SegmentMap at(double t) const;

  /// Product eigenbasis of H_S'_j (pair eigenvectors (x) Fock states of the
  /// uncoupled RC) as columns in the global factor order, with its eigenvalues.
  Matrix full_eigenbasis() const {
    const int d = 2 * n_ * n_;
    Matrix b(d, d);
    for (int col = 0; col < d; ++col)
      for (int x = 0; x < d; ++x) b(perm_[x], col) = row_basis_(x, col);
    return b;
  }
  RealVector full_eigenvalues() const {
    RealVector e(2 * n_ * n_);
    for (int k = 0; k < 2 * n_; ++k)
      for (int b = 0; b < n_; ++b) e(k * n_ + b) = pair_.values(k) + b * omega_k_;
    return e;
  }

 private:
  friend class SegmentMap;

  Reservoir coupled_;
  bool dephasing_;
  int n_;
  EigenSystem pair_;
  Matrix pair_generator_;
  Matrix rc_generator_;
  Matrix rc_thermal_;
  double omega_k_ = 0.0;
  double occupation_k_ = 0.0;
  double gamma_dep_ = 0.0;
  double eps_deg_ = 0.0;
  std::vector<std::vector<char>> masks_;
  std::vector<int> sector_group_;  ///< sector (b - b' + n - 1) -> mask group
  std::vector<int> perm_;
  Matrix row_basis_;  ///< V_pair (x) I_n in permuted ordering
};

/// The exact propagator of a segment for one fixed duration. Views the
/// segment it was built from, which must outlive it.
class SegmentMap {
 public:
  SegmentMap(const FactorizedSegment& seg, double t) : seg_(&seg), t_(t) {
    const int groups = seg_->distinct_sector_groups();
    pair_maps_.reserve(groups);
    for (int g = 0; g < groups; ++g) pair_maps_.push_back(expm(t * seg_->pair_superoperator(g)));
    rc_map_ = expm(t * seg_->rc_generator_);
  }

  double duration() const { return t_; }

  /// Full-space state -> state after the segment.
  Matrix apply(const Matrix& rho) const {
    const FactorizedSegment& s = *seg_;
    const int n = s.n_, dp = 2 * n, d = dp * n;
    if (rho.rows() != d || rho.cols() != d)
      throw std::invalid_argument("SegmentMap::apply: dimension mismatch");

    Matrix permuted(d, d);
    for (int y = 0; y < d; ++y)
      for (int x = 0; x < d; ++x) permuted(x, y) = rho(s.perm_[x], s.perm_[y]);
    const Matrix rt = s.row_basis_.adjoint() * permuted * s.row_basis_;

    Matrix m(dp * dp, n * n);
    for (int bp = 0; bp < n; ++bp)
      for (int b = 0; b < n; ++b)
        for (int kp = 0; kp < dp; ++kp)
          for (int k = 0; k < dp; ++k) m(k + dp * kp, b + n * bp) = rt(k * n + b, kp * n + bp);

    const Matrix y = m * rc_map_.transpose();
    Matrix out(dp * dp, n * n);
    if (pair_maps_.size() == 1) {
      out.noalias() = pair_maps_[0] * y;
    } else {
      for (int col = 0; col < n * n; ++col) {
        const int b = col % n, bp = col / n;
        const int g = s.sector_group_[b - bp + n - 1];
        out.col(col).noalias() = pair_maps_[g] * y.col(col);
      }
    }

    Matrix rt2(d, d);
    for (int bp = 0; bp < n; ++bp)
      for (int b = 0; b < n; ++b)
        for (int kp = 0; kp < dp; ++kp)
          for (int k = 0; k < dp; ++k) rt2(k * n + b, kp * n + bp) = out(k + dp * kp, b + n * bp);
    const Matrix back = s.row_basis_ * rt2 * s.row_basis_.adjoint();
    Matrix result(d, d);
    for (int yy = 0; yy < d; ++yy)
      for (int x = 0; x < d; ++x) result(s.perm_[x], s.perm_[yy]) = back(x, yy);
    return result;
  }

  /// Pair state on TLS (x) RC_j (index s * n + r) with the uncoupled RC thermal
  /// and uncorrelated -> pair state after the segment.
  Matrix apply_pair(const Matrix& sigma) const {
    const FactorizedSegment& s = *seg_;
    const int dp = 2 * s.n_;
    if (sigma.rows() != dp || sigma.cols() != dp)
      throw std::invalid_argument("SegmentMap::apply_pair: dimension mismatch");
    const Matrix& v = s.pair_.vectors;
    const Matrix se = v.adjoint() * sigma * v;
    const int g0 = s.sector_group_[s.n_ - 1];
    const Matrix out = unvec(pair_maps_[g0] * vec(se), dp);
    return v * out * v.adjoint();
  }

 private:
  const FactorizedSegment* seg_;
  double t_;
  std::vector<Matrix> pair_maps_;
  Matrix rc_map_;
};

inline SegmentMap FactorizedSegment::at(double t) const { return SegmentMap(*this, t); }

}  // namespace rcotto
