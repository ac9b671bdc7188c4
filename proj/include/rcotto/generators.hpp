#pragma once

// Master-equation generators, represented by their action on d x d density
// matrices. Parts compose additively.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rcotto/config.hpp"
#include "rcotto/model.hpp"
#include "rcotto/qops.hpp"

namespace rcotto {

class Generator {
 public:
  using Action = std::function<Matrix(const Matrix&)>;

  struct Part {
    std::string name;
    Action action;
  };

  Generator() = default;
  explicit Generator(int dim) : dim_(dim) {}

  Generator& add(std::string name, Action action, double frequency_bound = 0.0) {
    parts_.push_back({std::move(name), std::move(action)});
    frequency_bound_ = std::max(frequency_bound_, frequency_bound);
    return *this;
  }

  Generator& add(const Generator& other) {
    if (dim_ == 0) dim_ = other.dim_;
    if (other.dim_ != 0 && other.dim_ != dim_)
      throw std::invalid_argument("Generator: dimension mismatch when composing");
    for (const auto& p : other.parts_) parts_.push_back(p);
    frequency_bound_ = std::max(frequency_bound_, other.frequency_bound_);
    return *this;
  }

  Matrix apply(const Matrix& rho) const {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& p : parts_) out += p.action(rho);
    return out;
  }
  Matrix operator()(const Matrix& rho) const { return apply(rho); }

  int dim() const { return dim_; }
  std::size_t size() const { return parts_.size(); }
  const std::vector<Part>& parts() const { return parts_; }
  /// Largest Bohr frequency of the unitary parts (0 when there are none).
  double frequency_bound() const { return frequency_bound_; }

 private:
  int dim_ = 0;
  std::vector<Part> parts_;
  double frequency_bound_ = 0.0;
};

// ---------------------------------------------------------------------------
// chi and Xi

struct ChiXi {
  Matrix chi;  ///< Hermitian
  Matrix xi;   ///< anti-Hermitian: (pi gamma / 2) [H, A] filtered through the spectrum
};

/// Weight of chi for a Bohr gap: xi coth(beta xi / 2), continued to 2/beta at xi = 0.
inline double chi_weight(double gap, double beta, double eps_deg) {
  if (std::abs(gap) < eps_deg) return 2.0 / beta;
  return gap / std::tanh(0.5 * beta * gap);
}

/// chi_mn = (pi gamma/2) xi_mn coth(beta xi_mn/2) A_mn and Xi_mn = (pi gamma/2) xi_mn A_mn
/// in the eigenbasis of H, with xi_mn = E_m - E_n. Principal-value parts are dropped.
inline ChiXi build_chi_xi(const EigenSystem& sys, const Matrix& a, double beta, double gamma) {
  if (a.rows() != sys.dim() || a.cols() != sys.dim())
    throw std::invalid_argument("build_chi_xi: dimension mismatch");
  if (hermitian_defect(a) > kHermitianTolerance * std::max(1.0, max_abs(a)))
    throw std::invalid_argument("build_chi_xi: coupling operator is not Hermitian");
  const int d = sys.dim();
  const Matrix ae = sys.vectors.adjoint() * a * sys.vectors;
  const double pref = 0.5 * std::numbers::pi * gamma;
  Matrix chi_e(d, d), xi_e(d, d);
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m) {
      const double gap = sys.values(m) - sys.values(n);
      chi_e(m, n) = pref * chi_weight(gap, beta, sys.threshold) * ae(m, n);
      xi_e(m, n) = std::abs(gap) < sys.threshold ? Complex(0.0) : pref * gap * ae(m, n);
    }
  ChiXi out;
  out.chi = hermitize(sys.vectors * chi_e * sys.vectors.adjoint());
  const Matrix xi = sys.vectors * xi_e * sys.vectors.adjoint();
  out.xi = 0.5 * (xi - xi.adjoint());
  return out;
}

inline ChiXi build_chi_xi(const Matrix& h, const Matrix& a, double beta, double gamma) {
  return build_chi_xi(eigh(h), a, beta, gamma);
}

// ---------------------------------------------------------------------------
// Individual generators

/// -i[H, rho] - [A, [chi, rho]] + [A, {Xi, rho}]
inline Generator rc_dissipative_generator(const Matrix& h, const Matrix& a, const ChiXi& cx,
                                          double frequency_bound) {
  const Matrix k1 = cx.chi - cx.xi;
  const Matrix k2 = cx.chi + cx.xi;
  // -i[H,r] - [A, k1 r - r k2] = M r + r N + A r k2 + k1 r A
  Matrix m = -I * h - a * k1;
  Matrix n = I * h - k2 * a;
  Generator g(static_cast<int>(h.rows()));
  g.add(
      "rc",
      [m = std::move(m), n = std::move(n), a, k1, k2](const Matrix& rho) -> Matrix {
        Matrix out = m * rho;
        out.noalias() += rho * n;
        const Matrix rk2 = rho * k2;
        out.noalias() += a * rk2;
        const Matrix k1r = k1 * rho;
        out.noalias() += k1r * a;
        return out;
      },
      frequency_bound);
  return g;
}

inline Generator rc_dissipative_generator(const Matrix& h, const Matrix& a, double beta,
                                          double gamma) {
  const EigenSystem sys = eigh(h);
  return rc_dissipative_generator(h, a, build_chi_xi(sys, a, beta, gamma), sys.range());
}

/// gamma_d (N+1) L_a + gamma_d N L_{a^dag} with L_O[r] = O r O^dag - {O^dag O, r}/2,
/// for an annihilation operator `a` on whatever space it is embedded in.
inline Generator thermalizing_dissipator(const Matrix& a, double gamma_d, double occupation) {
  const double down = gamma_d * (occupation + 1.0);
  const double up = gamma_d * occupation;
  const Matrix ad = a.adjoint();
  // anticommutator pieces folded into one effective non-Hermitian term
  const Matrix k = 0.5 * (down * (ad * a) + up * (a * ad));
  Generator g(static_cast<int>(a.rows()));
  g.add("rethermalization", [a, ad, k, down, up](const Matrix& rho) -> Matrix {
    Matrix out = -(k * rho);
    out.noalias() -= rho * k;
    const Matrix ra = rho * ad;
    out.noalias() += down * (a * ra);
    const Matrix rad = rho * a;
    out.noalias() += up * (ad * rad);
    return out;
  });
  return g;
}

/// Rethermalisation acting on the RC factor of `reservoir` only.
inline Generator rethermalization_generator(Reservoir reservoir, double gamma_d, double occupation,
                                            const SpaceLayout& layout) {
  return thermalizing_dissipator(build_ladder(layout, reservoir).annihilation, gamma_d,
                                 occupation);
}

/// Decay sign convention for the eigenspace double commutator: coherences
/// between distinct eigenspaces decay at rate 2 gamma_dep.
inline constexpr double kDephasingSign = -1.0;

/// kDephasingSign * gamma_dep * sum_n [P_n, [P_n, rho]] over degeneracy-group projectors of H,
/// i.e. -2 gamma_dep (rho - sum_n P_n rho P_n).
inline Generator dephasing_generator(const EigenSystem& sys, double gamma_dep) {
  const int d = sys.dim();
  Eigen::MatrixXd keep(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) keep(m, n) = sys.group_of[m] == sys.group_of[n] ? 1.0 : 0.0;
  const Matrix v = sys.vectors;
  Generator g(d);
  g.add("dephasing", [v, keep, gamma_dep](const Matrix& rho) -> Matrix {
    const Matrix re = v.adjoint() * rho * v;
    const Matrix pinched = v * re.cwiseProduct(keep.cast<Complex>()) * v.adjoint();
    return (kDephasingSign * 2.0 * gamma_dep) * (rho - pinched);
  });
  return g;
}

inline Generator dephasing_generator(const Matrix& h, double gamma_dep, double eps_deg = -1.0) {
  return dephasing_generator(eigh(h, eps_deg), gamma_dep);
}

// ---------------------------------------------------------------------------
// Segment composition

/// One isochore: the coupled reservoir, optional dephasing, duration.
struct SegmentSpec {
  CouplingSet coupled;
  bool dephasing = false;
  double duration = 0.0;

  Reservoir reservoir() const {
    if (coupled.count() != 1)
      throw ConfigError("segment must couple exactly one reservoir");
    return coupled.hot ? Reservoir::hot : Reservoir::cold;
  }
};

inline SegmentSpec isochore_spec(const EngineConfig& c, Reservoir r) {
  return {CouplingSet::only(r), c.mode == EngineMode::incoherent, c.tau_i};
}

/// Full-space generator of an isochore: RC dissipative part for the coupled
/// reservoir, rethermalisation of the other RC, and (optionally) dephasing in
/// the eigenbasis of the segment Hamiltonian H_S'_j.
inline Generator segment_generator(const SegmentSpec& spec, const EngineConfig& config) {
  const Reservoir j = spec.reservoir();
  const Reservoir k = other(j);
  const SpaceLayout layout = config.layout();
  const RcParams rc_h = config.rc(Reservoir::hot);
  const RcParams rc_c = config.rc(Reservoir::cold);
  const RcParams& rc_j = j == Reservoir::hot ? rc_h : rc_c;
  const RcParams& rc_k = j == Reservoir::hot ? rc_c : rc_h;

  const Matrix h = build_H_Sprime(config.tls, rc_h, rc_c, j, spec.coupled, layout);
  const Ladder l = build_ladder(layout, j);
  const Matrix a = l.annihilation + l.creation;
  const EigenSystem sys = eigh(h);

  Generator g(layout.total_dim());
  g.add(rc_dissipative_generator(h, a, build_chi_xi(sys, a, config.temps.beta(j), rc_j.gamma),
                                 sys.range()));
  g.add(rethermalization_generator(k, config.resolved_gamma_d(),
                                   bose_occupation(config.temps.beta(k), rc_k.omega), layout));
  if (spec.dephasing) g.add(dephasing_generator(sys, config.gamma_dep));
  return g;
}

}  // namespace rcotto
