#pragma once

// The Otto cycle A' -> B -> B' -> C -> C' -> D -> D' -> A, its limit cycle and
// thermodynamic metrics.

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rcotto/config.hpp"
#include "rcotto/krylov.hpp"
#include "rcotto/propagate.hpp"
#include "rcotto/segment.hpp"

namespace rcotto {

enum class CyclePoint { A, A_prime, B, B_prime, C, C_prime, D, D_prime };

inline const char* to_string(CyclePoint p) {
  switch (p) {
    case CyclePoint::A: return "A";
    case CyclePoint::A_prime: return "A'";
    case CyclePoint::B: return "B";
    case CyclePoint::B_prime: return "B'";
    case CyclePoint::C: return "C";
    case CyclePoint::C_prime: return "C'";
    case CyclePoint::D: return "D";
    case CyclePoint::D_prime: return "D'";
  }
  return "?";
}

/// TLS phase in force at a cycle point.
inline Reservoir phase_at(CyclePoint p) {
  switch (p) {
    case CyclePoint::A:
    case CyclePoint::A_prime:
    case CyclePoint::B:
    case CyclePoint::B_prime: return Reservoir::hot;
    default: return Reservoir::cold;
  }
}

/// Interaction terms switched on at a cycle point.
inline CouplingSet coupling_at(CyclePoint p) {
  switch (p) {
    case CyclePoint::A_prime:
    case CyclePoint::B: return CouplingSet::only(Reservoir::hot);
    case CyclePoint::C_prime:
    case CyclePoint::D: return CouplingSet::only(Reservoir::cold);
    default: return CouplingSet::none();
  }
}

struct CycleState {
  CyclePoint point = CyclePoint::A;
  Matrix rho;

  Reservoir tls_phase() const { return phase_at(point); }
  CouplingSet coupling() const { return coupling_at(point); }
};

struct StepResult {
  CycleState state;
  double energy = 0.0;  ///< energy change of the enlarged system, tr[(H_after - H_before) rho]
};

struct IsochoreResult {
  CycleState state;
  double pair_energy_change = 0.0;  ///< tr[(H_S + Omega_j n_j + H_I_j)(rho_end - rho_start)]
  double rethermalization_heat = 0.0;  ///< tr[Omega_k n_k (rho_end - rho_start)], incl. resets
};

/// All points of one traversal starting from A.
struct CycleTrace {
  std::array<Matrix, 8> rho;  ///< indexed by CyclePoint
  double quench_on_hot = 0.0, quench_off_hot = 0.0;
  double quench_on_cold = 0.0, quench_off_cold = 0.0;
  double stroke_hot = 0.0;   ///< B' -> C energy change
  double stroke_cold = 0.0;  ///< D' -> A energy change
  double isochore_hot = 0.0, isochore_cold = 0.0;
  double retherm_hot_isochore = 0.0, retherm_cold_isochore = 0.0;
  Matrix rho_A_next;  ///< state at A after the traversal

  const Matrix& at(CyclePoint p) const { return rho[static_cast<int>(p)]; }

  /// Sum of every recorded energy increment over the traversal.
  double energy_balance() const {
    return quench_on_hot + quench_off_hot + quench_on_cold + quench_off_cold + stroke_hot +
           stroke_cold + isochore_hot + isochore_cold + retherm_hot_isochore +
           retherm_cold_isochore;
  }
};

struct CycleMetrics {
  double W_out = 0.0;
  double Q = 0.0;
  std::optional<double> eta;  ///< undefined when Q <= 0
  double P = 0.0;
  double C_h = 0.0;
  double C_c = 0.0;
  double W_hot_adiabat = 0.0;   ///< work extracted on the hot adiabat
  double W_cold_adiabat = 0.0;  ///< work invested on the cold adiabat
  double pop_diff_B = 0.0;      ///< p_g - p_e of the TLS at B
  double pop_diff_D = 0.0;
  double coherence_B = 0.0;
  double coherence_D = 0.0;
  int n_cycles = 0;
  double residual = 0.0;

  // diagnostics
  double first_law_residual = 0.0;
  double retherm_distance = 0.0;  ///< max trace distance of a recoupled RC from thermal
  double recoupling_cost = 0.0;   ///< max |tr[H_I rho]| at the "on" quenches
  double min_eigenvalue = 0.0;
};

/// Work as printed in the RC literature; evaluates negative in the engine regime.
/// W_out = -work_as_printed.
inline double work_as_printed(const CycleMetrics& m) { return -m.W_out; }

struct LimitCycle {
  Matrix rho_A;
  int n_cycles = 0;          ///< cycle-map applications (plain + Krylov)
  int plain_iterations = 0;
  double residual = 0.0;     ///< trace distance between the last two A states
  std::vector<double> residual_history;  ///< plain iterations only
  bool monotone = true;      ///< history nonincreasing after the first 5 entries
};

struct EngineResult {
  CycleMetrics metrics;
  CycleTrace trace;
  LimitCycle limit_cycle;
  std::vector<std::string> warnings;
};

class OttoEngine {
 public:
  explicit OttoEngine(EngineConfig config)
      : config_(std::move(config)), layout_(config_.rc_levels) {
    rc_[0] = config_.rc(Reservoir::hot);
    rc_[1] = config_.rc(Reservoir::cold);
    for (Reservoir r : {Reservoir::hot, Reservoir::cold}) {
      const int i = idx(r);
      h_s_[i] = build_H_S(config_.tls, r, layout_);
      h_i_[i] = build_H_I(rc_[i], r, layout_);
      rc_energy_[i] = build_rc_energy(rc_[i], r, layout_);
      rc_thermal_[i] = rc_thermal_state(rc_[i].omega, config_.temps.beta(r), layout_.rc_levels());
    }
  }

  const EngineConfig& config() const { return config_; }
  const SpaceLayout& layout() const { return layout_; }
  const RcParams& rc(Reservoir r) const { return rc_[idx(r)]; }
  const Matrix& H_S(Reservoir phase) const { return h_s_[idx(phase)]; }
  const Matrix& H_I(Reservoir r) const { return h_i_[idx(r)]; }
  const Matrix& rc_energy(Reservoir r) const { return rc_energy_[idx(r)]; }
  const Matrix& rc_thermal(Reservoir r) const { return rc_thermal_[idx(r)]; }

  /// H_S(phase) + Omega_j n_j + H_I_j: the hot-side (or cold-side) energy of the pair.
  Matrix pair_hamiltonian(Reservoir j) const { return H_S(j) + rc_energy(j) + H_I(j); }

  /// Thermal TLS (cold phase, beta_c) (x) thermal RC_h (x) thermal RC_c.
  Matrix seed_state() const {
    const Matrix tls = thermal_state(tls_hamiltonian(config_.tls, Reservoir::cold),
                                     config_.temps.beta_c);
    return kron(kron(tls, rc_thermal(Reservoir::hot)), rc_thermal(Reservoir::cold));
  }

  const FactorizedSegment& segment(Reservoir j) const {
    auto& slot = segments_[idx(j)];
    if (!slot)
      slot = std::make_shared<FactorizedSegment>(config_, j,
                                                 config_.mode == EngineMode::incoherent);
    return *slot;
  }

  // -------------------------------------------------------------------------
  // Cycle steps

  StepResult quench_coupling(const CycleState& s, Reservoir r, bool on) const {
    CyclePoint next;
    if (r == Reservoir::hot && on && s.point == CyclePoint::A) next = CyclePoint::A_prime;
    else if (r == Reservoir::hot && !on && s.point == CyclePoint::B) next = CyclePoint::B_prime;
    else if (r == Reservoir::cold && on && s.point == CyclePoint::C) next = CyclePoint::C_prime;
    else if (r == Reservoir::cold && !on && s.point == CyclePoint::D) next = CyclePoint::D_prime;
    else
      throw std::logic_error(std::string("quench_coupling: invalid transition from ") +
                             to_string(s.point));
    const double e = (rho_trace(H_I(r), s.rho)).real();
    return {CycleState{next, s.rho}, on ? e : -e};
  }

  StepResult run_stroke(const CycleState& s) const {
    CyclePoint next;
    if (s.point == CyclePoint::B_prime) next = CyclePoint::C;
    else if (s.point == CyclePoint::D_prime) next = CyclePoint::A;
    else
      throw std::logic_error(std::string("run_stroke: invalid start point ") + to_string(s.point));
    const Reservoir before = s.tls_phase();
    const Reservoir after = other(before);
    const double w = rho_trace(H_S(after) - H_S(before), s.rho).real();
    return {CycleState{next, s.rho}, w};
  }

  IsochoreResult run_isochore(const CycleState& s) const {
    Reservoir j;
    CyclePoint next;
    if (s.point == CyclePoint::A_prime) {
      j = Reservoir::hot;
      next = CyclePoint::B;
    } else if (s.point == CyclePoint::C_prime) {
      j = Reservoir::cold;
      next = CyclePoint::D;
    } else {
      throw std::logic_error(std::string("run_isochore: invalid start point ") +
                             to_string(s.point));
    }
    const Reservoir k = other(j);
    Matrix start = s.rho;
    IsochoreResult out;
    if (config_.reset == ResetPolicy::projective) {
      Matrix reset = with_thermal_rc(start, k);
      out.rethermalization_heat += rho_trace(rc_energy(k), reset - start).real();
      start = std::move(reset);
    }
    Matrix end = config_.reset == ResetPolicy::projective
                     ? propagate_reset(partial_trace(start, layout_, {Factor::tls, rc_factor(j)}), j)
                     : propagate(start, j, config_.tau_i);
    out.pair_energy_change = rho_trace(pair_hamiltonian(j), end - start).real();
    out.rethermalization_heat += rho_trace(rc_energy(k), end - start).real();
    out.state = CycleState{next, std::move(end)};
    return out;
  }

  /// One traversal A -> A' -> B -> B' -> C -> C' -> D -> D' -> A.
  CycleTrace run_cycle(const Matrix& rho_A) const {
    CycleTrace t;
    CycleState s{CyclePoint::A, rho_A};
    t.rho[int(CyclePoint::A)] = s.rho;
    auto q1 = quench_coupling(s, Reservoir::hot, true);
    t.quench_on_hot = q1.energy;
    t.rho[int(CyclePoint::A_prime)] = q1.state.rho;
    auto iso_h = run_isochore(q1.state);
    t.isochore_hot = iso_h.pair_energy_change;
    t.retherm_hot_isochore = iso_h.rethermalization_heat;
    t.rho[int(CyclePoint::B)] = iso_h.state.rho;
    auto q2 = quench_coupling(iso_h.state, Reservoir::hot, false);
    t.quench_off_hot = q2.energy;
    t.rho[int(CyclePoint::B_prime)] = q2.state.rho;
    auto st1 = run_stroke(q2.state);
    t.stroke_hot = st1.energy;
    t.rho[int(CyclePoint::C)] = st1.state.rho;
    auto q3 = quench_coupling(st1.state, Reservoir::cold, true);
    t.quench_on_cold = q3.energy;
    t.rho[int(CyclePoint::C_prime)] = q3.state.rho;
    auto iso_c = run_isochore(q3.state);
    t.isochore_cold = iso_c.pair_energy_change;
    t.retherm_cold_isochore = iso_c.rethermalization_heat;
    t.rho[int(CyclePoint::D)] = iso_c.state.rho;
    auto q4 = quench_coupling(iso_c.state, Reservoir::cold, false);
    t.quench_off_cold = q4.energy;
    t.rho[int(CyclePoint::D_prime)] = q4.state.rho;
    auto st2 = run_stroke(q4.state);
    t.stroke_cold = st2.energy;
    t.rho_A_next = st2.state.rho;
    return t;
  }

  /// The full-cycle map on the state at A.
  Matrix cycle_map(const Matrix& rho_A) const {
    Matrix r = rho_A;
    r = isochore_map(r, Reservoir::hot);
    return isochore_map(r, Reservoir::cold);
  }

  LimitCycle find_limit_cycle(std::optional<Matrix> seed = std::nullopt) const {
    const double tol = config_.tolerances.limit_cycle;
    const int cap = config_.tolerances.max_cycles;
    LimitCycle lc;
    Matrix x = seed ? *seed : seed_state();
    int krylov_rounds = 0;
    while (true) {
      Matrix y = hermitize(cycle_map(x));
      y /= y.trace();
      ++lc.n_cycles;
      ++lc.plain_iterations;
      const double r = trace_distance(x, y);
      lc.residual_history.push_back(r);
      lc.residual = r;
      x = std::move(y);
      if (r <= tol) break;
      if (lc.n_cycles >= cap) {
        std::ostringstream msg;
        msg << "limit cycle not reached after " << lc.n_cycles << " cycle-map applications;"
            << " residual history:";
        for (double h : lc.residual_history) msg << ' ' << h;
        throw NumericalError(msg.str());
      }
      const auto& hist = lc.residual_history;
      if (hist.size() >= 3 && krylov_rounds < 3) {
        const double q = hist.back() / hist[hist.size() - 2];
        const double remaining = q < 1.0 ? std::log(tol / r) / std::log(q) : 1e9;
        if (q > 0.3 && remaining > 8.0) {
          x = krylov_fixed_point(x, tol, cap - lc.n_cycles, lc.n_cycles);
          ++krylov_rounds;
        }
      }
    }
    lc.rho_A = std::move(x);
    lc.monotone = is_monotone_after(lc.residual_history, 5);
    return lc;
  }

  CycleMetrics compute_metrics(const CycleTrace& t) const {
    CycleMetrics m;
    const Matrix& ra = t.at(CyclePoint::A);
    const Matrix& rb = t.at(CyclePoint::B);
    const Matrix& rc = t.at(CyclePoint::C);
    const Matrix& rd = t.at(CyclePoint::D);
    const Matrix& hh = H_S(Reservoir::hot);
    const Matrix& hc = H_S(Reservoir::cold);

    m.W_hot_adiabat = rho_trace(hh, rb).real() - rho_trace(hc, rc).real();
    m.W_cold_adiabat = rho_trace(hh, ra).real() - rho_trace(hc, rd).real();
    m.C_h = -rho_trace(H_I(Reservoir::hot), rb).real();
    m.C_c = -rho_trace(H_I(Reservoir::cold), rd).real();
    m.W_out = m.W_hot_adiabat - m.W_cold_adiabat - m.C_h - m.C_c;
    const Matrix hq = pair_hamiltonian(Reservoir::hot);
    m.Q = rho_trace(hq, rb).real() - rho_trace(hq, ra).real();
    if (m.Q > 0.0) m.eta = m.W_out / m.Q;
    m.P = m.W_out / (2.0 * config_.tau_i);

    m.pop_diff_B = population_difference(rb, Reservoir::hot);
    m.pop_diff_D = population_difference(rd, Reservoir::cold);
    m.coherence_B = coherence(rb, Reservoir::hot);
    m.coherence_D = coherence(rd, Reservoir::cold);

    m.first_law_residual = t.energy_balance();
    m.recoupling_cost = std::max(std::abs(t.quench_on_hot), std::abs(t.quench_on_cold));
    m.retherm_distance = std::max(
        trace_distance(partial_trace(ra, layout_, {Factor::rc_hot}), rc_thermal(Reservoir::hot)),
        trace_distance(partial_trace(rc, layout_, {Factor::rc_cold}), rc_thermal(Reservoir::cold)));
    m.min_eigenvalue = 0.0;
    for (const Matrix& r : t.rho) m.min_eigenvalue = std::min(m.min_eigenvalue, min_eigenvalue(r));
    return m;
  }

  /// p_g - p_e of the reduced TLS state in the eigenbasis of H_S(phase).
  double population_difference(const Matrix& rho, Reservoir phase) const {
    const Matrix tls = partial_trace(rho, layout_, {Factor::tls});
    const EigenSystem sys = eigh(tls_hamiltonian(config_.tls, phase));
    const Matrix p = sys.vectors.adjoint() * tls * sys.vectors;
    return p(0, 0).real() - p(1, 1).real();
  }

  /// l1 norm of the elements of rho between distinct eigenspaces of H_S'_j.
  double coherence(const Matrix& rho, Reservoir j) const {
    const FactorizedSegment& seg = segment(j);
    const Matrix basis = seg.full_eigenbasis();
    const RealVector e = seg.full_eigenvalues();
    const Matrix r = basis.adjoint() * rho * basis;
    double sum = 0.0;
    for (Eigen::Index y = 0; y < r.cols(); ++y)
      for (Eigen::Index x = 0; x < r.rows(); ++x)
        if (std::abs(e(x) - e(y)) > seg.degeneracy_threshold()) sum += std::abs(r(x, y));
    return sum;
  }

  /// Limit cycle plus metrics.
  EngineResult run() const {
    EngineResult res;
    res.limit_cycle = find_limit_cycle();
    res.trace = run_cycle(res.limit_cycle.rho_A);
    res.metrics = compute_metrics(res.trace);
    res.metrics.n_cycles = res.limit_cycle.n_cycles;
    res.metrics.residual = res.limit_cycle.residual;

    const auto& m = res.metrics;
    const double floor = config_.tolerances.positivity_floor;
    if (m.min_eigenvalue < -floor) {
      std::ostringstream msg;
      msg << "limit-cycle state violates positivity: min eigenvalue " << m.min_eigenvalue;
      throw NumericalError(msg.str());
    }
    if (config_.reset == ResetPolicy::dissipative && m.retherm_distance > 1e-6) {
      std::ostringstream msg;
      msg << "uncoupled RC is " << m.retherm_distance
          << " (trace distance) from thermal at recoupling; increase gamma_d above "
          << config_.resolved_gamma_d();
      res.warnings.push_back(msg.str());
    }
    if (!res.limit_cycle.monotone)
      res.warnings.push_back("limit-cycle residuals were not monotone after the first 5 cycles");
    return res;
  }

 private:
  static int idx(Reservoir r) { return r == Reservoir::hot ? 0 : 1; }

  static Complex rho_trace(const Matrix& op, const Matrix& rho) {
    return (op.cwiseProduct(rho.transpose())).sum();
  }

  static bool is_monotone_after(const std::vector<double>& h, std::size_t skip) {
    for (std::size_t i = skip + 1; i < h.size(); ++i)
      if (h[i] > h[i - 1] * (1.0 + 1e-6) + 1e-15) return false;
    return true;
  }

  /// Replaces the RC factor of `r` by its thermal state, dropping its correlations.
  Matrix with_thermal_rc(const Matrix& rho, Reservoir r) const {
    const Reservoir j = other(r);
    return embed_pair(partial_trace(rho, layout_, {Factor::tls, rc_factor(j)}), j);
  }

  /// sigma on TLS (x) RC_j (index s * n + r) times the thermal state of the other RC.
  Matrix embed_pair(const Matrix& sigma, Reservoir j) const {
    const Matrix& th = rc_thermal(other(j));
    if (j == Reservoir::hot) return kron(sigma, th);
    const int n = layout_.rc_levels();
    const int d = layout_.total_dim();
    Matrix out(d, d);
    for (int s = 0; s < 2; ++s)
      for (int h = 0; h < n; ++h)
        for (int c = 0; c < n; ++c)
          for (int sp = 0; sp < 2; ++sp)
            for (int hp = 0; hp < n; ++hp)
              for (int cp = 0; cp < n; ++cp)
                out((s * n + h) * n + c, (sp * n + hp) * n + cp) =
                    sigma(s * n + c, sp * n + cp) * th(h, hp);
    return out;
  }

  const SegmentMap& segment_map(Reservoir j) const {
    auto& slot = maps_[idx(j)];
    if (!slot) slot = std::make_shared<SegmentMap>(segment(j).at(config_.tau_i));
    return *slot;
  }

  Matrix propagate(const Matrix& rho, Reservoir j, double t) const {
    if (config_.propagator == PropagatorKind::factorized) {
      if (t == config_.tau_i) return hermitize(segment_map(j).apply(rho));
      return hermitize(segment(j).at(t).apply(rho));
    }
    IntegratorSettings s;
    s.rel_tol = config_.tolerances.rel_tol;
    s.abs_tol = config_.tolerances.abs_tol;
    s.positivity_floor = config_.tolerances.positivity_floor;
    const Generator g = segment_generator(
        {CouplingSet::only(j), config_.mode == EngineMode::incoherent, t}, config_);
    return hermitize(evolve(rho, g, t, s));
  }

  Matrix isochore_map(const Matrix& rho, Reservoir j) const {
    if (config_.reset == ResetPolicy::projective) {
      const Matrix sigma = partial_trace(rho, layout_, {Factor::tls, rc_factor(j)});
      return propagate_reset(sigma, j);
    }
    return propagate(rho, j, config_.tau_i);
  }

  /// Isochore j from sigma (x) thermal RC_k. The thermal factor is stationary under
  /// rethermalization, so only the pair is propagated.
  Matrix propagate_reset(const Matrix& sigma, Reservoir j) const {
    if (config_.propagator == PropagatorKind::factorized)
      return hermitize(embed_pair(segment_map(j).apply_pair(sigma), j));
    return propagate(embed_pair(sigma, j), j, config_.tau_i);
  }

  /// Solves (I - Phi) delta = Phi(x) - x for a traceless correction.
  Matrix krylov_fixed_point(const Matrix& x, double tol, int budget, int& applications) const {
    const int d = layout_.total_dim();
    const Matrix phi_x = cycle_map(x);
    ++applications;
    const Vector b = vec(Matrix(phi_x - x));
    auto op = [&](const Vector& v) -> Vector {
      const Matrix m = unvec(v, d);
      ++applications;
      return vec(Matrix(m - cycle_map(m)));
    };
    const GmresResult g = gmres(op, b, 0.01 * tol, 80, std::max(10, std::min(budget, 300)));
    Matrix y = hermitize(x + unvec(g.x, d));
    y /= y.trace();
    return y;
  }

  EngineConfig config_;
  SpaceLayout layout_;
  std::array<RcParams, 2> rc_;
  std::array<Matrix, 2> h_s_, h_i_, rc_energy_, rc_thermal_;
  mutable std::array<std::shared_ptr<FactorizedSegment>, 2> segments_;
  mutable std::array<std::shared_ptr<SegmentMap>, 2> maps_;
};

inline EngineResult run_engine(const EngineConfig& config) {
  validate(config);
  return OttoEngine(config).run();
}

}  // namespace rcotto
