#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <variant>
#include <vector>

#include "rce/simulator.hpp"
#include "rce/trace.hpp"

namespace rce {

// ---------------------------------------------------------------------------
// Pauli bookkeeping

struct SignedPauli {
  int sign = 1;     // +1 or -1
  char axis = 'X';  // 'X' or 'Y'

  Mat2c matrix() const { return double(sign) * (axis == 'X' ? pauli::X() : pauli::Y()); }
  std::string label() const { return std::string(sign < 0 ? "-" : "") + axis; }
  // +1 eigenvector.
  Eigen::Vector2cd plus_eigenvector() const {
    const double s = 1.0 / std::sqrt(2.0);
    if (axis == 'X') return sign > 0 ? Eigen::Vector2cd(s, s) : Eigen::Vector2cd(s, -s);
    return sign > 0 ? Eigen::Vector2cd(s, cplx(0, s)) : Eigen::Vector2cd(s, cplx(0, -s));
  }
};

// (i/2)^k [...[[X, Z], Z]..., Z] with k nested commutators.
inline SignedPauli nested_commutator_pauli(int k) {
  if (k < 0) throw InvalidInput("commutator depth must be non-negative");
  static const SignedPauli cycle[4] = {{1, 'X'}, {1, 'Y'}, {-1, 'X'}, {-1, 'Y'}};
  return cycle[k % 4];
}

// ---------------------------------------------------------------------------
// Gate circuits

struct SingleQubitGate {
  int qubit;
  Mat2c u;
  std::string label;
};
struct CxGate {
  int control;
  int target;
};
struct FlipGate {
  int qubit;
};
// Free evolution under the environment Hamiltonian.
struct EvolveSegment {
  double duration;
};
using Gate = std::variant<SingleQubitGate, CxGate, FlipGate, EvolveSegment>;

struct GateCircuit {
  int num_qubits = 0;
  std::vector<Gate> gates;

  void check(int q) const {
    if (q < 0 || q >= num_qubits) throw InvalidInput("gate qubit index out of range");
  }
  GateCircuit& single(int q, const Mat2c& u, std::string label) {
    check(q);
    if (!is_unitary(u)) throw InvalidInput("single-qubit gate is not unitary");
    gates.push_back(SingleQubitGate{q, u, std::move(label)});
    return *this;
  }
  GateCircuit& cx(int c, int t) {
    check(c);
    check(t);
    if (c == t) throw InvalidInput("CX needs distinct qubits");
    gates.push_back(CxGate{c, t});
    return *this;
  }
  GateCircuit& flip(int q) {
    check(q);
    gates.push_back(FlipGate{q});
    return *this;
  }
  GateCircuit& evolve(double t) {
    if (!(t >= 0.0)) throw InvalidInput("negative segment duration");
    if (t > 0.0) gates.push_back(EvolveSegment{t});
    return *this;
  }
  GateCircuit& append(const GateCircuit& o) {
    if (o.num_qubits > num_qubits) throw InvalidInput("appended circuit is wider");
    gates.insert(gates.end(), o.gates.begin(), o.gates.end());
    return *this;
  }

  int count_cx() const {
    return static_cast<int>(std::count_if(gates.begin(), gates.end(),
                                          [](const Gate& g) { return std::holds_alternative<CxGate>(g); }));
  }
  int count_flips() const {
    return static_cast<int>(std::count_if(gates.begin(), gates.end(),
                                          [](const Gate& g) { return std::holds_alternative<FlipGate>(g); }));
  }
  double duration() const {
    double t = 0.0;
    for (const auto& g : gates)
      if (const auto* e = std::get_if<EvolveSegment>(&g)) t += e->duration;
    return t;
  }
};

// Runs the circuit on register qubits 0..num_qubits-1 of the state. CX gates are
// applied ideally; segments evolve under `env`.
inline void execute(const GateCircuit& c, PureState& s, const DiagonalHamiltonian& env = {}) {
  if (c.num_qubits > s.num_qubits()) throw InvalidInput("circuit wider than register");
  std::optional<Vec> energies;
  for (const auto& g : c.gates) {
    if (const auto* sg = std::get_if<SingleQubitGate>(&g)) s.apply_single(sg->qubit, sg->u);
    else if (const auto* cg = std::get_if<CxGate>(&g)) s.apply_cx(cg->control, cg->target);
    else if (const auto* fg = std::get_if<FlipGate>(&g)) s.apply_x(fg->qubit);
    else {
      if (!energies) energies = env.energies(s.num_qubits());
      s.apply_phases(*energies, std::get<EvolveSegment>(g).duration);
    }
  }
}

// Dense unitary of a circuit built from ideal gates only.
inline CMat circuit_unitary(const GateCircuit& c) {
  const Eigen::Index dim = Eigen::Index(1) << c.num_qubits;
  CMat U(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    CVec e = CVec::Zero(dim);
    e(b) = 1.0;
    auto s = PureState::from_amplitudes(e);
    execute(c, s);
    U.col(b) = s.amplitudes();
  }
  return U;
}

// ---------------------------------------------------------------------------
// Flip schedules from sign rows

// rows[i][s] is the sign of qubit i during segment s. Flips go between segments
// where the sign changes; a final flip restores any qubit left at -1.
inline FlipSchedule schedule_from_sign_rows(const std::vector<std::vector<int>>& rows, double t) {
  const int N = static_cast<int>(rows.size());
  const int M = N ? static_cast<int>(rows[0].size()) : 0;
  FlipSchedule s{M * t, {}, std::vector<int>(N, 1), std::vector<int>(N, 1)};
  for (int i = 0; i < N; ++i)
    if (rows[i][0] != 1) throw InvalidInput("sign rows must start at +1");
  for (int seg = 1; seg <= M; ++seg) {
    FlipEvent ev{seg * t, {}};
    for (int i = 0; i < N; ++i) {
      const int next = seg < M ? rows[i][seg] : 1;
      if (next != rows[i][seg - 1]) ev.qubits.push_back(i);
    }
    if (!ev.qubits.empty()) s.events.push_back(ev);
  }
  return s;
}

inline int ceil_log2(int N) {
  int k = 0;
  while ((1 << k) < N) ++k;
  return k;
}

struct DecouplingSchedule {
  FlipSchedule schedule;
  int flip_count;  // N + 2^(k-1) N
};

// Recursive halving W^(k): at level j the qubits in the first half of every
// subset flip between the two copies of W^(j-1), and flip back at the end. One
// extra global flip at half time is kept as its own event, so the control
// register ends in the all -1 frame.
inline DecouplingSchedule decoupling_schedule(int N, double t) {
  if (N < 2) throw InvalidInput("decoupling needs at least two control qubits");
  if (!(t > 0.0)) throw InvalidInput("segment time must be positive");
  const int k = ceil_log2(N);
  const int M = 1 << k;
  // in_first[j][i]: qubit i in the flipped half at level j (1 = finest).
  std::vector<std::vector<bool>> in_first(k + 1, std::vector<bool>(N, false));
  std::vector<std::vector<int>> subsets{std::vector<int>(N)};
  std::iota(subsets[0].begin(), subsets[0].end(), 0);
  for (int level = k; level >= 1; --level) {
    std::vector<std::vector<int>> next;
    for (const auto& sub : subsets) {
      const std::size_t h = (sub.size() + 1) / 2;
      std::vector<int> a(sub.begin(), sub.begin() + h), b(sub.begin() + h, sub.end());
      for (int i : a) in_first[level][i] = true;
      if (!a.empty()) next.push_back(a);
      if (!b.empty()) next.push_back(b);
    }
    subsets = std::move(next);
  }
  std::vector<std::vector<int>> rows(N, std::vector<int>(M, 1));
  for (int i = 0; i < N; ++i)
    for (int s = 0; s < M; ++s)
      for (int level = 1; level <= k; ++level)
        if (in_first[level][i] && ((s >> (level - 1)) & 1)) rows[i][s] = -rows[i][s];
  auto sched = schedule_from_sign_rows(rows, t);
  FlipEvent global{(M / 2) * t, std::vector<int>(N)};
  std::iota(global.qubits.begin(), global.qubits.end(), 0);
  const auto at = std::find_if(sched.events.begin(), sched.events.end(),
                               [&](const FlipEvent& e) { return e.t > global.t; });
  sched.events.insert(at, std::move(global));
  sched.terminal_frame.assign(N, -1);
  return {std::move(sched), N + (M / 2) * N};
}

// Walsh sign rows: the pair shares one row, every other qubit a distinct row,
// none of them constant. Non-pair C-C and all C-S terms average to zero.
inline FlipSchedule pair_isolation_schedule(int N, std::pair<int, int> pair, double t) {
  const auto [a, b] = pair;
  if (a == b || a < 0 || b < 0 || a >= N || b >= N) throw InvalidInput("invalid qubit pair");
  if (!(t > 0.0)) throw InvalidInput("segment time must be positive");
  const int M = 1 << std::max(1, ceil_log2(N));
  auto walsh = [M](int r) {
    std::vector<int> row(M);
    for (int s = 0; s < M; ++s) row[s] = (__builtin_popcount(r & s) & 1) ? -1 : 1;
    return row;
  };
  // Cheapest rows first: fewest sign changes including the restoring flip.
  std::vector<int> order(M - 1);
  std::iota(order.begin(), order.end(), 1);
  auto cost = [&](int r) {
    const auto row = walsh(r);
    int c = row.back() == -1;
    for (int s = 1; s < M; ++s) c += row[s] != row[s - 1];
    return c;
  };
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return cost(x) < cost(y); });
  std::vector<std::vector<int>> rows(N);
  rows[a] = rows[b] = walsh(order[0]);
  int next = 1;
  for (int i = 0; i < N; ++i)
    if (i != a && i != b) rows[i] = walsh(order[next++]);
  return schedule_from_sign_rows(rows, t);
}

inline void append_schedule(GateCircuit& c, const FlipSchedule& s) {
  double last = 0.0;
  for (const auto& ev : s.events) {
    c.evolve(ev.t - last);
    for (int q : ev.qubits) c.flip(q);
    last = ev.t;
  }
  c.evolve(s.duration - last);
}

// CX(a -> b) = H_b CZ H_b with CZ = e^{i pi/4 Z_a} e^{i pi/4 Z_b} e^{-i pi/4 Z_a Z_b}
// up to a global phase; the ZZ factor comes from isolating f^C_ab.
inline GateCircuit compile_cx(int a, int b, const Mat& control_self) {
  const int N = static_cast<int>(control_self.rows());
  const double f = control_self(a, b);
  if (!(f > 0.0)) throw NoSolution("no coupling between the CX qubits");
  const int M = 1 << std::max(1, ceil_log2(N));
  GateCircuit c{N, {}};
  c.single(b, pauli::H(), "H");
  c.single(a, pauli::rotation(pauli::Z(), -pi / 4), "S");
  c.single(b, pauli::rotation(pauli::Z(), -pi / 4), "S");
  append_schedule(c, pair_isolation_schedule(N, {a, b}, pi / (4.0 * f * M)));
  c.single(b, pauli::H(), "H");
  return c;
}

inline double cx_time(int a, int b, const Mat& control_self) { return pi / (4.0 * control_self(a, b)); }

// Replaces every CX by its ZZ realization.
inline GateCircuit compile_circuit(const GateCircuit& in, const Mat& control_self) {
  GateCircuit out{in.num_qubits, {}};
  for (const auto& g : in.gates) {
    if (const auto* cg = std::get_if<CxGate>(&g)) out.append(compile_cx(cg->control, cg->target, control_self));
    else out.gates.push_back(g);
  }
  return out;
}

enum class CxTopology { star, chain };

namespace detail {
inline std::vector<std::pair<int, int>> encoder_pairs(int N, CxTopology topo) {
  std::vector<std::pair<int, int>> p;
  for (int i = 1; i < N; ++i) p.push_back(topo == CxTopology::star ? std::pair{0, i} : std::pair{i - 1, i});
  return p;
}
}  // namespace detail

// Decode to qubit 0, apply V there, encode again. Acts as V on span{|0..0>, |1..1>}.
inline GateCircuit logical_gate_circuit(const Mat2c& V, int N, CxTopology topo = CxTopology::star) {
  if (N < 1) throw InvalidInput("need at least one control qubit");
  if (!is_unitary(V)) throw InvalidInput("logical gate is not unitary");
  const auto pairs = detail::encoder_pairs(N, topo);
  GateCircuit c{N, {}};
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) c.cx(it->first, it->second);
  c.single(0, V, "V");
  for (const auto& [x, y] : pairs) c.cx(x, y);
  return c;
}

// From |0..0> to (|0..0> + |1..1>)/sqrt2 with N - 1 CX gates.
inline GateCircuit logical_plus_prep_circuit(int N, CxTopology topo = CxTopology::star) {
  if (N < 1) throw InvalidInput("need at least one control qubit");
  GateCircuit c{N, {}};
  c.single(0, pauli::H(), "H");
  for (const auto& [x, y] : detail::encoder_pairs(N, topo)) c.cx(x, y);
  return c;
}

// Summed CX time of a circuit for the given f^C.
inline double ideal_cx_time(const GateCircuit& c, const Mat& control_self) {
  double t = 0.0;
  for (const auto& g : c.gates)
    if (const auto* cg = std::get_if<CxGate>(&g)) t += cx_time(cg->control, cg->target, control_self);
  return t;
}

// Logical angle of R_z rotations phi_i in frame c (c_i = +-1): sum_i c_i phi_i.
inline double logical_z_angle(const std::vector<double>& phi, const std::vector<int>& frame) {
  if (phi.size() != frame.size()) throw InvalidInput("angle and frame sizes differ");
  double a = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) a += frame[i] * phi[i];
  return a;
}

// Physical rotations R_z(phi_i) = exp(-i phi_i Z / 2).
inline GateCircuit logical_z_rotation(const std::vector<double>& phi, const std::vector<double>& frame) {
  if (phi.size() != frame.size()) throw InvalidInput("angle and frame sizes differ");
  GateCircuit c{static_cast<int>(phi.size()), {}};
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] == 0.0) continue;
    if (std::abs(std::abs(frame[i]) - 1.0) > 1e-12)
      throw InvalidInput("rotated control qubit must have frame entry +-1");
    c.single(static_cast<int>(i), pauli::rotation(pauli::Z(), phi[i] / 2), "Rz");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Walgate sequential measurement

namespace detail {

// Basis u of the leading qubit such that the conditional remainders of psi and
// psi_perp stay orthogonal on both outcomes.
inline MeasurementBasis walgate_basis(const CVec& psi, const CVec& perp) {
  const Eigen::Index h = psi.size() / 2;
  const CVec p0 = psi.head(h), p1 = psi.tail(h), q0 = perp.head(h), q1 = perp.tail(h);
  Mat2c M;
  M << p0.dot(q0), p0.dot(q1), p1.dot(q0), p1.dot(q1);
  if (M.cwiseAbs().maxCoeff() < 1e-14) return MeasurementBasis::Z();
  const Mat2c A = (M + M.adjoint()) / 2.0;
  const Mat2c B = (M - M.adjoint()) / cplx(0, 2);
  Eigen::SelfAdjointEigenSolver<Mat2c> es(A);
  const Eigen::Vector2cd e1 = es.eigenvectors().col(0), e2 = es.eigenvectors().col(1);
  const cplx b12 = e1.dot(B * e2);
  const double theta = std::abs(b12) > 0 ? pi / 2 - std::arg(b12) : 0.0;
  const Eigen::Vector2cd x = (e1 + std::polar(1.0, theta) * e2) / std::sqrt(2.0);
  return MeasurementBasis::from(x.conjugate());
}

inline CVec conditional(const CVec& v, const Eigen::Vector2cd& w) {
  const Eigen::Index h = v.size() / 2;
  return std::conj(w(0)) * v.head(h) + std::conj(w(1)) * v.tail(h);
}

inline void check_pair(const CVec& psi, const CVec& perp, std::size_t nq) {
  if (psi.size() != perp.size() || psi.size() != (Eigen::Index(1) << nq))
    throw InvalidInput("logical basis states do not match the control register");
  if (std::abs(psi.norm() - 1) > 1e-9 || std::abs(perp.norm() - 1) > 1e-9)
    throw InvalidInput("logical basis states must be normalized");
  if (std::abs(psi.dot(perp)) > 1e-10) throw InvalidInput("states to distinguish are not orthogonal");
}

}  // namespace detail

struct WalgateResult {
  bool is_psi;
  std::vector<int> physical_outcomes;
  std::vector<MeasurementBasis> bases;
};

// Measures `qubits` one at a time in adaptive bases. With `forced`, the physical
// outcomes are chosen inside the requested logical branch (+1 = psi).
inline WalgateResult walgate_measurement(PureState& s, const CVec& psi, const CVec& perp,
                                         const std::vector<int>& qubits, std::mt19937_64* rng,
                                         std::optional<int> forced = {}) {
  detail::check_pair(psi, perp, qubits.size());
  WalgateResult r{false, {}, {}};
  CVec a = psi, b = perp;
  for (int q : qubits) {
    const auto basis = detail::walgate_basis(a, b);
    std::optional<int> pick;
    if (forced) {
      const CVec& wanted = *forced == 1 ? a : b;
      const double keep_first = detail::conditional(wanted, basis.first).norm();
      pick = keep_first > 1e-9 ? 1 : -1;
      // Both branches of the joint state must be reachable, not only the classical one.
      if (outcome_probability(s, q, *pick == 1 ? basis.first : basis.second) < 1e-14) pick = -*pick;
    }
    const auto m = measure_physical(s, q, basis, rng, pick);
    const auto& w = m.outcome == 1 ? basis.first : basis.second;
    a = detail::conditional(a, w);
    b = detail::conditional(b, w);
    r.physical_outcomes.push_back(m.outcome);
    r.bases.push_back(basis);
  }
  r.is_psi = std::abs(a(0)) > std::abs(b(0));
  if (forced && r.is_psi != (*forced == 1)) throw NoSolution("forced logical outcome has zero probability");
  return r;
}

// Exact probabilities of the two logical outcomes, enumerating all physical branches.
inline std::pair<double, double> walgate_outcome_probabilities(const PureState& s, const CVec& psi,
                                                               const CVec& perp, const std::vector<int>& qubits) {
  detail::check_pair(psi, perp, qubits.size());
  double p_psi = 0.0, p_perp = 0.0;
  auto rec = [&](auto&& self, const PureState& st, const CVec& a, const CVec& b, std::size_t k,
                 double weight) -> void {
    if (weight < 1e-300) return;
    if (k == qubits.size()) {
      (std::abs(a(0)) > std::abs(b(0)) ? p_psi : p_perp) += weight;
      return;
    }
    const auto basis = detail::walgate_basis(a, b);
    for (const auto& w : {basis.first, basis.second}) {
      const double p = outcome_probability(st, qubits[k], w);
      if (p < 1e-15) continue;
      PureState next = st;
      collapse(next, qubits[k], w);
      self(self, next, detail::conditional(a, w), detail::conditional(b, w), k + 1, weight * p);
    }
  };
  rec(rec, s, psi, perp, 0, 1.0);
  return {p_psi, p_perp};
}

// ---------------------------------------------------------------------------
// Resource ledger

struct ResourceLedger {
  int N = 0, n = 0;
  int eta_lambda = 0;             // subspace flips, all uses
  int eta_lambda_max_use = 0;     // largest single subspace use
  int eta_logical = 0;            // initialization + logical gates + resets
  int eta_init_max = 0;           // largest single |+> preparation
  int eta_gate_max = 0;           // largest single logical gate
  int eta_correction = 0;
  int eta_decoupling = 0;
  bool lambda_per_use_ok = true;  // eta_lambda per use <= N
  bool init_ok = true;            // eta_i <= N (N^2 - 1)
  bool gate_ok = true;            // eta_V <= 2 N (N^2 - 1)
  std::optional<bool> synthesis_ok;  // eta_lambda <= 2 N (2^n - 1)
  std::optional<bool> graph_ok;      // eta_lambda <= |E| N

  bool all_ok() const {
    return lambda_per_use_ok && init_ok && gate_ok && synthesis_ok.value_or(true) && graph_ok.value_or(true);
  }
};

inline ResourceLedger flip_budget(const ProtocolTrace& trace) {
  ResourceLedger L;
  L.N = trace.num_controls;
  L.n = trace.num_targets;
  for (const auto& s : trace.steps) {
    switch (s.category) {
      case FlipCategory::subspace:
        L.eta_lambda += s.flips;
        L.eta_lambda_max_use = std::max(L.eta_lambda_max_use, s.flips);
        break;
      case FlipCategory::reset: L.eta_logical += s.flips; break;
      case FlipCategory::initialization:
        L.eta_logical += s.flips;
        L.eta_init_max = std::max(L.eta_init_max, s.flips);
        break;
      case FlipCategory::logical_gate:
        L.eta_logical += s.flips;
        L.eta_gate_max = std::max(L.eta_gate_max, s.flips);
        break;
      case FlipCategory::correction: L.eta_correction += s.flips; break;
      case FlipCategory::decoupling: L.eta_decoupling += s.flips; break;
      case FlipCategory::none: break;
    }
  }
  const int N = L.N;
  L.lambda_per_use_ok = L.eta_lambda_max_use <= N;
  L.init_ok = L.eta_init_max <= N * (N * N - 1);
  L.gate_ok = L.eta_gate_max <= 2 * N * (N * N - 1);
  if (trace.full_synthesis) L.synthesis_ok = L.eta_lambda <= 2 * N * ((1 << L.n) - 1);
  if (trace.edges > 0) L.graph_ok = L.eta_lambda <= trace.edges * N;
  return L;
}

}  // namespace rce
