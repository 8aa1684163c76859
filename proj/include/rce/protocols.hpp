#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rce/geometry.hpp"
#include "rce/logical_control.hpp"
#include "rce/pattern_solver.hpp"
#include "rce/simulator.hpp"
#include "rce/trace.hpp"

namespace rce {

enum class SimulationMode { logical, physical };
enum class LogicalControl { global, local };

struct EngineOptions {
  SimulationMode mode = SimulationMode::logical;
  LogicalControl control = LogicalControl::global;
  CxTopology topology = CxTopology::star;
  bool control_self = true;   // H^C on during physical evolution
  bool target_self = false;   // H^S on during every step
  std::optional<double> logical_gate_time;  // t_V override
  double measurement_time = 0.0;            // t_M
  double field_strength = 1.0;              // X-rotation rate
  int trotter_steps = 0;                    // 0: exact control-rotation blocks
  std::uint64_t seed = 1;
  std::vector<int> forced_outcomes;         // consumed by logical measurements, +1 / -1
  SolveStrategy strategy = SolveStrategy::max_coupling;
};

// Runs protocol steps on either the one-qubit logical register or the full
// physical register, logging durations and flips.
class Engine {
 public:
  explicit Engine(Layout layout, EngineOptions opts = {}, std::optional<CVec> target_state = {})
      : layout_(std::move(layout)),
        opts_(std::move(opts)),
        F_(build_coupling_matrix(layout_)),
        self_(build_self_couplings(layout_)),
        rng_(opts_.seed) {
    N_ = layout_.num_controls();
    n_ = layout_.num_targets();
    frame_.assign(N_, 1);
    CVec s = target_state ? *target_state : CVec::Constant(Eigen::Index(1) << n_, std::pow(2.0, -n_ / 2.0));
    if (s.size() != (Eigen::Index(1) << n_)) throw InvalidInput("target state size mismatch");
    s /= s.norm();
    const int nc = physical() ? N_ : 1;
    CVec full = CVec::Zero(Eigen::Index(1) << (nc + n_));
    full.head(s.size()) = s;  // controls all in |0>
    state_ = PureState::from_amplitudes(full, physical() ? RegisterMode::physical : RegisterMode::logical, nc);
    if (physical()) {
      env_ = control_target_hamiltonian(F_);
      if (opts_.control_self) env_.append(self_hamiltonian(self_.control_self, 0));
      env_energies_ = env_.energies(state_.num_qubits());
    }
    if (opts_.target_self) {
      const auto hs = self_hamiltonian(self_.target_self, nc);
      if (!hs.terms.empty()) target_self_energies_ = hs.energies(state_.num_qubits());
    }
    trace_.num_controls = N_;
    trace_.num_targets = n_;
  }

  const Layout& layout() const { return layout_; }
  const EngineOptions& options() const { return opts_; }
  const CouplingMatrix& coupling_matrix() const { return F_; }
  const SelfCouplings& self_couplings() const { return self_; }
  int num_controls() const { return N_; }
  int num_targets() const { return n_; }
  bool physical() const { return opts_.mode == SimulationMode::physical; }
  bool local() const { return opts_.control == LogicalControl::local; }
  const PureState& state() const { return state_; }
  const std::vector<int>& frame() const { return frame_; }
  ProtocolTrace& trace() { return trace_; }
  const ProtocolTrace& trace() const { return trace_; }
  std::mt19937_64& rng() { return rng_; }

  // Logical gate time: override, or the CX time of the decode/encode circuit.
  double gate_time() const {
    if (opts_.logical_gate_time) return *opts_.logical_gate_time;
    return N_ < 2 ? 0.0 : ideal_cx_time(logical_gate_circuit(pauli::I(), N_, opts_.topology), self_.control_self);
  }
  double prep_time() const {
    if (opts_.logical_gate_time) return *opts_.logical_gate_time / 2;
    return N_ < 2 ? 0.0 : ideal_cx_time(logical_plus_prep_circuit(N_, opts_.topology), self_.control_self);
  }

  // Control vector realizing `direction` at maximal strength (cached).
  const SubspaceVector& solve(const InteractionPattern& direction) {
    std::vector<double> key(direction.lambdas.data(), direction.lambdas.data() + direction.size());
    auto it = solved_.find(key);
    if (it == solved_.end()) it = solved_.emplace(key, solve_pattern(F_, direction, opts_.strategy)).first;
    return it->second;
  }

  // Evolves under the pattern F c for tau.
  void couple(const SubspaceVector& c, double tau, const std::string& label,
              FlipCategory category = FlipCategory::subspace) {
    require_control("couple");
    if (c.size() != N_) throw InvalidInput("subspace vector size does not match the controls");
    TraceStep st{"couple", label, tau, 0, category, {}, {}, {}};
    st.c.assign(c.c.data(), c.c.data() + N_);
    const Vec lam = F_.F * c.c;
    st.pattern.assign(lam.data(), lam.data() + n_);
    if (tau > 0.0) {
      const auto sched = compile_flip_schedule(c, tau, frame_);
      st.flips = sched.flip_count();
      if (physical()) {
        double last = 0.0;
        for (const auto& ev : sched.events) {
          state_.apply_phases(env_energies_, ev.t - last);
          for (int q : ev.qubits) state_.apply_x(q);
          last = ev.t;
        }
        state_.apply_phases(env_energies_, tau - last);
      } else {
        state_ = evolve_diagonal(std::move(state_), logical_hamiltonian(lam), tau);
      }
      frame_ = sched.terminal_frame;
    }
    record(std::move(st));
  }

  // Accumulates phase * direction_j on target j; returns the time used.
  double couple_pattern(const InteractionPattern& direction, double phase, const std::string& label,
                        FlipCategory category = FlipCategory::subspace) {
    if (phase == 0.0) return 0.0;
    const SubspaceVector& c = solve(direction);
    const double tau = std::abs(phase) * c.scale;
    couple(phase > 0 ? c : c.negated(), tau, label, category);
    return tau;
  }

  void logical_unitary(const Mat2c& V, const std::string& label, FlipCategory category = FlipCategory::logical_gate) {
    require_control("logical gate");
    if (!is_unitary(V)) throw InvalidInput("logical gate is not unitary");
    TraceStep st{"logical_gate", label, gate_time(), 0, category, {}, {}, {}};
    if (local() && N_ > 1) {
      st.flips = restore_frame();
      const auto circ = compile_circuit(logical_gate_circuit(V, N_, opts_.topology), self_.control_self);
      st.flips += circ.count_flips();
      if (physical()) execute(circ, state_, env_);
    }
    apply_logical(V);
    record(std::move(st));
  }

  // exp(-i theta Z_L) by a physical Z rotation on control 0; instantaneous.
  void logical_z(double theta, const std::string& label) {
    require_control("logical Z rotation");
    apply_logical_z(theta);
    record({"rotation", label, 0.0, 0, FlipCategory::none, {}, {}, {}});
  }

  // exp(-i theta X_L) as H, Z rotation by field, H.
  void x_rotation(double theta, const std::string& label) {
    require_control("logical X rotation");
    if (local() && N_ > 1) {
      logical_unitary(pauli::H(), label + ":H");
      TraceStep st{"rotation", label, std::abs(theta) / opts_.field_strength, 0, FlipCategory::none, {}, {}, {}};
      apply_logical_z(theta);
      record(std::move(st));
      logical_unitary(pauli::H(), label + ":H");
      return;
    }
    const double tv = gate_time();
    record({"logical_gate", label + ":H", tv, 0, FlipCategory::logical_gate, {}, {}, {}});
    apply_logical(pauli::rotation(pauli::X(), theta));
    record({"rotation", label, std::abs(theta) / opts_.field_strength, 0, FlipCategory::none, {}, {}, {}});
    record({"logical_gate", label + ":H", tv, 0, FlipCategory::logical_gate, {}, {}, {}});
  }

  // Z-basis reset of every control qubit to |0>.
  void reset_control() {
    int flips = 0;
    const int nc = physical() ? N_ : 1;
    for (int q = 0; q < nc; ++q) {
      const auto m = measure_physical(state_, q, MeasurementBasis::Z(), &rng_);
      if (m.outcome == -1) {
        state_.apply_x(q);
        ++flips;
      }
    }
    frame_.assign(N_, 1);
    control_valid_ = true;
    record({"reset", "reset C", 0.0, physical() ? flips : 0, FlipCategory::reset, {}, {}, {}});
  }

  // Reset, then |+>_C.
  void prepare_plus() {
    reset_control();
    TraceStep st{"prepare", "prepare |+>_C", prep_time(), 0, FlipCategory::initialization, {}, {}, {}};
    if (local() && N_ > 1) {
      const auto circ = compile_circuit(logical_plus_prep_circuit(N_, opts_.topology), self_.control_self);
      st.flips = circ.count_flips();
      if (physical()) execute(circ, state_, env_);
      else state_.apply_single(0, pauli::H());
    } else {
      apply_logical(pauli::H());
    }
    record(std::move(st));
  }

  // Measures the logical qubit in {u, u_perp}; +1 for u.
  int measure_logical(const Eigen::Vector2cd& u, const std::string& label) {
    require_control("logical measurement");
    const auto basis = MeasurementBasis::from(u);
    std::optional<int> forced;
    if (next_forced_ < opts_.forced_outcomes.size()) forced = opts_.forced_outcomes[next_forced_++];
    int outcome;
    if (physical()) {
      std::vector<int> qubits(N_);
      for (int q = 0; q < N_; ++q) qubits[q] = q;
      const auto r = walgate_measurement(state_, embed(basis.first), embed(basis.second), qubits, &rng_, forced);
      outcome = r.is_psi ? 1 : -1;
    } else {
      outcome = measure_physical(state_, 0, basis, &rng_, forced).outcome;
    }
    control_valid_ = false;
    TraceStep st{"measure", label, opts_.measurement_time, 0, FlipCategory::none, outcome, {}, {}};
    record(std::move(st));
    return outcome;
  }

  // No C-S coupling for t: all controls flip at t / 2.
  void idle(double t, const std::string& label) {
    if (t <= 0.0) return;
    if (physical() || N_ > 0) {
      couple(SubspaceVector{Vec::Zero(N_), 1.0}, t, label, FlipCategory::decoupling);
      trace_.steps.back().kind = "idle";
    }
  }

  // exp(-i tau [sum_j lambda_j Z^C Z_j + omega X^C]) with lambda = F c for `direction`.
  void field_evolution(const InteractionPattern& direction, double omega, double tau, const std::string& label) {
    require_control("control rotation");
    const SubspaceVector& c = solve(direction);
    const Vec lam = F_.F * c.c;
    TraceStep st{"control_rotation", label, tau, 0, FlipCategory::subspace, {}, {}, {}};
    st.c.assign(c.c.data(), c.c.data() + N_);
    st.pattern.assign(lam.data(), lam.data() + n_);
    const int k = opts_.trotter_steps;
    if (k == 0 && (!physical() || (c.is_integer() && !local()))) {
      if (physical()) {
        // Move the frame onto c with instantaneous flips, then evolve exactly.
        for (int i = 0; i < N_; ++i)
          if ((c.c(i) > 0 ? 1 : -1) != frame_[i]) {
            relabel_flip(i);
            ++st.flips;
          }
        std::vector<int> qubits(N_);
        for (int q = 0; q < N_; ++q) qubits[q] = q;
        evolve_with_field(state_, env_, LogicalX{qubits, frame_}, omega, tau);
      } else {
        state_ = evolve_control_rotation(std::move(state_), InteractionPattern(lam), omega, tau);
      }
      record(std::move(st));
      return;
    }
    if (k == 0) throw InvalidInput("physical control rotation with fractional or local control needs trotter_steps");
    // First-order Trotter: coupling slice, then field slice. Each slice is its own step.
    const double dt = tau / k;
    for (int s = 0; s < k; ++s) {
      couple(c, dt, label + ":coupling");
      field_step(omega * dt);
      record({"field", label + ":field", dt, 0, FlipCategory::none, {}, {}, {}});
    }
  }

  // Logical-register view (C on qubit 0). Needs C inside its logical subspace.
  PureState logical_state() const {
    if (!physical()) return state_;
    if (!control_valid_) throw InvalidInput("control register is not in a known logical frame");
    const Eigen::Index half = Eigen::Index(1) << n_;
    Eigen::Index zero = 0, one = 0;
    for (int i = 0; i < N_; ++i) {
      one = (one << 1) | 1;
      zero = (zero << 1) | (frame_[i] == -1 ? 1 : 0);
    }
    const Eigen::Index complement = zero ^ one;
    CVec out(2 * half);
    for (Eigen::Index s = 0; s < half; ++s) {
      out(s) = state_((zero << n_) | s);
      out(half + s) = state_((complement << n_) | s);
    }
    PureState p(1 + n_, RegisterMode::logical, 1);
    p.amplitudes() = out;
    return p;
  }

  // Probability weight outside span{|f>, |-f>} (physical mode).
  double leakage() const {
    if (!physical()) return 0.0;
    return std::max(0.0, 1.0 - logical_state().amplitudes().squaredNorm());
  }

  ProtocolTrace finish(const std::string& protocol) {
    trace_.protocol = protocol;
    trace_.final_state = control_valid_ ? logical_state() : state_;
    return trace_;
  }

  void note(std::string s) { trace_.notes.push_back(std::move(s)); }

 private:
  Layout layout_;
  EngineOptions opts_;
  CouplingMatrix F_;
  SelfCouplings self_;
  std::mt19937_64 rng_;
  int N_ = 0, n_ = 0;
  PureState state_;
  std::vector<int> frame_;
  bool control_valid_ = true;
  DiagonalHamiltonian env_;
  Vec env_energies_;
  std::optional<Vec> target_self_energies_;
  ProtocolTrace trace_;
  std::size_t next_forced_ = 0;
  std::map<std::vector<double>, SubspaceVector> solved_;

  void require_control(const char* what) const {
    if (!control_valid_) throw InvalidInput(std::string(what) + ": control register not prepared");
  }

  void record(TraceStep st) {
    if (target_self_energies_ && st.duration > 0.0) state_.apply_phases(*target_self_energies_, st.duration);
    trace_.steps.push_back(std::move(st));
  }

  // Control-register vector of a logical state in the current frame.
  CVec embed(const Eigen::Vector2cd& v) const {
    CVec out = CVec::Zero(Eigen::Index(1) << N_);
    Eigen::Index zero = 0;
    for (int i = 0; i < N_; ++i) zero = (zero << 1) | (frame_[i] == -1 ? 1 : 0);
    out(zero) = v(0);
    out(zero ^ ((Eigen::Index(1) << N_) - 1)) = v(1);
    return out;
  }

  void apply_logical(const Mat2c& V) {
    if (!physical()) {
      state_.apply_single(0, V);
      return;
    }
    if (local() && N_ > 1) return;  // already applied by the compiled circuit
    const Eigen::Index half = Eigen::Index(1) << n_;
    Eigen::Index zero = 0;
    for (int i = 0; i < N_; ++i) zero = (zero << 1) | (frame_[i] == -1 ? 1 : 0);
    const Eigen::Index one = zero ^ ((Eigen::Index(1) << N_) - 1);
    for (Eigen::Index s = 0; s < half; ++s) {
      const Eigen::Index b0 = (zero << n_) | s, b1 = (one << n_) | s;
      const cplx a0 = state_(b0), a1 = state_(b1);
      state_.amplitudes()(b0) = V(0, 0) * a0 + V(0, 1) * a1;
      state_.amplitudes()(b1) = V(1, 0) * a0 + V(1, 1) * a1;
    }
  }

  void apply_logical_z(double theta) {
    if (physical()) {
      std::vector<double> phi(N_, 0.0), frame(frame_.begin(), frame_.end());
      phi[0] = 2.0 * theta * frame_[0];
      execute(logical_z_rotation(phi, frame), state_);
    } else {
      state_.apply_single(0, pauli::rotation(pauli::Z(), theta));
    }
  }

  // Physical flip of control i that only relabels the frame.
  void relabel_flip(int i) {
    if (physical()) state_.apply_x(i);
    frame_[i] = -frame_[i];
  }

  // Flips every control back to frame +1 before a compiled circuit.
  int restore_frame() {
    int flips = 0;
    for (int i = 0; i < N_; ++i)
      if (frame_[i] == -1) {
        relabel_flip(i);
        ++flips;
      }
    return flips;
  }

  void field_step(double theta) {
    if (physical() && !local()) {
      std::vector<int> qubits(N_);
      for (int q = 0; q < N_; ++q) qubits[q] = q;
      LogicalX{qubits, frame_}.apply(state_, theta);
    } else if (physical()) {
      logical_unitary(pauli::H(), "trotter:H");
      apply_logical_z(theta);
      logical_unitary(pauli::H(), "trotter:H");
    } else {
      state_.apply_single(0, pauli::rotation(pauli::X(), theta));
    }
  }
};

// ---------------------------------------------------------------------------
// Protocols

namespace detail {
inline InteractionPattern indicator(int n, const std::vector<int>& subset) {
  return InteractionPattern::on_subset(n, subset, 1.0);
}
inline void check_subset(const std::vector<int>& s, int n) {
  if (s.empty()) throw InvalidInput("target subset must be non-empty");
  std::set<int> seen;
  for (int j : s) {
    if (j < 0 || j >= n) throw InvalidInput("target index out of range");
    if (!seen.insert(j).second) throw InvalidInput("duplicate target in subset");
  }
}
}  // namespace detail

// U e^{-i phase X} U^dagger with C in the +1 eigenstate of G: exp(-i phase Z...Z) on S'.
inline void gate_sequence_multi_z(Engine& e, const std::vector<int>& subset, double phase) {
  detail::check_subset(subset, e.num_targets());
  e.prepare_plus();
  const auto G = nested_commutator_pauli(static_cast<int>(subset.size()));
  // |+> -> +1 eigenstate of G by a free Z rotation.
  const double turn = G.axis == 'X' ? (G.sign > 0 ? 0.0 : pi / 2) : (G.sign > 0 ? pi / 4 : -pi / 4);
  if (turn != 0.0) e.logical_z(turn, "C -> eigenstate of " + G.label());
  const auto dir = detail::indicator(e.num_targets(), subset);
  e.couple_pattern(dir, -pi / 4, "U^dagger");
  e.x_rotation(phase, "X rotation");
  e.couple_pattern(dir, pi / 4, "U");
}

inline ProtocolTrace gate_sequence_multi_z(const Layout& layout, const std::vector<int>& subset, double phase,
                                           const EngineOptions& opts = {}) {
  Engine e(layout, opts);
  gate_sequence_multi_z(e, subset, phase);
  return e.finish("gate_sequence_multi_z");
}

// Subset -> interaction phase omega_T; the synthesized diagonal is prod_T exp(-i omega_T Z_T).
struct PhaseTable {
  std::vector<std::pair<std::vector<int>, double>> entries;

  void validate(int n) const {
    if (entries.size() > (std::size_t(1) << n) - 1) throw InvalidInput("phase table longer than 2^n - 1 subsets");
    std::set<std::vector<int>> seen;
    for (const auto& [subset, phase] : entries) {
      detail::check_subset(subset, n);
      if (!std::isfinite(phase)) throw InvalidInput("non-finite phase");
      auto key = subset;
      std::sort(key.begin(), key.end());
      if (!seen.insert(key).second) throw InvalidInput("subset listed twice in phase table");
    }
  }
};

// Solves exp(i theta_b) = prod_T exp(-i omega_T Z_T(b)) up to a global phase.
inline PhaseTable phase_table_from_basis_phases(const Vec& theta) {
  int n = 0;
  while ((Eigen::Index(1) << n) < theta.size()) ++n;
  if ((Eigen::Index(1) << n) != theta.size() || n < 1) throw InvalidInput("need 2^n basis phases");
  PhaseTable t;
  const Eigen::Index dim = theta.size();
  for (Eigen::Index mask = 1; mask < dim; ++mask) {
    double w = 0.0;
    for (Eigen::Index b = 0; b < dim; ++b)
      w += theta(b) * ((__builtin_popcountll(static_cast<unsigned long long>(b & mask)) & 1) ? -1.0 : 1.0);
    w = -w / static_cast<double>(dim);
    if (std::abs(w) < 1e-15) continue;
    std::vector<int> subset;
    for (int j = 0; j < n; ++j)
      if (mask & (Eigen::Index(1) << (n - 1 - j))) subset.push_back(j);
    t.entries.push_back({subset, w});
  }
  return t;
}

inline void diagonal_state_synthesis(Engine& e, const PhaseTable& table) {
  table.validate(e.num_targets());
  e.trace().full_synthesis = true;
  for (const auto& [subset, phase] : table.entries) gate_sequence_multi_z(e, subset, phase);
}

inline ProtocolTrace diagonal_state_synthesis(const Layout& layout, const PhaseTable& table,
                                              const EngineOptions& opts = {}) {
  Engine e(layout, opts);
  diagonal_state_synthesis(e, table);
  return e.finish("diagonal_state_synthesis");
}

// Mediated Z on every qubit of `subset` with C in |0>_C: exp(-i pi/2 sum Z_j).
inline void mediated_z_correction(Engine& e, const std::vector<int>& subset, const std::string& label) {
  e.couple_pattern(detail::indicator(e.num_targets(), subset), pi / 2, label, FlipCategory::correction);
  e.trace().steps.back().kind = "correction";
}

// prod_{i<j in S'} CZ_ij by coupling, a G-basis measurement of C and a correction.
inline int measurement_cz(Engine& e, const std::vector<int>& subset) {
  detail::check_subset(subset, e.num_targets());
  e.prepare_plus();
  e.couple_pattern(detail::indicator(e.num_targets(), subset), pi / 4, "U");
  const auto G = nested_commutator_pauli(static_cast<int>(subset.size()) - 1);
  const int outcome = e.measure_logical(G.plus_eigenvector(), "measure C in " + G.label() + " basis");
  e.reset_control();
  if (outcome == -1) mediated_z_correction(e, subset, "R_-");
  e.note("measurement_cz: no residual C-S phase outside S' (compensation: none)");
  return outcome;
}

inline ProtocolTrace measurement_cz(const Layout& layout, const std::vector<int>& subset,
                                    const EngineOptions& opts = {}, std::optional<CVec> target_state = {}) {
  Engine e(layout, opts, std::move(target_state));
  measurement_cz(e, subset);
  return e.finish("measurement_cz");
}

inline void graph_state_prep(Engine& e, const std::vector<std::pair<int, int>>& edges) {
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a == b) throw InvalidInput("graph edges must not be self loops");
    if (a < 0 || b < 0 || a >= e.num_targets() || b >= e.num_targets()) throw InvalidInput("edge index out of range");
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) throw InvalidInput("duplicate edge");
  }
  e.trace().edges = static_cast<int>(edges.size());
  for (auto [a, b] : edges) measurement_cz(e, {a, b});
}

inline ProtocolTrace graph_state_prep(const Layout& layout, const std::vector<std::pair<int, int>>& edges,
                                      const EngineOptions& opts = {}) {
  Engine e(layout, opts);
  graph_state_prep(e, edges);
  return e.finish("graph_state_prep");
}

// Grows (|s> + |-s>)/sqrt2 over `qubits`, one Bell-type step per added qubit.
// Returns s-bar (+1 / -1 per listed qubit).
inline std::vector<int> df_ghz_prep(Engine& e, const std::vector<int>& qubits) {
  if (qubits.size() < 2) throw InvalidInput("GHZ preparation needs at least two target qubits");
  detail::check_subset(qubits, e.num_targets());
  std::vector<int> sbar{1};
  const int first = qubits[0];
  for (std::size_t k = 1; k < qubits.size(); ++k) {
    e.prepare_plus();
    e.couple_pattern(detail::indicator(e.num_targets(), {first, qubits[k]}), pi / 4, "U");
    const int outcome = e.measure_logical(ket_plus(), "M_x");
    e.reset_control();
    if (outcome == -1) {
      mediated_z_correction(e, {first}, "R_-");
      sbar.push_back(1);
    } else {
      sbar.push_back(-1);
    }
  }
  e.trace().frame_record = sbar;
  return sbar;
}

inline ProtocolTrace df_ghz_prep(const Layout& layout, const std::vector<int>& qubits, const EngineOptions& opts = {}) {
  Engine e(layout, opts);
  df_ghz_prep(e, qubits);
  return e.finish("df_ghz_prep");
}

struct ControlRotationParameters {
  double lambda, omega, tau;
};

// omega and tau for phase phi given coupling lambda on each of the two targets.
inline ControlRotationParameters control_rotation_parameters(double phi, double lambda) {
  if (!(phi > 0.0 && phi < pi / 2)) throw InvalidInput("phase must lie in (0, pi/2)");
  const double r = 1.0 - 2.0 * phi / pi;
  const double omega = 2.0 * lambda * r / std::sqrt(1.0 - r * r);
  return {lambda, omega, pi / std::hypot(omega, 2.0 * lambda)};
}

inline void control_rotation_entangler(Engine& e, std::pair<int, int> pair, double phi) {
  if (pair.first == pair.second) throw InvalidInput("pair needs distinct targets");
  const auto dir = detail::indicator(e.num_targets(), {pair.first, pair.second});
  const double lambda = 1.0 / e.solve(dir).scale;
  const auto p = control_rotation_parameters(phi, lambda);
  e.prepare_plus();
  e.field_evolution(dir, p.omega, p.tau, "control rotation");
  e.trace().values["phi"] = phi;
  e.trace().values["lambda"] = p.lambda;
  e.trace().values["omega"] = p.omega;
  e.trace().values["tau"] = p.tau;
}

inline ProtocolTrace control_rotation_entangler(const Layout& layout, std::pair<int, int> pair, double phi,
                                                const EngineOptions& opts = {}) {
  Engine e(layout, opts);
  control_rotation_entangler(e, pair, phi);
  return e.finish("control_rotation_entangler");
}

// Equal coupling to three targets with omega = lambda sqrt(5/3).
inline void control_rotation_three_qubit(Engine& e, const std::vector<int>& triple) {
  if (triple.size() != 3) throw InvalidInput("three targets required");
  detail::check_subset(triple, e.num_targets());
  const auto dir = detail::indicator(e.num_targets(), triple);
  const double lambda = 1.0 / e.solve(dir).scale;
  const double omega = lambda * std::sqrt(5.0) / std::sqrt(3.0);
  const double tau = std::sqrt(3.0) * pi / (2.0 * lambda * std::sqrt(2.0));
  e.prepare_plus();
  e.field_evolution(dir, omega, tau, "control rotation");
  e.trace().values["lambda"] = lambda;
  e.trace().values["omega"] = omega;
  e.trace().values["tau"] = tau;
}

inline ProtocolTrace control_rotation_three_qubit(const Layout& layout, const std::vector<int>& triple = {0, 1, 2},
                                                  const EngineOptions& opts = {}) {
  Engine e(layout, opts);
  control_rotation_three_qubit(e, triple);
  return e.finish("control_rotation_three_qubit");
}

// exp(-i pi/4 Z^C Z_i) exp(-i pi/4 Y^C Z_j) exp(-i pi/4 Z^C Z_i) on |+>_C.
inline void alternating_pattern_bell(Engine& e, std::pair<int, int> pair, double middle_phase = pi / 4) {
  const auto [i, j] = pair;
  if (i == j) throw InvalidInput("pair needs distinct targets");
  detail::check_subset({i, j}, e.num_targets());
  const auto di = detail::indicator(e.num_targets(), {i});
  const auto dj = detail::indicator(e.num_targets(), {j});
  e.prepare_plus();
  e.couple_pattern(di, pi / 4, "Z^C Z_i");
  e.x_rotation(pi / 4, "to Y frame");
  e.couple_pattern(dj, middle_phase, "Y^C Z_j");
  e.x_rotation(-pi / 4, "from Y frame");
  e.couple_pattern(di, pi / 4, "Z^C Z_i");
}

inline ProtocolTrace alternating_pattern_bell(const Layout& layout, std::pair<int, int> pair,
                                              const EngineOptions& opts = {}) {
  Engine e(layout, opts);
  alternating_pattern_bell(e, pair);
  return e.finish("alternating_pattern_bell");
}

// k cycles of e^{i H1 s} e^{i H2 s} e^{-i H1 s} e^{-i H2 s}, s = sqrt(t / k), with
// H1 = sum lambda_j X^C Z_j and H2 = sum mu_j Y^C Z_j. C starts in |0>_C.
inline void commutator_three_body(Engine& e, const InteractionPattern& lambda, const InteractionPattern& mu,
                                  double t, int k) {
  if (k < 1) throw InvalidInput("cycle count must be at least 1");
  if (t < 0.0) throw InvalidInput("time must be non-negative");
  if (t == 0.0) return;
  const double s = std::sqrt(t / k);
  const Mat2c to_x = pauli::rotation(pauli::Y(), pi / 4);    // e^{-i pi/4 Y}: Z -> X
  const Mat2c from_x = pauli::rotation(pauli::Y(), -pi / 4);
  auto h1 = [&](double sign) {
    e.logical_unitary(from_x, "Z->X");
    e.couple_pattern(lambda, sign * s, "H1");
    e.logical_unitary(to_x, "X->Z");
  };
  auto h2 = [&](double sign) {
    e.x_rotation(pi / 4, "Y->Z");
    e.couple_pattern(mu, sign * s, "H2");
    e.x_rotation(-pi / 4, "Z->Y");
  };
  for (int c = 0; c < k; ++c) {
    h2(+1);
    h1(+1);
    h2(-1);
    h1(-1);
  }
}

// Fitted J of exp(-i t J Z_1 Z_2) from the C = |0> branch of targets 1, 2 (others in |0>).
inline double commutator_effective_coupling(const PureState& logical, double t) {
  const int n = logical.num_qubits() - 1;
  if (n < 2) throw InvalidInput("need at least two targets");
  const cplx a00 = logical(0), a01 = logical(Eigen::Index(1) << (n - 2));
  return std::arg(a01 / a00) / (2.0 * t);
}

inline ProtocolTrace commutator_three_body(const Layout& layout, const InteractionPattern& lambda,
                                           const InteractionPattern& mu, double t, int k,
                                           const EngineOptions& opts = {}) {
  Engine e(layout, opts);
  commutator_three_body(e, lambda, mu, t, k);
  return e.finish("commutator_three_body");
}

// Maps x to (-pi/2, pi/2] modulo pi.
inline double wrap_half_pi(double x) {
  double y = std::fmod(x, pi);
  if (y > pi / 2) y -= pi;
  if (y <= -pi / 2) y += pi;
  return y;
}

// Mediated pairwise corrections so that H^S acting for total time T leaves S unchanged.
inline void self_interaction_cancellation(Engine& e, double T) {
  if (!e.options().target_self) throw InvalidInput("self-interaction cancellation needs target_self enabled");
  const Mat& fs = e.self_couplings().target_self;
  const double start = e.trace().elapsed();
  for (int a = 0; a < e.num_targets(); ++a)
    for (int b = a + 1; b < e.num_targets(); ++b) {
      const double w = wrap_half_pi(-fs(a, b) * T);
      if (std::abs(w) > 1e-15) gate_sequence_multi_z(e, {a, b}, w);
    }
  const double used = e.trace().elapsed() - start;
  if (used > T + 1e-12)
    throw NoSolution("corrections need " + std::to_string(used) + " but only " + std::to_string(T) + " is available");
  e.idle(T - used, "free evolution");
  e.trace().values["T"] = T;
  e.trace().values["correction_time"] = used;
}

inline ProtocolTrace self_interaction_cancellation(const Layout& layout, double T, EngineOptions opts = {}) {
  opts.target_self = true;
  Engine e(layout, opts);
  self_interaction_cancellation(e, T);
  return e.finish("self_interaction_cancellation");
}

// ---------------------------------------------------------------------------
// Heisenberg to ZZ by Z^{xN} conjugation on C

struct XyzCouplings {
  Mat xx, yy, zz;  // N x n each
};

namespace detail {
inline CMat kron_pauli(int nq, int a, const Mat2c& pa, int b, const Mat2c& pb) {
  CMat out = CMat::Ones(1, 1);
  for (int q = 0; q < nq; ++q) {
    const Mat2c m = q == a ? pa : q == b ? pb : Mat2c::Identity();
    CMat next(out.rows() * 2, out.cols() * 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) next.block(r * out.rows(), c * out.cols(), out.rows(), out.cols()) = m(r, c) * out;
    out = next;
  }
  return out;
}
inline CMat expm_hermitian(const CMat& H, double t) {
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  CVec ph(es.eigenvalues().size());
  for (int k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, -es.eigenvalues()(k) * t);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace detail

// Phase-aligned operator distance min_phi ||A - e^{i phi} B||_2.
inline double unitary_distance(const CMat& A, const CMat& B) {
  const cplx tr = (B.adjoint() * A).trace();
  const cplx ph = std::abs(tr) > 0 ? tr / std::abs(tr) : cplx(1.0);
  Eigen::JacobiSVD<CMat> svd(A - ph * B);
  return svd.singularValues()(0);
}

struct HeisenbergResult {
  ProtocolTrace trace;
  CMat unitary;
  CMat target;
  double residual;
};

// [Z U(t/2k) Z U(t/2k)]^k with Z = prod of Z on C, against exp(-i H_zz t).
inline HeisenbergResult heisenberg_to_zz(const XyzCouplings& g, double t, int k) {
  if (k < 1) throw InvalidInput("step count must be at least 1");
  const int N = static_cast<int>(g.zz.rows()), n = static_cast<int>(g.zz.cols());
  if (g.xx.rows() != N || g.yy.rows() != N || g.xx.cols() != n || g.yy.cols() != n)
    throw InvalidInput("coupling tensors must share one shape");
  const int nq = N + n;
  if (nq > 10) throw CapacityExceeded("dense Heisenberg compilation limited to 10 qubits");
  const Eigen::Index dim = Eigen::Index(1) << nq;
  CMat H = CMat::Zero(dim, dim), Hz = CMat::Zero(dim, dim);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < n; ++j) {
      H += g.xx(i, j) * detail::kron_pauli(nq, i, pauli::X(), N + j, pauli::X());
      H += g.yy(i, j) * detail::kron_pauli(nq, i, pauli::Y(), N + j, pauli::Y());
      Hz += g.zz(i, j) * detail::kron_pauli(nq, i, pauli::Z(), N + j, pauli::Z());
    }
  H += Hz;
  CVec zsign(dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    int parity = 0;
    for (int i = 0; i < N; ++i) parity ^= (b >> (nq - 1 - i)) & 1;
    zsign(b) = parity ? -1.0 : 1.0;
  }
  const CMat U = detail::expm_hermitian(H, t / (2.0 * k));
  const CMat Ut = zsign.asDiagonal() * U * zsign.asDiagonal();
  const CMat step = Ut * U;
  CMat total = CMat::Identity(dim, dim);
  for (int s = 0; s < k; ++s) total = step * total;
  const CMat target = detail::expm_hermitian(Hz, t);
  HeisenbergResult r{{}, total, target, unitary_distance(total, target)};
  r.trace.protocol = "heisenberg_to_zz";
  r.trace.num_controls = N;
  r.trace.num_targets = n;
  for (int s = 0; s < k; ++s) {
    r.trace.steps.push_back({"evolve", "U(t/2k)", t / (2.0 * k), 0, FlipCategory::none, {}, {}, {}});
    r.trace.steps.push_back({"evolve", "Z U(t/2k) Z", t / (2.0 * k), 2 * N, FlipCategory::decoupling, {}, {}, {}});
  }
  CVec plus = CVec::Constant(dim, std::pow(2.0, -nq / 2.0));
  r.trace.final_state = PureState::from_amplitudes(total * plus);
  r.trace.values["residual"] = r.residual;
  return r;
}

}  // namespace rce
