#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rce/presets.hpp"
#include "rce/protocols.hpp"

using namespace rce;

namespace {
struct Mode {
  SimulationMode sim;
  LogicalControl control;
  std::string name;
};
const std::vector<Mode> all_modes{{SimulationMode::logical, LogicalControl::global, "logical/global"},
                                  {SimulationMode::logical, LogicalControl::local, "logical/local"},
                                  {SimulationMode::physical, LogicalControl::global, "physical/global"},
                                  {SimulationMode::physical, LogicalControl::local, "physical/local"}};

EngineOptions options(const Mode& m) {
  EngineOptions o;
  o.mode = m.sim;
  o.control = m.control;
  return o;
}

std::vector<int> target_qubits(int n) {
  std::vector<int> k;
  for (int j = 1; j <= n; ++j) k.push_back(j);
  return k;
}

double target_fidelity(const ProtocolTrace& t, const CVec& target) {
  const int n = t.num_targets;
  return oracle::fidelity_on(t.final_state.amplitudes(), n + 1, target_qubits(n), target);
}

CMat zprod(int n, const std::vector<int>& subset) {
  std::map<int, Mat2c> at;
  for (int j : subset) at[j] = oracle::Z();
  return oracle::op(n, at);
}

CVec multi_z(int n, const std::vector<int>& subset, double phase) {
  return oracle::expmh(zprod(n, subset), phase) * oracle::plus(n);
}

CMat cz(int n, int a, int b) {
  const CMat I = CMat::Identity(Eigen::Index(1) << n, Eigen::Index(1) << n);
  return (I + zprod(n, {a}) + zprod(n, {b}) - zprod(n, {a, b})) / 2.0;
}

CMat cx(int n, int c, int t) {
  std::map<int, Mat2c> p0{{c, (Mat2c() << 1, 0, 0, 0).finished()}};
  std::map<int, Mat2c> p1{{c, (Mat2c() << 0, 0, 0, 1).finished()}, {t, oracle::X()}};
  return oracle::op(n, p0) + oracle::op(n, p1);
}

// |0..0> -> (|s> + |-s>)/sqrt2 on `qubits` by H and a CX fan-out, then X where s-bar is -1.
CVec ghz(int n, const std::vector<int>& qubits, const std::vector<int>& sbar) {
  CVec v = CVec::Zero(Eigen::Index(1) << n);
  v(0) = 1;
  const Mat2c H = (Mat2c() << 1, 1, 1, -1).finished() / std::sqrt(2.0);
  v = oracle::op(n, {{qubits[0], H}}) * v;
  for (std::size_t k = 1; k < qubits.size(); ++k) v = cx(n, qubits[0], qubits[k]) * v;
  for (std::size_t k = 0; k < qubits.size(); ++k)
    if (sbar[k] == -1) v = oracle::op(n, {{qubits[k], oracle::X()}}) * v;
  for (int j = 0; j < n; ++j)
    if (std::find(qubits.begin(), qubits.end(), j) == qubits.end()) v = oracle::op(n, {{j, H}}) * v;
  return v;
}

Layout random_layout(std::mt19937_64& rng, int N, int n) {
  std::uniform_real_distribution<double> u(-2, 2);
  for (;;) {
    std::vector<Position> c, t;
    for (int i = 0; i < N; ++i) c.push_back(Position{{u(rng), u(rng)}});
    for (int j = 0; j < n; ++j) t.push_back(Position{{u(rng), u(rng)}});
    try {
      Layout l(c, t);
      bool spaced = true;
      for (const auto& a : c)
        for (const auto& b : t) spaced = spaced && (a - b).norm() > 0.3;
      if (spaced) return l;
    } catch (const DegenerateGeometry&) {
    }
  }
}
}  // namespace

TEST(GateSequence, MultiZInAllModes) {
  for (const auto& m : all_modes)
    for (const auto& [layout, subset] :
         std::vector<std::pair<Layout, std::vector<int>>>{{linear4(), {0, 1}}, {triangle6(), {0, 2}}, {triangle6(), {0, 1, 2}},
                                                          {cross8(), {1, 3}}, {cross8(), {0, 1, 2}}}) {
      const int n = layout.num_targets();
      for (double phase : {pi / 4, 0.37}) {
        const auto t = gate_sequence_multi_z(layout, subset, phase, options(m));
        EXPECT_GT(target_fidelity(t, multi_z(n, subset, phase)), 1 - 1e-9) << m.name << " n'=" << subset.size();
        EXPECT_TRUE(flip_budget(t).all_ok());
      }
    }
}

TEST(GateSequence, ZeroPhaseIsIdentity) {
  const auto t = gate_sequence_multi_z(triangle6(), {0, 1}, 0.0);
  EXPECT_GT(target_fidelity(t, oracle::plus(3)), 1 - 1e-12);
}

TEST(GateSequence, TimeAccounting) {
  // t_g = 2 t_U + t_prep + 2 t_V + |omega| / field; unit spacing gives pi/3 + 5 pi/4 + omega
  for (const auto& m : all_modes) {
    const auto t = gate_sequence_multi_z(linear4(), {0, 1}, 0.3, options(m));
    EXPECT_NEAR(t.elapsed(), pi / 3 + 5 * pi / 4 + 0.3, 1e-12) << m.name;
    EXPECT_NEAR(t.duration_of("couple"), pi / 3, 1e-12);
  }
  EngineOptions o;
  o.logical_gate_time = 2.0;
  o.field_strength = 2.0;
  const auto t = gate_sequence_multi_z(linear4(), {0, 1}, 0.3, o);
  EXPECT_NEAR(t.elapsed(), pi / 3 + 1.0 + 4.0 + 0.15, 1e-12);
}

TEST(MeasurementCz, BothBranches) {
  for (const auto& m : all_modes)
    for (const auto& [layout, subset] :
         std::vector<std::pair<Layout, std::vector<int>>>{{linear4(), {0, 1}}, {triangle6(), {0, 1, 2}}, {cross8(), {0, 2}}})
      for (int branch : {1, -1}) {
        auto o = options(m);
        o.forced_outcomes = {branch};
        const auto t = measurement_cz(layout, subset, o);
        const int n = layout.num_targets();
        CVec want = oracle::plus(n);
        for (std::size_t a = 0; a < subset.size(); ++a)
          for (std::size_t b = a + 1; b < subset.size(); ++b) want = cz(n, subset[a], subset[b]) * want;
        EXPECT_EQ(t.outcomes(), std::vector<int>{branch});
        EXPECT_GT(target_fidelity(t, want), 1 - 1e-9) << m.name << " branch " << branch;
        const bool corrected = std::any_of(t.steps.begin(), t.steps.end(), [](const TraceStep& s) { return s.kind == "correction"; });
        EXPECT_EQ(corrected, branch == -1) << m.name;
      }
}

TEST(MeasurementCz, TimeAccounting) {
  EngineOptions o;
  o.forced_outcomes = {1};
  o.measurement_time = 0.7;
  const auto t = measurement_cz(linear4(), {0, 1}, o);
  EXPECT_NEAR(t.elapsed(), pi / 6 + pi / 4 + 0.7, 1e-12);
  o.forced_outcomes = {-1};
  // the R_- correction adds a half-turn on both targets
  EXPECT_GT(measurement_cz(linear4(), {0, 1}, o).elapsed(), pi / 6 + pi / 4 + 0.7);
}

TEST(MeasurementCz, SampledOutcomesAreSeeded) {
  auto run = [](std::uint64_t seed) {
    EngineOptions o;
    o.seed = seed;
    std::vector<int> out;
    for (int k = 0; k < 5; ++k) {
      Engine e(triangle6(), o);
      out.push_back(measurement_cz(e, {0, 1}));
      o.seed += 1;
    }
    return out;
  };
  EXPECT_EQ(run(3), run(3));
}

TEST(GraphState, TriangleAndPath) {
  const std::vector<std::pair<int, int>> triangle{{0, 1}, {1, 2}, {0, 2}};
  const std::vector<std::pair<int, int>> path{{0, 1}, {1, 2}, {2, 3}};
  for (const auto& m : all_modes)
    for (const auto& [layout, edges] :
         std::vector<std::pair<Layout, std::vector<std::pair<int, int>>>>{{triangle6(), triangle}, {cross8(), path}}) {
      const int n = layout.num_targets();
      CVec want = oracle::plus(n);
      for (auto [a, b] : edges) want = cz(n, a, b) * want;
      for (std::uint64_t seed : {1, 2, 3}) {
        auto o = options(m);
        o.seed = seed;
        const auto t = graph_state_prep(layout, edges, o);
        EXPECT_GT(target_fidelity(t, want), 1 - 1e-9) << m.name;
        const auto L = flip_budget(t);
        EXPECT_TRUE(L.all_ok());
        ASSERT_TRUE(L.graph_ok.has_value());
      }
    }
  EXPECT_THROW(graph_state_prep(triangle6(), {{0, 0}}), InvalidInput);
  EXPECT_THROW(graph_state_prep(triangle6(), {{0, 1}, {1, 0}}), InvalidInput);
  EXPECT_THROW(graph_state_prep(triangle6(), {{0, 3}}), InvalidInput);
}

TEST(DfGhz, AllBranchCombinations) {
  for (const auto& m : all_modes)
    for (int size : {2, 3, 4}) {
      const Layout layout = cross8();
      std::vector<int> qubits(size);
      std::iota(qubits.begin(), qubits.end(), 0);
      for (int mask = 0; mask < (1 << (size - 1)); ++mask) {
        auto o = options(m);
        for (int k = 0; k < size - 1; ++k) o.forced_outcomes.push_back((mask >> k) & 1 ? -1 : 1);
        const auto t = df_ghz_prep(layout, qubits, o);
        ASSERT_EQ(t.frame_record.size(), qubits.size());
        EXPECT_GT(target_fidelity(t, ghz(4, qubits, t.frame_record)), 1 - 1e-9) << m.name << " mask " << mask;
        EXPECT_TRUE(flip_budget(t).all_ok());
      }
    }
  EXPECT_THROW(df_ghz_prep(cross8(), {0}), InvalidInput);
}

TEST(ControlRotation, ParametersDisentangleControl) {
  for (double lambda : {0.5, 1.5})
    for (double phi : {pi / 8, pi / 4, 0.4}) {
      const auto p = control_rotation_parameters(phi, lambda);
      // dense evolution of lambda Z^C (Z_1 + Z_2) + omega X^C on |+>|++>
      const CMat H = lambda * (oracle::zz(3, 0, 1) + oracle::zz(3, 0, 2)) + p.omega * oracle::op(3, {{0, oracle::X()}});
      const CVec out = oracle::expmh(H, p.tau) * oracle::plus(3);
      EXPECT_GT(oracle::fidelity_on(out, 3, {1, 2}, multi_z(2, {0, 1}, phi)), 1 - 1e-10) << phi;
    }
  EXPECT_THROW(control_rotation_parameters(0.0, 1.0), InvalidInput);
  EXPECT_THROW(control_rotation_parameters(pi / 2, 1.0), InvalidInput);
}

TEST(ControlRotation, EntanglerLogicalAndPhysical) {
  for (SimulationMode sim : {SimulationMode::logical, SimulationMode::physical})
    for (double phi : {pi / 8, pi / 4}) {
      EngineOptions o;
      o.mode = sim;
      const auto t = control_rotation_entangler(linear4(), {0, 1}, phi, o);
      EXPECT_GT(target_fidelity(t, multi_z(2, {0, 1}, phi)), 1 - 1e-9);
      EXPECT_NEAR(t.values.at("lambda"), 1.5, 1e-12);
    }
}

TEST(ControlRotation, ThreeQubit) {
  const CMat pairs = oracle::expmh(zprod(3, {0, 1}) + zprod(3, {1, 2}) + zprod(3, {0, 2}), pi / 4);
  for (SimulationMode sim : {SimulationMode::logical, SimulationMode::physical}) {
    EngineOptions o;
    o.mode = sim;
    const auto t = control_rotation_three_qubit(triangle6(), {0, 1, 2}, o);
    EXPECT_GT(target_fidelity(t, pairs * oracle::plus(3)), 1 - 1e-9);
  }
}

TEST(ControlRotation, TrotterFallbackConverges) {
  // fractional c on the cross needs Trotter slices in physical mode
  EngineOptions o;
  o.mode = SimulationMode::physical;
  EXPECT_THROW(control_rotation_entangler(cross8(), {0, 1}, pi / 4, o), InvalidInput);
  const auto exact = control_rotation_entangler(cross8(), {0, 1}, pi / 4).final_state.amplitudes();
  std::vector<double> err;
  for (int k : {100, 200, 400}) {
    o.trotter_steps = k;
    const auto t = control_rotation_entangler(cross8(), {0, 1}, pi / 4, o);
    err.push_back(std::sqrt(2 * (1 - std::abs(exact.dot(t.final_state.amplitudes())))));
    EXPECT_TRUE(flip_budget(t).lambda_per_use_ok);
    EXPECT_NEAR(t.duration_of("field"), t.values.at("tau"), 1e-12);
  }
  // At the decoupling time the first-order error term vanishes, so the state error is O(1/k^2).
  EXPECT_NEAR(err[1] / err[0], 0.25, 0.05);
  EXPECT_NEAR(err[2] / err[1], 0.25, 0.05);
}

TEST(AlternatingBell, MatchesDenseSequence) {
  const int nq = 3;
  const CMat U = oracle::expmh(oracle::zz(nq, 0, 1), pi / 4) * oracle::expmh(oracle::op(nq, {{0, oracle::X()}}), -pi / 4) *
                 oracle::expmh(oracle::zz(nq, 0, 2), pi / 4) * oracle::expmh(oracle::op(nq, {{0, oracle::X()}}), pi / 4) *
                 oracle::expmh(oracle::zz(nq, 0, 1), pi / 4);
  const CVec want = U * oracle::plus(nq);
  // C ends disentangled and S maximally entangled
  const CMat rs = oracle::reduce(want, nq, {1, 2});
  EXPECT_NEAR((rs * rs).trace().real(), 1.0, 1e-12);
  const CMat r1 = oracle::reduce(want, nq, {1});
  EXPECT_NEAR((r1 * r1).trace().real(), 0.5, 1e-12);
  for (const auto& m : all_modes) {
    const auto t = alternating_pattern_bell(linear4(), {0, 1}, options(m));
    EXPECT_GT(oracle::overlap2(t.final_state.amplitudes(), want), 1 - 1e-9) << m.name;
  }
}

TEST(Commutator, EffectiveCouplingConverges) {
  const InteractionPattern lam(Vec((Vec(2) << 1.0, 0.5).finished()));
  const InteractionPattern mu(Vec((Vec(2) << 0.5, 1.0).finished()));
  const auto t = commutator_three_body(linear4(), lam, mu, 0.1, 10000);
  const double J = commutator_effective_coupling(t.final_state, 0.1);
  EXPECT_NEAR(J, 2.5, 0.025);
  const auto coarse = commutator_three_body(linear4(), lam, mu, 0.1, 100);
  EXPECT_LT(std::abs(J - 2.5), std::abs(commutator_effective_coupling(coarse.final_state, 0.1) - 2.5));
  EXPECT_THROW(commutator_three_body(linear4(), lam, mu, 0.1, 0), InvalidInput);
}

TEST(SelfInteraction, CancellationRestoresProductState) {
  for (SimulationMode sim : {SimulationMode::logical, SimulationMode::physical}) {
    EngineOptions o;
    o.mode = sim;
    const auto t = self_interaction_cancellation(triangle6(), 40.0, o);
    EXPECT_GT(target_fidelity(t, oracle::plus(3)), 1 - 1e-9);
    EXPECT_NEAR(t.elapsed(), 40.0, 1e-9);
  }
  EXPECT_THROW(self_interaction_cancellation(triangle6(), 0.5), NoSolution);
  EXPECT_NEAR(wrap_half_pi(pi / 2 + 0.1), -pi / 2 + 0.1, 1e-15);
  EXPECT_NEAR(wrap_half_pi(-3.0), -3.0 + pi, 1e-15);
}

TEST(Synthesis, FullPhaseTable) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  PhaseTable table;
  for (const auto& s : std::vector<std::vector<int>>{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}})
    table.entries.push_back({s, u(rng)});
  CVec want = oracle::plus(3);
  for (const auto& [s, w] : table.entries) want = oracle::expmh(zprod(3, s), w) * want;
  for (const auto& m : all_modes) {
    const auto t = diagonal_state_synthesis(triangle6(), table, options(m));
    EXPECT_GT(target_fidelity(t, want), 1 - 1e-9) << m.name;
    const auto L = flip_budget(t);
    ASSERT_TRUE(L.synthesis_ok.has_value());
    EXPECT_TRUE(*L.synthesis_ok);
  }
}

TEST(Synthesis, PhaseTableFromBasisPhases) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-pi, pi);
  Vec theta(8);
  for (auto& x : theta) x = u(rng);
  const auto table = phase_table_from_basis_phases(theta);
  EXPECT_LE(table.entries.size(), 7u);
  CVec want(8);
  for (int b = 0; b < 8; ++b) want(b) = std::polar(1.0, theta(b)) / std::sqrt(8.0);
  const auto t = diagonal_state_synthesis(triangle6(), table);
  EXPECT_GT(target_fidelity(t, want), 1 - 1e-9);
  PhaseTable bad{{{{0}, 0.1}, {{0}, 0.2}}};
  EXPECT_THROW(bad.validate(3), InvalidInput);
}

TEST(Heisenberg, ResidualHalves) {
  const auto F = build_coupling_matrix(linear4()).F.transpose().eval();
  std::vector<double> r;
  for (int k : {16, 32, 64, 128}) r.push_back(heisenberg_to_zz({F, F, F}, 1.0, k).residual);
  EXPECT_NEAR(r[2] / r[1], 0.5, 0.1);
  EXPECT_NEAR(r[3] / r[2], 0.5, 0.1);
  const Mat big = Mat::Ones(6, 5);
  EXPECT_THROW(heisenberg_to_zz({big, big, big}, 1.0, 1), CapacityExceeded);
}

TEST(Consistency, PhysicalMatchesLogical) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  int checked = 0;
  for (int trial = 0; checked < 12 && trial < 100; ++trial) {
    const int N = 2 + trial % 3, n = 1 + trial % std::min(3, N);
    const Layout layout = random_layout(rng, N, n);
    std::vector<int> subset;
    for (int j = 0; j < n; ++j)
      if (j == 0 || rng() % 2) subset.push_back(j);
    const double phase = u(rng);
    ProtocolTrace a, b;
    try {
      a = gate_sequence_multi_z(layout, subset, phase);
    } catch (const NoSolution&) {
      continue;
    }
    EngineOptions o;
    o.mode = SimulationMode::physical;
    b = gate_sequence_multi_z(layout, subset, phase, o);
    EXPECT_GT(oracle::overlap2(a.final_state.amplitudes(), b.final_state.amplitudes()), 1 - 1e-9);
    ++checked;
  }
  EXPECT_EQ(checked, 12);
}

TEST(Consistency, ControlSelfCouplingIsGlobalPhase) {
  std::mt19937_64 rng(34);
  for (int N : {2, 3, 4}) {
    Mat f = Mat::Zero(N, N);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int a = 0; a < N; ++a)
      for (int b = a + 1; b < N; ++b) f(a, b) = f(b, a) = u(rng);
    // a|f> + b|-f> for a random frame f, times a random target state
    const Eigen::Index fb = rng() % (Eigen::Index(1) << N), mb = fb ^ ((Eigen::Index(1) << N) - 1);
    CVec v = CVec::Zero(Eigen::Index(1) << N);
    v(fb) = cplx(0.3, 0.5);
    v(mb) = cplx(-0.7, 0.2);
    v.normalize();
    const auto out = evolve_diagonal(PureState::from_amplitudes(v), self_hamiltonian(f, 0), 1.9);
    EXPECT_LT(oracle::phase_distance(out.amplitudes(), v), 1e-10);
  }
  for (bool self : {true, false}) {
    EngineOptions o;
    o.mode = SimulationMode::physical;
    o.control_self = self;
    const auto t = gate_sequence_multi_z(cross8(), {0, 1}, pi / 4, o);
    EXPECT_GT(target_fidelity(t, multi_z(4, {0, 1}, pi / 4)), 1 - 1e-10);
  }
}

TEST(Engine, Errors) {
  EngineOptions phys;
  phys.mode = SimulationMode::physical;
  Engine e(linear4(), phys);
  EXPECT_THROW(gate_sequence_multi_z(e, {}, 0.1), InvalidInput);
  EXPECT_THROW(gate_sequence_multi_z(e, {0, 0}, 0.1), InvalidInput);
  EXPECT_THROW(gate_sequence_multi_z(e, {2}, 0.1), InvalidInput);
  e.prepare_plus();
  e.measure_logical(ket_plus(), "m");
  EXPECT_THROW(e.couple_pattern(InteractionPattern::on_subset(2, {0}), 0.1, "U"), InvalidInput);
  EXPECT_THROW(e.x_rotation(0.1, "x"), InvalidInput);
  EXPECT_THROW(e.logical_state(), InvalidInput);
  e.reset_control();
  EXPECT_NO_THROW(e.couple_pattern(InteractionPattern::on_subset(2, {0}), 0.1, "U"));
  EXPECT_THROW(e.logical_unitary(2 * pauli::X(), "bad"), InvalidInput);
  EXPECT_THROW(Engine(linear4(), {}, CVec::Ones(3)), InvalidInput);
  EngineOptions o;
  o.forced_outcomes = {-1};
  Engine z(linear4(), o);
  // C in |0> cannot give the |1> outcome
  EXPECT_THROW(z.measure_logical(ket0(), "m"), NoSolution);
}

TEST(Engine, TraceInvariants) {
  EngineOptions o;
  o.mode = SimulationMode::physical;
  o.control = LogicalControl::local;
  const auto t = graph_state_prep(triangle6(), {{0, 1}, {1, 2}}, o);
  double sum = 0;
  int flips = 0;
  for (const auto& s : t.steps) {
    sum += s.duration;
    flips += s.flips;
    EXPECT_GE(s.duration, 0.0);
  }
  EXPECT_DOUBLE_EQ(t.elapsed(), sum);
  EXPECT_EQ(t.total_flips(), flips);
  EXPECT_EQ(t.outcomes().size(), 2u);
}
