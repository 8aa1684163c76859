#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "rce/core.hpp"
#include "rce/pattern_solver.hpp"

namespace rce {

inline constexpr int max_register_qubits = 22;

enum class RegisterMode { physical, logical };

// Qubit q is bit (m - 1 - q) of the basis index, so the register reads
// left to right as |q0 q1 ...>. Bit 0 is Z = +1.
class PureState {
 public:
  PureState() = default;
  PureState(int num_qubits, RegisterMode mode = RegisterMode::physical, int num_controls = 0)
      : nq_(num_qubits), mode_(mode), nc_(num_controls) {
    if (num_qubits < 1) throw InvalidInput("register needs at least one qubit");
    if (num_qubits > max_register_qubits)
      throw CapacityExceeded("register of " + std::to_string(num_qubits) + " qubits exceeds the cap of " +
                             std::to_string(max_register_qubits));
    amp_ = CVec::Zero(Eigen::Index(1) << num_qubits);
    amp_(0) = 1.0;
  }

  static PureState from_amplitudes(CVec amp, RegisterMode mode = RegisterMode::physical,
                                   int num_controls = 0) {
    int m = 0;
    while ((Eigen::Index(1) << m) < amp.size()) ++m;
    if ((Eigen::Index(1) << m) != amp.size()) throw InvalidInput("amplitude count is not a power of two");
    PureState s(m, mode, num_controls);
    const double nrm = amp.norm();
    if (!(nrm > 0.0)) throw InvalidInput("zero state vector");
    s.amp_ = amp / nrm;
    return s;
  }

  // Tensor product of single-qubit states, qubit 0 first.
  static PureState product(const std::vector<Eigen::Vector2cd>& qubits,
                           RegisterMode mode = RegisterMode::physical, int num_controls = 0) {
    CVec v = CVec::Ones(1);
    for (const auto& q : qubits) {
      CVec w(v.size() * 2);
      for (Eigen::Index k = 0; k < v.size(); ++k) {
        w(2 * k) = v(k) * q(0);
        w(2 * k + 1) = v(k) * q(1);
      }
      v = w;
    }
    return from_amplitudes(v, mode, num_controls);
  }

  int num_qubits() const { return nq_; }
  int num_controls() const { return nc_; }
  RegisterMode mode() const { return mode_; }
  Eigen::Index dim() const { return amp_.size(); }
  const CVec& amplitudes() const { return amp_; }
  CVec& amplitudes() { return amp_; }
  cplx operator()(Eigen::Index b) const { return amp_(b); }
  double norm() const { return amp_.norm(); }

  Eigen::Index bit_of(int q) const { return Eigen::Index(1) << (nq_ - 1 - q); }
  int spin(Eigen::Index b, int q) const { return (b & bit_of(q)) ? -1 : 1; }

  void check_qubit(int q) const {
    if (q < 0 || q >= nq_) throw InvalidInput("qubit index " + std::to_string(q) + " out of range");
  }

  void apply_x(int q) {
    check_qubit(q);
    const auto m = bit_of(q);
    for (Eigen::Index b = 0; b < dim(); ++b)
      if (!(b & m)) std::swap(amp_(b), amp_(b | m));
  }

  void apply_single(int q, const Mat2c& u) {
    check_qubit(q);
    const auto m = bit_of(q);
    for (Eigen::Index b = 0; b < dim(); ++b)
      if (!(b & m)) {
        const cplx a0 = amp_(b), a1 = amp_(b | m);
        amp_(b) = u(0, 0) * a0 + u(0, 1) * a1;
        amp_(b | m) = u(1, 0) * a0 + u(1, 1) * a1;
      }
  }

  void apply_cx(int control, int target) {
    check_qubit(control);
    check_qubit(target);
    if (control == target) throw InvalidInput("CX needs distinct qubits");
    const auto mc = bit_of(control), mt = bit_of(target);
    for (Eigen::Index b = 0; b < dim(); ++b)
      if ((b & mc) && !(b & mt)) std::swap(amp_(b), amp_(b | mt));
  }

  void apply_phases(const Vec& energies, double t) {
    for (Eigen::Index b = 0; b < dim(); ++b) amp_(b) *= std::polar(1.0, -energies(b) * t);
  }

 private:
  int nq_ = 0;
  RegisterMode mode_ = RegisterMode::physical;
  int nc_ = 0;
  CVec amp_;
};

inline Eigen::Vector2cd ket0() { return {1, 0}; }
inline Eigen::Vector2cd ket1() { return {0, 1}; }
inline Eigen::Vector2cd ket_plus() { return Eigen::Vector2cd(1, 1) / std::sqrt(2.0); }
inline Eigen::Vector2cd ket_minus() { return Eigen::Vector2cd(1, -1) / std::sqrt(2.0); }

// Logical register |+>_C |+>^n.
inline PureState logical_plus_state(int n) {
  return PureState::product(std::vector<Eigen::Vector2cd>(n + 1, ket_plus()), RegisterMode::logical, 1);
}

struct DiagonalHamiltonian {
  struct Term {
    double coeff;
    std::vector<int> support;
  };
  std::vector<Term> terms;

  DiagonalHamiltonian& add(double coeff, std::vector<int> support) {
    if (support.empty()) throw InvalidInput("Hamiltonian term needs a non-empty support");
    if (!std::isfinite(coeff)) throw InvalidInput("non-finite Hamiltonian coefficient");
    terms.push_back({coeff, std::move(support)});
    return *this;
  }
  DiagonalHamiltonian& append(const DiagonalHamiltonian& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  DiagonalHamiltonian negated_on(int q) const {
    DiagonalHamiltonian h = *this;
    for (auto& t : h.terms)
      if (std::count(t.support.begin(), t.support.end(), q) % 2) t.coeff = -t.coeff;
    return h;
  }
  DiagonalHamiltonian scaled(double s) const {
    DiagonalHamiltonian h = *this;
    for (auto& t : h.terms) t.coeff *= s;
    return h;
  }

  Vec energies(int num_qubits) const {
    const Eigen::Index dim = Eigen::Index(1) << num_qubits;
    Vec e = Vec::Zero(dim);
    for (const auto& t : terms) {
      Eigen::Index mask = 0;
      for (int q : t.support) {
        if (q < 0 || q >= num_qubits) throw InvalidInput("Hamiltonian support outside register");
        mask ^= Eigen::Index(1) << (num_qubits - 1 - q);
      }
      for (Eigen::Index b = 0; b < dim; ++b)
        e(b) += (__builtin_popcountll(static_cast<unsigned long long>(b & mask)) & 1) ? -t.coeff : t.coeff;
    }
    return e;
  }
};

// Physical H^CS with control i on register qubit i and target j on qubit N + j.
inline DiagonalHamiltonian control_target_hamiltonian(const CouplingMatrix& F) {
  DiagonalHamiltonian h;
  const int N = F.num_controls();
  for (int j = 0; j < F.num_targets(); ++j)
    for (int i = 0; i < N; ++i) h.add(F.F(j, i), {i, N + j});
  return h;
}

// Pairwise ZZ terms of a symmetric coupling matrix placed at register offset.
inline DiagonalHamiltonian self_hamiltonian(const Mat& f, int offset) {
  DiagonalHamiltonian h;
  for (int a = 0; a < f.rows(); ++a)
    for (int b = a + 1; b < f.cols(); ++b)
      if (f(a, b) != 0.0) h.add(f(a, b), {offset + a, offset + b});
  return h;
}

// Logical-frame H = sum_j lambda_j Z^C Z_j with C on qubit 0.
inline DiagonalHamiltonian logical_hamiltonian(const Vec& lambdas) {
  DiagonalHamiltonian h;
  for (int j = 0; j < lambdas.size(); ++j)
    if (lambdas(j) != 0.0) h.add(lambdas(j), {0, j + 1});
  return h;
}

inline PureState evolve_diagonal(PureState s, const DiagonalHamiltonian& h, double t) {
  if (!std::isfinite(t)) throw InvalidInput("non-finite evolution time");
  s.apply_phases(h.energies(s.num_qubits()), t);
  return s;
}

inline PureState apply_x_flip(PureState s, int q) {
  s.apply_x(q);
  return s;
}

// Control qubit i of the schedule sits on register qubit i.
inline PureState run_flip_schedule(PureState s, const DiagonalHamiltonian& h, const FlipSchedule& sched) {
  const Vec e = h.energies(s.num_qubits());
  double last = 0.0;
  for (const auto& ev : sched.events) {
    if (ev.t < last - 1e-15 || ev.t > sched.duration + 1e-12)
      throw InvalidInput("flip events must be sorted and inside [0, tau]");
    s.apply_phases(e, ev.t - last);
    for (int q : ev.qubits) s.apply_x(q);
    last = ev.t;
  }
  s.apply_phases(e, sched.duration - last);
  return s;
}

// exp(-i theta X_L) with X_L = |f><-f| + |-f><f| on the listed qubits; the
// identity on every other configuration of those qubits.
struct LogicalX {
  std::vector<int> qubits;
  std::vector<int> frame;

  static LogicalX single(int q) { return {{q}, {1}}; }

  void apply(PureState& s, double theta) const {
    if (qubits.size() != frame.size() || qubits.empty()) throw InvalidInput("logical X frame mismatch");
    Eigen::Index mask = 0, zero_pattern = 0;
    for (std::size_t k = 0; k < qubits.size(); ++k) {
      s.check_qubit(qubits[k]);
      mask |= s.bit_of(qubits[k]);
      if (frame[k] == -1) zero_pattern |= s.bit_of(qubits[k]);
    }
    const double c = std::cos(theta), sn = std::sin(theta);
    for (Eigen::Index b = 0; b < s.dim(); ++b) {
      if ((b & mask) != zero_pattern) continue;
      const Eigen::Index partner = b ^ mask;
      const cplx a0 = s(b), a1 = s(partner);
      s.amplitudes()(b) = c * a0 - cplx(0, sn) * a1;
      s.amplitudes()(partner) = c * a1 - cplx(0, sn) * a0;
    }
  }
};

// exp(-i t [H + omega X_L]) for diagonal H: exact 2x2 blocks on the logical pairs,
// plain phases elsewhere.
inline void evolve_with_field(PureState& s, const DiagonalHamiltonian& h, const LogicalX& x, double omega,
                              double t) {
  const Vec e = h.energies(s.num_qubits());
  Eigen::Index mask = 0, zero_pattern = 0;
  for (std::size_t k = 0; k < x.qubits.size(); ++k) {
    mask |= s.bit_of(x.qubits[k]);
    if (x.frame[k] == -1) zero_pattern |= s.bit_of(x.qubits[k]);
  }
  for (Eigen::Index b = 0; b < s.dim(); ++b) {
    const Eigen::Index masked = b & mask;
    if (masked == zero_pattern) {
      const Eigen::Index p = b ^ mask;
      const double mean = (e(b) + e(p)) / 2, d = (e(b) - e(p)) / 2;
      const double om = std::hypot(d, omega);
      const cplx ph = std::polar(1.0, -mean * t);
      const double c = std::cos(om * t), sn = om > 0 ? std::sin(om * t) / om : t;
      const cplx u00 = ph * cplx(c, -sn * d), u11 = ph * cplx(c, sn * d), u01 = ph * cplx(0, -sn * omega);
      const cplx a0 = s(b), a1 = s(p);
      s.amplitudes()(b) = u00 * a0 + u01 * a1;
      s.amplitudes()(p) = u01 * a0 + u11 * a1;
    } else if (masked != (zero_pattern ^ mask)) {
      s.amplitudes()(b) *= std::polar(1.0, -e(b) * t);
    }
  }
}

// exp(-i t [sum_j lambda_j Z^C Z_j + omega X^C]) in logical mode, one 2x2 block
// per target basis string.
inline PureState evolve_control_rotation(PureState s, const InteractionPattern& lambda, double omega, double t) {
  if (s.mode() != RegisterMode::logical) throw InvalidInput("control rotation needs a logical-mode state");
  const int n = s.num_qubits() - 1;
  if (lambda.size() != n) throw InvalidInput("pattern length does not match the register");
  const Eigen::Index half = Eigen::Index(1) << n;
  for (Eigen::Index sb = 0; sb < half; ++sb) {
    double lz = 0.0;
    for (int j = 0; j < n; ++j) lz += lambda.lambdas(j) * ((sb >> (n - 1 - j)) & 1 ? -1.0 : 1.0);
    const double om = std::hypot(lz, omega);
    Mat2c u = Mat2c::Identity();
    if (om > 0.0) {
      const Mat2c gen = lz * pauli::Z() + omega * pauli::X();
      u = std::cos(t * om) * Mat2c::Identity() - cplx(0, std::sin(t * om) / om) * gen;
    }
    const cplx a0 = s(sb), a1 = s(sb + half);
    s.amplitudes()(sb) = u(0, 0) * a0 + u(0, 1) * a1;
    s.amplitudes()(sb + half) = u(1, 0) * a0 + u(1, 1) * a1;
  }
  return s;
}

struct TrotterTerm {
  std::variant<DiagonalHamiltonian, LogicalX> generator;
  double weight = 1.0;
};

// k first-order steps, each applying the listed evolutions for t / k in order.
inline PureState trotter_evolve(PureState s, const std::vector<TrotterTerm>& terms, double t, int k) {
  if (k < 1) throw InvalidInput("Trotter step count must be at least 1");
  const double dt = t / k;
  std::vector<Vec> energies(terms.size());
  for (std::size_t a = 0; a < terms.size(); ++a)
    if (const auto* h = std::get_if<DiagonalHamiltonian>(&terms[a].generator))
      energies[a] = h->energies(s.num_qubits());
  for (int step = 0; step < k; ++step)
    for (std::size_t a = 0; a < terms.size(); ++a) {
      if (std::holds_alternative<DiagonalHamiltonian>(terms[a].generator))
        s.apply_phases(energies[a], terms[a].weight * dt);
      else
        std::get<LogicalX>(terms[a].generator).apply(s, terms[a].weight * dt);
    }
  return s;
}

// Orthonormal single-qubit measurement basis; outcome +1 is `first`.
struct MeasurementBasis {
  Eigen::Vector2cd first;
  Eigen::Vector2cd second;

  static MeasurementBasis Z() { return {ket0(), ket1()}; }
  static MeasurementBasis X() { return {ket_plus(), ket_minus()}; }
  static MeasurementBasis from(const Eigen::Vector2cd& u) {
    const Eigen::Vector2cd a = u.normalized();
    return {a, Eigen::Vector2cd(-std::conj(a(1)), std::conj(a(0)))};
  }
  void validate() const {
    if (std::abs(first.norm() - 1) > 1e-10 || std::abs(second.norm() - 1) > 1e-10 ||
        std::abs(first.dot(second)) > 1e-10)
      throw InvalidInput("measurement basis is not orthonormal");
  }
};

// Probability of projecting qubit q onto |u>.
inline double outcome_probability(const PureState& s, int q, const Eigen::Vector2cd& u) {
  s.check_qubit(q);
  const auto m = s.bit_of(q);
  double p = 0.0;
  for (Eigen::Index b = 0; b < s.dim(); ++b)
    if (!(b & m)) p += std::norm(std::conj(u(0)) * s(b) + std::conj(u(1)) * s(b | m));
  return p;
}

// Projects qubit q onto |u> (left in state |u>) and renormalizes.
inline void collapse(PureState& s, int q, const Eigen::Vector2cd& u) {
  const auto m = s.bit_of(q);
  double p = 0.0;
  for (Eigen::Index b = 0; b < s.dim(); ++b)
    if (!(b & m)) {
      const cplx a = std::conj(u(0)) * s(b) + std::conj(u(1)) * s(b | m);
      s.amplitudes()(b) = a * u(0);
      s.amplitudes()(b | m) = a * u(1);
      p += std::norm(a);
    }
  if (!(p > 1e-28)) throw NoSolution("measurement branch has zero probability");
  s.amplitudes() /= std::sqrt(p);
}

struct MeasurementResult {
  int outcome;  // +1 for basis.first, -1 for basis.second
  double probability;
};

// Born-rule measurement; a forced outcome bypasses the generator.
inline MeasurementResult measure_physical(PureState& s, int q, const MeasurementBasis& basis,
                                          std::mt19937_64* rng, std::optional<int> forced = {}) {
  basis.validate();
  const double p_plus = outcome_probability(s, q, basis.first);
  int outcome;
  if (forced) {
    outcome = *forced;
    if (outcome != 1 && outcome != -1) throw InvalidInput("forced outcome must be +1 or -1");
  } else {
    if (!rng) throw InvalidInput("measurement needs a seeded generator or a forced outcome");
    outcome = std::uniform_real_distribution<double>(0.0, 1.0)(*rng) < p_plus ? 1 : -1;
  }
  const double p = outcome == 1 ? p_plus : 1.0 - p_plus;
  if (p < 1e-14) throw NoSolution("requested measurement branch has zero probability");
  collapse(s, q, outcome == 1 ? basis.first : basis.second);
  return {outcome, p};
}

class MixedState {
 public:
  MixedState() = default;
  explicit MixedState(CMat rho) : rho_(std::move(rho)) {
    int m = 0;
    while ((Eigen::Index(1) << m) < rho_.rows()) ++m;
    if (rho_.rows() != rho_.cols() || (Eigen::Index(1) << m) != rho_.rows())
      throw InvalidInput("density matrix must be square with power-of-two size");
    nq_ = m;
  }
  static MixedState from_pure(const CVec& psi) { return MixedState(psi * psi.adjoint()); }

  int num_qubits() const { return nq_; }
  const CMat& density() const { return rho_; }
  CMat& density() { return rho_; }
  double trace() const { return rho_.trace().real(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMat> es(rho_);
    return es.eigenvalues().minCoeff();
  }
  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

 private:
  CMat rho_;
  int nq_ = 0;
};

namespace detail {
inline void check_keep(const std::vector<int>& keep, int nq) {
  for (std::size_t a = 0; a < keep.size(); ++a) {
    if (keep[a] < 0 || keep[a] >= nq) throw InvalidInput("kept qubit out of range");
    for (std::size_t b = a + 1; b < keep.size(); ++b)
      if (keep[a] == keep[b]) throw InvalidInput("duplicate kept qubit");
  }
}
// Splits a basis index into (kept index, traced index), kept qubits in the given order.
inline std::pair<Eigen::Index, Eigen::Index> split_index(Eigen::Index b, int nq, const std::vector<int>& keep,
                                                         const std::vector<int>& rest) {
  Eigen::Index k = 0, r = 0;
  for (int q : keep) k = (k << 1) | ((b >> (nq - 1 - q)) & 1);
  for (int q : rest) r = (r << 1) | ((b >> (nq - 1 - q)) & 1);
  return {k, r};
}
inline std::vector<int> complement(const std::vector<int>& keep, int nq) {
  std::vector<int> rest;
  for (int q = 0; q < nq; ++q)
    if (std::find(keep.begin(), keep.end(), q) == keep.end()) rest.push_back(q);
  return rest;
}
}  // namespace detail

inline MixedState partial_trace(const PureState& s, const std::vector<int>& keep) {
  const int nq = s.num_qubits();
  detail::check_keep(keep, nq);
  const auto rest = detail::complement(keep, nq);
  CMat A = CMat::Zero(Eigen::Index(1) << keep.size(), Eigen::Index(1) << rest.size());
  for (Eigen::Index b = 0; b < s.dim(); ++b) {
    const auto [k, r] = detail::split_index(b, nq, keep, rest);
    A(k, r) = s(b);
  }
  return MixedState(A * A.adjoint());
}

inline MixedState partial_trace(const MixedState& rho, const std::vector<int>& keep) {
  const int nq = rho.num_qubits();
  detail::check_keep(keep, nq);
  const auto rest = detail::complement(keep, nq);
  const Eigen::Index dk = Eigen::Index(1) << keep.size();
  CMat out = CMat::Zero(dk, dk);
  const Eigen::Index dim = Eigen::Index(1) << nq;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> idx(dim);
  for (Eigen::Index b = 0; b < dim; ++b) idx[b] = detail::split_index(b, nq, keep, rest);
  for (Eigen::Index x = 0; x < dim; ++x)
    for (Eigen::Index y = 0; y < dim; ++y)
      if (idx[x].second == idx[y].second) out(idx[x].first, idx[y].first) += rho.density()(x, y);
  return MixedState(out);
}

// <target| tr_rest(rho) |target>; `keep` lists the qubits target lives on.
inline double fidelity(const MixedState& rho, const PureState& target, const std::vector<int>& keep) {
  if (static_cast<int>(keep.size()) != target.num_qubits()) throw InvalidInput("target size does not match keep");
  const MixedState red = keep.size() == static_cast<std::size_t>(rho.num_qubits()) &&
                                 std::is_sorted(keep.begin(), keep.end())
                             ? rho
                             : partial_trace(rho, keep);
  const double f = (target.amplitudes().adjoint() * red.density() * target.amplitudes())(0, 0).real();
  return std::clamp(f, 0.0, 1.0);
}

inline double fidelity(const PureState& s, const PureState& target, const std::vector<int>& keep) {
  if (keep.size() == static_cast<std::size_t>(s.num_qubits()) && std::is_sorted(keep.begin(), keep.end())) {
    if (s.dim() != target.dim()) throw InvalidInput("dimension mismatch");
    return std::clamp(std::norm(target.amplitudes().dot(s.amplitudes())), 0.0, 1.0);
  }
  return fidelity(partial_trace(s, keep), target, keep);
}

inline double fidelity(const PureState& s, const PureState& target) {
  std::vector<int> all(s.num_qubits());
  for (int q = 0; q < s.num_qubits(); ++q) all[q] = q;
  return fidelity(s, target, all);
}

// |<a|b>| for equal-size registers.
inline double overlap_modulus(const CVec& a, const CVec& b) {
  if (a.size() != b.size()) throw InvalidInput("dimension mismatch");
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

// Von Neumann entropy in bits.
inline double entropy_bits(const MixedState& rho) {
  Eigen::SelfAdjointEigenSolver<CMat> es(rho.density());
  double s = 0.0;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()(k);
    if (p > 1e-15) s -= p * std::log2(p);
  }
  return s;
}

}  // namespace rce
