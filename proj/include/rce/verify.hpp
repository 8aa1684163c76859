#pragma once

#include <set>
#include <utility>
#include <vector>

#include "rce/protocols.hpp"

// Closed-form target states on the target register and fidelity checks.
namespace rce::verify {

inline int parity(Eigen::Index b, const std::vector<int>& qubits, int n) {
  int p = 0;
  for (int j : qubits) p ^= static_cast<int>((b >> (n - 1 - j)) & 1);
  return p;
}

inline CVec plus_state(int n) { return CVec::Constant(Eigen::Index(1) << n, std::pow(2.0, -n / 2.0)); }

// prod_T exp(-i omega_T Z_T) |+>^n
inline CVec phase_table_state(int n, const PhaseTable& table) {
  CVec v = plus_state(n);
  for (Eigen::Index b = 0; b < v.size(); ++b)
    for (const auto& [subset, w] : table.entries) v(b) *= std::polar(1.0, parity(b, subset, n) ? w : -w);
  return v;
}

inline CVec multi_z_state(int n, const std::vector<int>& subset, double phase) {
  return phase_table_state(n, PhaseTable{{{subset, phase}}});
}

// CZ on every pair of `subset` applied to |+>^n.
inline CVec cz_clique_state(int n, const std::vector<int>& subset) {
  CVec v = plus_state(n);
  for (Eigen::Index b = 0; b < v.size(); ++b) {
    int ones = 0;
    for (int j : subset) ones += static_cast<int>((b >> (n - 1 - j)) & 1);
    if ((ones * (ones - 1) / 2) % 2) v(b) = -v(b);
  }
  return v;
}

inline CVec graph_state(int n, const std::vector<std::pair<int, int>>& edges) {
  CVec v = plus_state(n);
  for (Eigen::Index b = 0; b < v.size(); ++b)
    for (auto [a, c] : edges)
      if (((b >> (n - 1 - a)) & 1) && ((b >> (n - 1 - c)) & 1)) v(b) = -v(b);
  return v;
}

// (|s> + |-s>)/sqrt2 on `qubits`, |+> elsewhere. sbar lists +1/-1 per qubit (+1 is |0>).
inline CVec ghz_state(int n, const std::vector<int>& qubits, const std::vector<int>& sbar) {
  const std::set<int> in(qubits.begin(), qubits.end());
  CVec v = CVec::Zero(Eigen::Index(1) << n);
  const int rest = n - static_cast<int>(qubits.size());
  const double amp = std::sqrt(0.5) * std::pow(2.0, -rest / 2.0);
  for (Eigen::Index b = 0; b < v.size(); ++b) {
    bool match = true, anti = true;
    for (std::size_t k = 0; k < qubits.size(); ++k) {
      const int bit = static_cast<int>((b >> (n - 1 - qubits[k])) & 1);
      const int want = sbar[k] == 1 ? 0 : 1;
      match = match && bit == want;
      anti = anti && bit != want;
    }
    if (match || anti) v(b) = amp;
  }
  return v;
}

// <K_v> = <X_v prod_{u ~ v} Z_u> for every vertex touched by an edge.
inline std::vector<double> stabilizer_expectations(const CVec& s, int n, const std::vector<std::pair<int, int>>& edges) {
  std::set<int> vertices;
  for (auto [a, b] : edges) vertices.insert({a, b});
  std::vector<double> out;
  for (int v : vertices) {
    std::vector<int> nb;
    for (auto [a, b] : edges) {
      if (a == v) nb.push_back(b);
      if (b == v) nb.push_back(a);
    }
    cplx e = 0.0;
    for (Eigen::Index b = 0; b < s.size(); ++b) {
      const Eigen::Index flipped = b ^ (Eigen::Index(1) << (n - 1 - v));
      e += std::conj(s(flipped)) * s(b) * (parity(b, nb, n) ? -1.0 : 1.0);
    }
    out.push_back(e.real());
  }
  return out;
}

// Fidelity of the target register of a logical-register state with `target`.
inline double target_fidelity(const PureState& logical, const CVec& target) {
  const int n = logical.num_qubits() - 1;
  std::vector<int> keep;
  for (int j = 1; j <= n; ++j) keep.push_back(j);
  return fidelity(logical, PureState::from_amplitudes(target), keep);
}

}  // namespace rce::verify
