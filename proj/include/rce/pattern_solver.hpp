#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <variant>
#include <vector>

#include "rce/geometry.hpp"
#include "rce/linprog.hpp"

namespace rce {

struct InteractionPattern {
  Vec lambdas;

  InteractionPattern() = default;
  explicit InteractionPattern(Vec l) : lambdas(std::move(l)) {
    if (!lambdas.allFinite()) throw InvalidInput("non-finite interaction pattern");
  }
  InteractionPattern(std::initializer_list<double> l) : lambdas(static_cast<Eigen::Index>(l.size())) {
    int k = 0;
    for (double x : l) lambdas(k++) = x;
  }
  int size() const { return static_cast<int>(lambdas.size()); }

  // lambda on the listed targets, zero elsewhere.
  static InteractionPattern on_subset(int n, const std::vector<int>& subset, double value = 1.0) {
    Vec l = Vec::Zero(n);
    for (int j : subset) {
      if (j < 0 || j >= n) throw InvalidInput("target index out of range");
      l(j) = value;
    }
    return InteractionPattern(l);
  }
};

// Normalized control vector. F * (scale * c) reproduces the requested pattern,
// so the realized pattern is lambda / scale.
struct SubspaceVector {
  Vec c;
  double scale = 1.0;

  int size() const { return static_cast<int>(c.size()); }

  static SubspaceVector from_raw(const Vec& raw) {
    const double m = raw.size() ? raw.cwiseAbs().maxCoeff() : 0.0;
    if (!(m > 0.0)) throw DegenerateGeometry("zero subspace vector");
    return {raw / m, m};
  }
  static SubspaceVector uniform(int N, double value = 1.0) {
    if (std::abs(value) > 1.0) throw InvalidInput("|c_i| must not exceed 1");
    return {Vec::Constant(N, value), 1.0};
  }
  SubspaceVector negated() const { return {-c, scale}; }
  bool is_integer() const {
    return (c.array().abs() - 1.0).abs().maxCoeff() < 1e-14;
  }
};

struct FlipEvent {
  double t;
  std::vector<int> qubits;  // flipped together at t
};

struct FlipSchedule {
  double duration = 0.0;
  std::vector<FlipEvent> events;
  std::vector<int> initial_frame;   // +1 or -1 per control qubit
  std::vector<int> terminal_frame;  // frame after the last event

  int flip_count() const {
    int k = 0;
    for (const auto& e : events) k += static_cast<int>(e.qubits.size());
    return k;
  }
  // Time-averaged sign of each qubit relative to its initial frame entry.
  Vec effective_c() const {
    const int N = static_cast<int>(initial_frame.size());
    Vec avg = Vec::Zero(N);
    std::vector<int> f = initial_frame;
    double last = 0.0;
    for (const auto& e : events) {
      for (int i = 0; i < N; ++i) avg(i) += f[i] * (e.t - last);
      for (int q : e.qubits) f[q] = -f[q];
      last = e.t;
    }
    for (int i = 0; i < N; ++i) avg(i) += f[i] * (duration - last);
    return avg / duration;
  }
};

enum class SolveStrategy { max_coupling, min_norm };

namespace detail {

inline Mat pseudo_inverse(const Mat& A, double rcond = 1e-12) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cut = s.size() ? rcond * s(0) : 0.0;
  Vec inv = Vec::Zero(s.size());
  for (int k = 0; k < s.size(); ++k)
    if (s(k) > cut) inv(k) = 1.0 / s(k);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline int matrix_rank(const Mat& A) {
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  qr.setThreshold(1e-12);
  return static_cast<int>(qr.rank());
}

// Realizes A c = rhs up to a common positive factor with |c_i| <= 1.
inline SubspaceVector synthesize(const Mat& A, const Vec& rhs, SolveStrategy strategy) {
  if (A.rows() != rhs.size()) throw InvalidInput("pattern length does not match the matrix");
  if (rhs.cwiseAbs().maxCoeff() == 0.0) throw DegenerateGeometry("zero target pattern");
  if (A.rows() == A.cols()) {
    Eigen::FullPivLU<Mat> lu(A);
    lu.setThreshold(1e-12);
    if (lu.isInvertible()) return SubspaceVector::from_raw(lu.solve(rhs));
  }
  if (A.rows() > A.cols() || strategy == SolveStrategy::min_norm) {
    const Vec raw = pseudo_inverse(A) * rhs;
    if (A.rows() <= A.cols() && (A * raw - rhs).norm() > 1e-9 * (1.0 + rhs.norm()))
      throw NoSolution("pattern outside the range of the coupling matrix");
    return SubspaceVector::from_raw(raw);
  }
  const auto sol = max_coupling_lp(A, rhs);
  const double m = sol.c.cwiseAbs().maxCoeff();
  return {sol.c / m, m / sol.scale};
}

}  // namespace detail

inline SubspaceVector solve_pattern(const CouplingMatrix& F, const InteractionPattern& target,
                                    SolveStrategy strategy = SolveStrategy::max_coupling) {
  if (target.size() != F.num_targets())
    throw InvalidInput("pattern length does not match the number of targets");
  if (detail::matrix_rank(F.F) < F.num_targets())
    throw NoSolution("coupling matrix is rank deficient");
  return detail::synthesize(F.F, target.lambdas, strategy);
}

// Largest s with F c = s * direction and |c_i| <= 1.
inline double max_coupling(const CouplingMatrix& F, const InteractionPattern& direction) {
  return 1.0 / solve_pattern(F, direction, SolveStrategy::max_coupling).scale;
}

// One flip per control qubit whose time-averaged sign must differ from its
// current frame entry. A qubit with initial frame f flips at (1 + f c) tau / 2.
inline FlipSchedule compile_flip_schedule(const SubspaceVector& c, double tau,
                                          std::vector<int> initial_frame = {}) {
  const int N = c.size();
  if (!(tau > 0.0)) throw InvalidInput("schedule duration must be positive");
  if (initial_frame.empty()) initial_frame.assign(N, 1);
  if (static_cast<int>(initial_frame.size()) != N) throw InvalidInput("frame size mismatch");
  std::map<double, std::vector<int>> by_time;
  FlipSchedule s{tau, {}, initial_frame, initial_frame};
  for (int i = 0; i < N; ++i) {
    const double ci = c.c(i);
    if (!(std::abs(ci) <= 1.0 + 1e-12)) throw InvalidInput("|c_i| > 1 in subspace vector");
    const int f = initial_frame[i];
    if (f != 1 && f != -1) throw InvalidInput("frame entries must be +1 or -1");
    const double rel = std::clamp(f * ci, -1.0, 1.0);
    if (rel >= 1.0 - 1e-12) continue;  // LP round-off must not add a flip at tau
    by_time[(1.0 + rel) * tau / 2.0].push_back(i);
    s.terminal_frame[i] = -f;
  }
  for (auto& [t, q] : by_time) s.events.push_back({t, q});
  return s;
}

// ---------------------------------------------------------------------------
// Noise-robust couplings

struct PointRegion {};
struct TaylorRegion {
  int order = 1;
};
struct DiscretizedRegion {
  std::vector<Position> offsets;  // relative to the region center
};

struct RegionSpec {
  Position center;
  std::variant<PointRegion, TaylorRegion, DiscretizedRegion> method;

  void validate() const {
    if (const auto* t = std::get_if<TaylorRegion>(&method)) {
      if (t->order < 0) throw InvalidInput("Taylor order must be non-negative");
    }
    if (const auto* d = std::get_if<DiscretizedRegion>(&method)) {
      if (d->offsets.empty()) throw InvalidInput("discretized region needs offsets");
      for (std::size_t a = 0; a < d->offsets.size(); ++a) {
        if (d->offsets[a].size() != center.size()) throw InvalidInput("offset dimension mismatch");
        for (std::size_t b = a + 1; b < d->offsets.size(); ++b)
          if ((d->offsets[a] - d->offsets[b]).norm() == 0.0)
            throw InvalidInput("duplicate virtual-qubit offsets");
      }
    }
  }
};

// Center plus +sigma along the second axis and -sigma along the first.
inline std::vector<Position> default_virtual_offsets(double sigma, int dim) {
  std::vector<Position> out{Position::Zero(dim)};
  Position a = Position::Zero(dim), b = Position::Zero(dim);
  if (dim == 1) {
    a(0) = sigma;
    b(0) = -sigma;
  } else {
    a(1) = sigma;
    b(0) = -sigma;
  }
  out.push_back(a);
  out.push_back(b);
  return out;
}

// Offsets at the given angles (degrees, from +x) and distance sigma, plus the center.
inline std::vector<Position> angular_offsets(double sigma, const std::vector<double>& degrees) {
  std::vector<Position> out{Position::Zero(2)};
  for (double a : degrees) {
    Position p(2);
    p << sigma * std::cos(a * pi / 180.0), sigma * std::sin(a * pi / 180.0);
    out.push_back(p);
  }
  return out;
}

namespace detail {

// Truncated multivariate polynomial in `dim` variables up to total degree `order`.
class Jet {
 public:
  using Exponent = std::vector<int>;

  Jet(int dim, int order) : dim_(dim), order_(order) {}

  static Jet constant(int dim, int order, double v) {
    Jet j(dim, order);
    j.terms_[Exponent(dim, 0)] = v;
    return j;
  }
  static Jet variable(int dim, int order, int axis) {
    Jet j(dim, order);
    if (order >= 1) {
      Exponent e(dim, 0);
      e[axis] = 1;
      j.terms_[e] = 1.0;
    }
    return j;
  }

  Jet operator+(const Jet& o) const {
    Jet r = *this;
    for (const auto& [e, v] : o.terms_) r.terms_[e] += v;
    return r;
  }
  Jet operator*(double s) const {
    Jet r = *this;
    for (auto& [e, v] : r.terms_) v *= s;
    return r;
  }
  Jet operator*(const Jet& o) const {
    Jet r(dim_, order_);
    for (const auto& [ea, va] : terms_)
      for (const auto& [eb, vb] : o.terms_) {
        Exponent e(dim_);
        int deg = 0;
        for (int k = 0; k < dim_; ++k) deg += (e[k] = ea[k] + eb[k]);
        if (deg <= order_) r.terms_[e] += va * vb;
      }
    return r;
  }
  double coeff(const Exponent& e) const {
    const auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
  }

 private:
  int dim_, order_;
  std::map<Exponent, double> terms_;
};

inline std::vector<Jet::Exponent> monomials(int dim, int order) {
  std::vector<Jet::Exponent> out;
  Jet::Exponent e(dim, 0);
  auto rec = [&](auto&& self, int axis, int left) -> void {
    if (axis == dim) {
      out.push_back(e);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[axis] = p;
      self(self, axis + 1, left - p);
    }
    e[axis] = 0;
  };
  rec(rec, 0, order);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    int da = 0, db = 0;
    for (int x : a) da += x;
    for (int x : b) db += x;
    return da < db;
  });
  return out;
}

// Taylor coefficients of J |r0 + delta - rc|^-alpha in delta up to `order`.
inline Jet coupling_jet(const Position& r0, const Position& rc, double J, double alpha, int order) {
  const int D = static_cast<int>(r0.size());
  const Position u = r0 - rc;
  const double s0 = u.squaredNorm();
  if (!(s0 > 0.0)) throw DegenerateGeometry("region center coincides with a control qubit");
  Jet eps(D, order);
  for (int k = 0; k < D; ++k) {
    const Jet x = Jet::variable(D, order, k);
    eps = eps + x * (2.0 * u(k) / s0) + (x * x) * (1.0 / s0);
  }
  const double p = -alpha / 2.0;
  Jet sum = Jet::constant(D, order, 1.0), power = Jet::constant(D, order, 1.0);
  double binom = 1.0;
  for (int m = 1; m <= order; ++m) {
    binom *= (p - (m - 1)) / m;
    power = power * eps;
    sum = sum + power * binom;
  }
  return sum * (J * std::pow(s0, p));
}

}  // namespace detail

// Rows: coupling at each region center, then every mixed partial derivative up to
// the region's order. Right-hand side: target lambda, then zeros.
inline SubspaceVector taylor_robust_solve(const Layout& layout, const std::vector<RegionSpec>& regions,
                                          const InteractionPattern& target,
                                          SolveStrategy strategy = SolveStrategy::max_coupling) {
  if (static_cast<int>(regions.size()) != target.size())
    throw InvalidInput("one region per target qubit required");
  const int N = layout.num_controls(), D = layout.dim();
  std::vector<Vec> rows;
  std::vector<double> rhs;
  for (std::size_t j = 0; j < regions.size(); ++j) {
    const auto& reg = regions[j];
    reg.validate();
    if (reg.center.size() != D) throw InvalidInput("region center dimension mismatch");
    int order = 0;
    if (const auto* t = std::get_if<TaylorRegion>(&reg.method)) order = t->order;
    else if (!std::holds_alternative<PointRegion>(reg.method))
      throw InvalidInput("taylor_robust_solve needs point or Taylor regions");
    std::vector<detail::Jet> jets;
    for (int i = 0; i < N; ++i)
      jets.push_back(detail::coupling_jet(reg.center, layout.control(i), layout.J(), layout.alpha(), order));
    for (const auto& e : detail::monomials(D, order)) {
      Vec row(N);
      for (int i = 0; i < N; ++i) row(i) = jets[i].coeff(e);
      const bool is_value = std::all_of(e.begin(), e.end(), [](int x) { return x == 0; });
      rows.push_back(row);
      rhs.push_back(is_value ? target.lambdas(static_cast<int>(j)) : 0.0);
    }
  }
  if (static_cast<int>(rows.size()) > N)
    throw InvalidInput("not enough control qubits: " + std::to_string(rows.size()) +
                       " constraints for " + std::to_string(N) + " controls");
  Mat A(rows.size(), N);
  for (std::size_t r = 0; r < rows.size(); ++r) A.row(r) = rows[r].transpose();
  const Vec b = Eigen::Map<const Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  // Symmetric layouts give dependent rows; synthesize keeps any exact solution.
  return detail::synthesize(A, b, strategy);
}

// Stacked rows f(center + offset) . c = lambda_j for every virtual qubit.
inline Mat virtual_coupling_matrix(const Layout& layout, const std::vector<RegionSpec>& regions) {
  std::vector<Vec> rows;
  for (const auto& reg : regions) {
    reg.validate();
    std::vector<Position> offs;
    if (const auto* d = std::get_if<DiscretizedRegion>(&reg.method)) offs = d->offsets;
    else if (std::holds_alternative<PointRegion>(reg.method)) offs = {Position::Zero(reg.center.size())};
    else throw InvalidInput("discretized_robust_solve needs point or discretized regions");
    for (const auto& o : offs) rows.push_back(coupling_field(reg.center + o, layout));
  }
  Mat A(rows.size(), layout.num_controls());
  for (std::size_t r = 0; r < rows.size(); ++r) A.row(r) = rows[r].transpose();
  return A;
}

inline SubspaceVector discretized_robust_solve(const Layout& layout, const std::vector<RegionSpec>& regions,
                                               const InteractionPattern& target,
                                               SolveStrategy strategy = SolveStrategy::max_coupling) {
  if (static_cast<int>(regions.size()) != target.size())
    throw InvalidInput("one region per target qubit required");
  const Mat A = virtual_coupling_matrix(layout, regions);
  std::vector<double> rhs;
  for (std::size_t j = 0; j < regions.size(); ++j) {
    std::size_t count = 1;
    if (const auto* d = std::get_if<DiscretizedRegion>(&regions[j].method)) count = d->offsets.size();
    rhs.insert(rhs.end(), count, target.lambdas(static_cast<int>(j)));
  }
  const Vec b = Eigen::Map<const Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  if (A.rows() == A.cols()) {
    Eigen::FullPivLU<Mat> lu(A);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw NoSolution("singular virtual coupling matrix");
  }
  return detail::synthesize(A, b, strategy);
}

// Regions centered on the layout's targets with a common method.
inline std::vector<RegionSpec> regions_at_targets(
    const Layout& layout, const std::variant<PointRegion, TaylorRegion, DiscretizedRegion>& method) {
  std::vector<RegionSpec> out;
  for (const auto& t : layout.targets()) out.push_back({t, method});
  return out;
}

}  // namespace rce
