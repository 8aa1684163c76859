#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rce/core.hpp"

namespace rce {

using Position = Eigen::VectorXd;

inline double coupling_strength(const Position& a, const Position& b, double J = 1.0,
                                double alpha = 1.0) {
  if (a.size() != b.size()) throw InvalidInput("positions of different dimension");
  const double r = (a - b).norm();
  if (!(r > 0.0)) throw DegenerateGeometry("coincident positions");
  return J * std::pow(r, -alpha);
}

// Control and target positions plus the J |r|^-alpha coupling model.
class Layout {
 public:
  Layout(std::vector<Position> control, std::vector<Position> target, double J = 1.0,
         double alpha = 1.0)
      : control_(std::move(control)), target_(std::move(target)), J_(J), alpha_(alpha) {
    if (control_.empty() || target_.empty())
      throw InvalidInput("layout needs at least one control and one target qubit");
    dim_ = static_cast<int>(control_.front().size());
    if (dim_ < 1 || dim_ > 3) throw InvalidInput("dimension must be 1, 2 or 3");
    if (!(J_ > 0.0) || !std::isfinite(J_)) throw InvalidInput("J must be positive");
    if (!std::isfinite(alpha_)) throw InvalidInput("alpha must be finite");
    std::vector<const Position*> all;
    for (const auto& p : control_) all.push_back(&p);
    for (const auto& p : target_) all.push_back(&p);
    for (const auto* p : all) {
      if (p->size() != dim_) throw InvalidInput("mixed position dimensions");
      if (!p->allFinite()) throw InvalidInput("non-finite position");
    }
    for (std::size_t a = 0; a < all.size(); ++a)
      for (std::size_t b = a + 1; b < all.size(); ++b)
        if (!((*all[a] - *all[b]).norm() > 0.0))
          throw DegenerateGeometry("two qubits share a position");
  }

  int dim() const { return dim_; }
  int num_controls() const { return static_cast<int>(control_.size()); }
  int num_targets() const { return static_cast<int>(target_.size()); }
  double J() const { return J_; }
  double alpha() const { return alpha_; }
  const std::vector<Position>& controls() const { return control_; }
  const std::vector<Position>& targets() const { return target_; }
  const Position& control(int i) const { return control_.at(i); }
  const Position& target(int j) const { return target_.at(j); }

  double coupling(const Position& a, const Position& b) const {
    return coupling_strength(a, b, J_, alpha_);
  }

  Layout with_targets(std::vector<Position> target) const {
    return Layout(control_, std::move(target), J_, alpha_);
  }
  Layout with_controls(std::vector<Position> control) const {
    return Layout(std::move(control), target_, J_, alpha_);
  }
  // Keeps the listed controls, in the given order.
  Layout select_controls(const std::vector<int>& idx) const {
    std::vector<Position> c;
    for (int i : idx) c.push_back(control_.at(i));
    return with_controls(std::move(c));
  }
  Layout select_targets(const std::vector<int>& idx) const {
    std::vector<Position> t;
    for (int j : idx) t.push_back(target_.at(j));
    return with_targets(std::move(t));
  }
  Layout scaled(double s) const {
    auto c = control_;
    auto t = target_;
    for (auto& p : c) p *= s;
    for (auto& p : t) p *= s;
    return Layout(std::move(c), std::move(t), J_, alpha_);
  }

 private:
  std::vector<Position> control_;
  std::vector<Position> target_;
  double J_;
  double alpha_;
  int dim_ = 0;
};

// n x N matrix, entry (j, i) couples control i to target j.
struct CouplingMatrix {
  Mat F;
  int num_targets() const { return static_cast<int>(F.rows()); }
  int num_controls() const { return static_cast<int>(F.cols()); }
};

struct SelfCouplings {
  Mat control_self;
  Mat target_self;
};

inline CouplingMatrix build_coupling_matrix(const Layout& layout) {
  const int n = layout.num_targets(), N = layout.num_controls();
  Mat F(n, N);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < N; ++i) F(j, i) = layout.coupling(layout.control(i), layout.target(j));
  return {F};
}

namespace detail {
inline Mat pairwise(const std::vector<Position>& pts, const Layout& layout) {
  const int m = static_cast<int>(pts.size());
  Mat f = Mat::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) f(a, b) = f(b, a) = layout.coupling(pts[a], pts[b]);
  return f;
}
}  // namespace detail

inline SelfCouplings build_self_couplings(const Layout& layout) {
  return {detail::pairwise(layout.controls(), layout), detail::pairwise(layout.targets(), layout)};
}

// Coupling of a point r to every control qubit.
inline Vec coupling_field(const Position& r, const Layout& layout) {
  if (r.size() != layout.dim()) throw InvalidInput("position dimension mismatch");
  Vec f(layout.num_controls());
  for (int i = 0; i < layout.num_controls(); ++i) f(i) = layout.coupling(r, layout.control(i));
  return f;
}

// D x N Jacobian of coupling_field at r.
inline Mat coupling_field_gradient(const Position& r, const Layout& layout) {
  Mat g(layout.dim(), layout.num_controls());
  for (int i = 0; i < layout.num_controls(); ++i) {
    const Position d = r - layout.control(i);
    const double dist = d.norm();
    if (!(dist > 0.0)) throw DegenerateGeometry("point coincides with a control qubit");
    g.col(i) = -layout.alpha() * layout.J() * std::pow(dist, -layout.alpha() - 2.0) * d;
  }
  return g;
}

}  // namespace rce
