#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "rce/geometry.hpp"

namespace rce {

namespace detail {
inline Position pt(std::initializer_list<double> xs) {
  Position p(static_cast<Eigen::Index>(xs.size()));
  int k = 0;
  for (double x : xs) p(k++) = x;
  return p;
}
}  // namespace detail

// S1 - C1 - C2 - S2 on a line with gaps d1, d2, d3.
inline Layout linear4(double d1 = 1.0, double d2 = 1.0, double d3 = 1.0, double J = 1.0) {
  using detail::pt;
  return Layout({pt({d1}), pt({d1 + d2})}, {pt({0.0}), pt({d1 + d2 + d3})}, J);
}

// Four controls on a cross of diameter d1, four targets a further d2 outward.
// Numbering runs counterclockwise from +x.
inline Layout cross8(double d1 = 1.0, double d2 = 1.0, bool with_s4 = true, double J = 1.0) {
  using detail::pt;
  const double rc = d1 / 2, rt = d1 / 2 + d2;
  std::vector<Position> c{pt({rc, 0}), pt({0, rc}), pt({-rc, 0}), pt({0, -rc})};
  std::vector<Position> t{pt({rt, 0}), pt({0, rt}), pt({-rt, 0})};
  if (with_s4) t.push_back(pt({0, -rt}));
  return Layout(std::move(c), std::move(t), J);
}

// 3x3 control grid (spacing d1) numbered row-major from the top left, with three
// targets on a circle of radius d2: S1 upper left, S2 upper right, S3 below.
inline Layout grid9(double d1 = 1.0, double d2 = 3.0, double J = 1.0) {
  using detail::pt;
  std::vector<Position> c;
  for (double y : {d1, 0.0, -d1})
    for (double x : {-d1, 0.0, d1}) c.push_back(pt({x, y}));
  const double r = d2 / std::sqrt(2.0);
  return Layout(std::move(c), {pt({-r, r}), pt({r, r}), pt({0, -d2})}, J);
}

// Minimal control set {C1, C3, C8} of grid9.
inline Layout grid9_minimal(double d1 = 1.0, double d2 = 3.0, double J = 1.0) {
  return grid9(d1, d2, J).select_controls({0, 2, 7});
}

// Three controls and three targets on concentric equilateral triangles.
inline Layout triangle6(double rc = 0.5, double rt = 1.5, double J = 1.0) {
  std::vector<Position> c, t;
  for (int k = 0; k < 3; ++k) {
    const double a = pi / 2 + 2 * pi * k / 3;
    c.push_back(detail::pt({rc * std::cos(a), rc * std::sin(a)}));
    t.push_back(detail::pt({rt * std::cos(a), rt * std::sin(a)}));
  }
  return Layout(std::move(c), std::move(t), J);
}

struct PresetInfo {
  std::string name;
  std::string description;
};

inline const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> catalog{
      {"linear4", "1D chain S1 C1 C2 S2, unit spacing"},
      {"cross8", "2D cross, 4 controls (diameter d) and 4 targets, d1 = d2 = d"},
      {"cross7", "cross8 without S4"},
      {"grid9", "3x3 control grid (d1 = 1) with 3 targets at radius 3"},
      {"grid9-minimal", "grid9 restricted to controls C1, C3, C8"},
      {"triangle6", "3 controls and 3 targets on concentric triangles"},
  };
  return catalog;
}

inline Layout preset(const std::string& name) {
  if (name == "linear4") return linear4();
  if (name == "cross8") return cross8();
  if (name == "cross7") return cross8(1.0, 1.0, false);
  if (name == "grid9") return grid9();
  if (name == "grid9-minimal") return grid9_minimal();
  if (name == "triangle6") return triangle6();
  throw InvalidInput("unknown preset '" + name + "'");
}

}  // namespace rce
