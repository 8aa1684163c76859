#include <gtest/gtest.h>

#include <random>

#include "rce/geometry.hpp"
#include "rce/presets.hpp"

using namespace rce;

namespace {
Position p1(double x) { return Position::Constant(1, x); }
Position p2(double x, double y) {
  Position p(2);
  p << x, y;
  return p;
}
}  // namespace

TEST(Coupling, InverseDistance) {
  EXPECT_DOUBLE_EQ(coupling_strength(p1(0), p1(2)), 0.5);
  EXPECT_DOUBLE_EQ(coupling_strength(p2(0, 0), p2(3, 4), 2.0), 0.4);
  EXPECT_DOUBLE_EQ(coupling_strength(p2(0, 0), p2(3, 4), 1.0, 3.0), 1.0 / 125.0);
}

TEST(Coupling, RejectsCoincidentAndMixedDimensions) {
  EXPECT_THROW(coupling_strength(p1(1), p1(1)), DegenerateGeometry);
  EXPECT_THROW(coupling_strength(p1(1), p2(1, 0)), InvalidInput);
}

TEST(Layout, Validation) {
  EXPECT_THROW(Layout({}, {p1(0)}), InvalidInput);
  EXPECT_THROW(Layout({p1(0)}, {}), InvalidInput);
  EXPECT_THROW(Layout({p1(0)}, {p1(0)}), DegenerateGeometry);
  EXPECT_THROW(Layout({p1(0)}, {p2(1, 1)}), InvalidInput);
  EXPECT_THROW(Layout({p1(0)}, {p1(1)}, -1.0), InvalidInput);
  EXPECT_THROW(Layout({p1(0)}, {p1(std::nan(""))}), InvalidInput);
}

TEST(CouplingMatrix, EntryMeaning) {
  const Layout l({p1(1), p1(2)}, {p1(0), p1(3)});
  const auto F = build_coupling_matrix(l);
  ASSERT_EQ(F.num_targets(), 2);
  ASSERT_EQ(F.num_controls(), 2);
  EXPECT_DOUBLE_EQ(F.F(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(F.F(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(F.F(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(F.F(1, 1), 1.0);
}

TEST(SelfCouplings, SymmetricZeroDiagonal) {
  const auto s = build_self_couplings(cross8());
  EXPECT_EQ(s.control_self.rows(), 4);
  EXPECT_EQ(s.target_self.rows(), 4);
  EXPECT_LT((s.control_self - s.control_self.transpose()).norm(), 1e-15);
  EXPECT_EQ(s.control_self.diagonal().norm(), 0.0);
  // adjacent cross controls sit d/sqrt2 apart
  EXPECT_NEAR(s.control_self(0, 1), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(s.target_self(0, 1), 0.47, 0.01);
  EXPECT_NEAR(s.target_self(0, 2), 0.33, 0.01);
}

TEST(CouplingField, GradientMatchesFiniteDifference) {
  const auto l = grid9();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int trial = 0; trial < 10; ++trial) {
    Position r = p2(u(rng), u(rng));
    if ((r - l.control(4)).norm() < 2.0) r(0) += 5;
    const Mat g = coupling_field_gradient(r, l);
    const double h = 1e-6;
    for (int d = 0; d < 2; ++d) {
      Position a = r, b = r;
      a(d) += h;
      b(d) -= h;
      const Vec fd = (coupling_field(a, l) - coupling_field(b, l)) / (2 * h);
      EXPECT_LT((g.row(d).transpose() - fd).norm(), 1e-7);
    }
  }
}

TEST(Presets, Shapes) {
  EXPECT_EQ(linear4().num_controls(), 2);
  EXPECT_EQ(linear4().dim(), 1);
  EXPECT_EQ(cross8().num_targets(), 4);
  EXPECT_EQ(cross8(1, 1, false).num_targets(), 3);
  EXPECT_EQ(grid9().num_controls(), 9);
  EXPECT_EQ(grid9_minimal().num_controls(), 3);
  EXPECT_EQ(triangle6().num_targets(), 3);
  for (const auto& p : preset_catalog()) EXPECT_NO_THROW(preset(p.name));
  EXPECT_THROW(preset("missing"), InvalidInput);
}

TEST(Presets, LinearSpacingAndSelection) {
  const auto l = linear4(1.0, 2.0, 3.0);
  EXPECT_DOUBLE_EQ(l.control(0)(0), 1.0);
  EXPECT_DOUBLE_EQ(l.control(1)(0), 3.0);
  EXPECT_DOUBLE_EQ(l.target(1)(0), 6.0);
  const auto m = grid9_minimal();
  EXPECT_EQ(m.control(1), grid9().control(2));
  EXPECT_EQ(m.control(2), grid9().control(7));
  const auto s = l.scaled(2.0);
  EXPECT_DOUBLE_EQ(build_coupling_matrix(s).F(0, 0), 0.5 * build_coupling_matrix(l).F(0, 0));
}
