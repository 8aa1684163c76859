#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rce/noise.hpp"
#include "rce/presets.hpp"

using namespace rce;

namespace {
double double_factorial(int k) {
  double r = 1;
  for (int j = k; j > 1; j -= 2) r *= j;
  return r;
}

// Small 1D protocol: linear chain with the (1, 1) pattern.
NoisyProtocol chain_protocol() {
  const auto l = linear4();
  const auto sol = solve_pattern(build_coupling_matrix(l), {1, 1});
  return gate_sequence_noise_protocol(l, sol.c, pi / (4.0 / sol.scale));
}

// Per-segment channel by explicit dense averaging over the tensor grid of target displacements.
CMat dense_channel_density(const NoisyProtocol& p, double sigma, int points) {
  const auto rule = gauss_hermite(points);
  const int n = p.layout.num_targets(), nq = n + 1;
  CMat rho = p.initial * p.initial.adjoint();
  for (const auto& seg : p.segments) {
    if (const auto* g = std::get_if<ControlGate>(&seg)) {
      const CMat U = oracle::op(nq, {{0, g->U}});
      rho = U * rho * U.adjoint();
      continue;
    }
    const auto& cs = std::get<CouplingSegment>(seg);
    CMat acc = CMat::Zero(rho.rows(), rho.cols());
    long total = 1;
    for (int k = 0; k < n; ++k) total *= points;
    for (long idx = 0; idx < total; ++idx) {
      long r = idx;
      double w = 1;
      CMat H = CMat::Zero(rho.rows(), rho.cols());
      for (int k = 0; k < n; ++k) {
        const int node = static_cast<int>(r % points);
        r /= points;
        w *= rule.weights[node];
        Position pos = p.layout.target(k);
        pos(0) += sigma * rule.nodes[node];
        H += coupling_field(pos, p.layout).dot(cs.c) * oracle::zz(nq, 0, k + 1);
      }
      const CMat U = oracle::expmh(H, cs.time);
      acc += w * U * rho * U.adjoint();
    }
    rho = acc;
  }
  return rho;
}
}  // namespace

TEST(Quadrature, GaussHermiteMoments) {
  for (int points : {1, 5, 9, 15}) {
    const auto r = gauss_hermite(points);
    ASSERT_EQ(r.nodes.size(), static_cast<std::size_t>(points));
    for (int m = 0; m < 2 * points; ++m) {
      double s = 0, scale = 0;
      for (int k = 0; k < points; ++k) {
        s += r.weights[k] * std::pow(r.nodes[k], m);
        scale += r.weights[k] * std::pow(std::abs(r.nodes[k]), m);
      }
      const double want = m % 2 ? 0.0 : double_factorial(m - 1);
      EXPECT_NEAR(s, want, 1e-10 * std::max(1.0, scale)) << points << " " << m;
    }
  }
  EXPECT_THROW(gauss_hermite(0), InvalidInput);
}

TEST(Sampling, StatisticsAndDeterminism) {
  const auto l = cross8();
  PositionNoiseModel model{0.1, {{2, 0.0}}};
  std::mt19937_64 rng(5);
  const int draws = 20000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sq = Eigen::Vector2d::Zero();
  for (int k = 0; k < draws; ++k) {
    const auto s = sample_positions(model, l, rng);
    for (int i = 0; i < l.num_controls(); ++i) ASSERT_EQ(s.control(i), l.control(i));
    ASSERT_EQ(s.target(2), l.target(2));
    const Eigen::Vector2d d = s.target(0) - l.target(0);
    sum += d;
    sq += d.cwiseProduct(d);
  }
  const Eigen::Vector2d mean = sum / draws, var = sq / draws - mean.cwiseProduct(mean);
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 4 * 0.1 / std::sqrt(draws));
  EXPECT_NEAR(var(0), 0.01, 0.01 * 4 * std::sqrt(2.0 / draws));
  EXPECT_NEAR(var(1), 0.01, 0.01 * 4 * std::sqrt(2.0 / draws));
  std::mt19937_64 a(9), b(9);
  EXPECT_EQ(sample_positions(model, l, a).target(1), sample_positions(model, l, b).target(1));
  EXPECT_THROW(sample_positions(PositionNoiseModel{-0.1}, l, a), InvalidInput);
  EXPECT_THROW(sample_positions(PositionNoiseModel{0.1, {{7, 0.1}}}, l, a), InvalidInput);
}

TEST(NoisyFidelity, ZeroNoiseIsIdeal) {
  const auto sc = cross_bell_scenario();
  const auto q = noisy_fidelity(sc.protocol, PositionNoiseModel{0.0}, bell_target(), {1, 2}, GaussHermiteMethod{});
  EXPECT_NEAR(q.fidelity, 1.0, 1e-12);
  const auto mc = noisy_fidelity(sc.protocol, PositionNoiseModel{0.0}, bell_target(), {1, 2}, MonteCarloMethod{100, 1});
  EXPECT_NEAR(mc.fidelity, 1.0, 1e-12);
  EXPECT_NEAR(mc.std_error, 0.0, 1e-7);
}

TEST(NoisyFidelity, ChannelMatchesDenseAverage) {
  const auto p = chain_protocol();
  for (double sigma : {0.05, 0.2}) {
    const CMat want = dense_channel_density(p, sigma, 7);
    const auto got = noisy_protocol_density(p, PositionNoiseModel{sigma}, GaussHermiteMethod{7});
    EXPECT_LT((got.density() - want).cwiseAbs().maxCoeff(), 1e-12) << sigma;
  }
}

TEST(NoisyFidelity, DensityInvariants) {
  const auto sc = grid_bell_scenario(1, 0.2);
  for (auto corr : {NoiseCorrelation::per_segment, NoiseCorrelation::static_draw}) {
    PositionNoiseModel m{0.2};
    m.correlation = corr;
    const NoiseMethod method = corr == NoiseCorrelation::per_segment ? NoiseMethod{GaussHermiteMethod{5}}
                                                                     : NoiseMethod{MonteCarloMethod{2000, 3}};
    const auto rho = noisy_protocol_density(sc.protocol, m, method);
    EXPECT_NEAR(rho.trace(), 1.0, 1e-12);
    EXPECT_LT(rho.hermiticity_error(), 1e-12);
    EXPECT_GT(rho.min_eigenvalue(), -1e-12);
  }
}

TEST(NoisyFidelity, MonteCarloAgreesWithQuadrature) {
  const auto sc = cross_bell_scenario();
  for (double sigma : {0.1, 0.2}) {
    const PositionNoiseModel m{sigma};
    const auto q = noisy_fidelity(sc.protocol, m, bell_target(), {1, 2}, GaussHermiteMethod{15});
    const auto mc = noisy_fidelity(sc.protocol, m, bell_target(), {1, 2}, MonteCarloMethod{20000, 11});
    EXPECT_GT(mc.std_error, 0.0);
    EXPECT_LT(std::abs(q.fidelity - mc.fidelity), 4 * mc.std_error) << sigma;
  }
}

TEST(NoisyFidelity, StaticCorrelationAgreesAcrossMethods) {
  const auto p = chain_protocol();
  PositionNoiseModel m{0.15};
  m.correlation = NoiseCorrelation::static_draw;
  const CVec target = (CVec(4) << 1, cplx(0, 1), cplx(0, 1), 1).finished() / 2.0;
  const auto q = noisy_fidelity(p, m, target, {1, 2}, GaussHermiteMethod{15});
  const auto mc = noisy_fidelity(p, m, target, {1, 2}, MonteCarloMethod{20000, 2});
  EXPECT_LT(std::abs(q.fidelity - mc.fidelity), 4 * mc.std_error);
  m.correlation = NoiseCorrelation::per_segment;
  // independent averaging of the two segments loses the echo, so fidelity is lower
  EXPECT_LT(noisy_fidelity(p, m, target, {1, 2}, GaussHermiteMethod{15}).fidelity, q.fidelity);
}

TEST(NoisyFidelity, StdErrorScaling) {
  const auto sc = cross_bell_scenario();
  const PositionNoiseModel m{0.2};
  const auto a = noisy_fidelity(sc.protocol, m, bell_target(), {1, 2}, MonteCarloMethod{4000, 7});
  const auto b = noisy_fidelity(sc.protocol, m, bell_target(), {1, 2}, MonteCarloMethod{16000, 7});
  EXPECT_NEAR(b.std_error / a.std_error, 0.5, 0.1);
}

TEST(NoisyFidelity, ThreadCountDoesNotChangeResult) {
  const auto sc = cross_bell_scenario();
  const PositionNoiseModel m{0.2};
  const auto one = noisy_fidelity(sc.protocol, m, bell_target(), {1, 2}, MonteCarloMethod{5000, 4, 1});
  const auto three = noisy_fidelity(sc.protocol, m, bell_target(), {1, 2}, MonteCarloMethod{5000, 4, 3});
  EXPECT_EQ(one.fidelity, three.fidelity);
  EXPECT_EQ(one.std_error, three.std_error);
  const auto other = noisy_fidelity(sc.protocol, m, bell_target(), {1, 2}, MonteCarloMethod{5000, 5, 1});
  EXPECT_NE(one.fidelity, other.fidelity);
}

TEST(NoisyFidelity, DecreasesWithSigma) {
  const auto sc = cross_bell_scenario();
  double last = 1.0;
  for (double sigma : {0.05, 0.1, 0.15, 0.2, 0.25}) {
    const double f = noisy_fidelity(sc.protocol, PositionNoiseModel{sigma}, bell_target(), {1, 2}, GaussHermiteMethod{})
                         .fidelity;
    EXPECT_LT(f, last);
    last = f;
  }
}

TEST(NoisyFidelity, RobustModelsOrdering) {
  for (double sigma : {0.1, 0.25}) {
    double F[4];
    for (int model = 0; model < 4; ++model) {
      const auto sc = grid_bell_scenario(model, sigma);
      F[model] = noisy_fidelity(sc.protocol, PositionNoiseModel{sigma}, bell_target(), {1, 2}, GaussHermiteMethod{9})
                     .fidelity;
    }
    EXPECT_GE(F[1], F[0]);
    EXPECT_GE(F[2], F[1]);
    EXPECT_GE(F[3], F[1]);
  }
}

TEST(NoisyFidelity, Errors) {
  const auto sc = cross_bell_scenario();
  EXPECT_THROW(noisy_fidelity(sc.protocol, PositionNoiseModel{0.1}, CVec::Ones(3), {1, 2}, GaussHermiteMethod{}),
               InvalidInput);
  EXPECT_THROW(noisy_fidelity(sc.protocol, PositionNoiseModel{0.1}, bell_target(), {1, 2}, MonteCarloMethod{1, 1}),
               InvalidInput);
  EXPECT_THROW(noisy_fidelity(sc.protocol, PositionNoiseModel{0.1}, bell_target(), {1, 2}, GaussHermiteMethod{0}),
               InvalidInput);
  auto bad = sc.protocol;
  bad.segments.push_back(CouplingSegment{Vec::Ones(2), 1.0});
  EXPECT_THROW(noisy_fidelity(bad, PositionNoiseModel{0.1}, bell_target(), {1, 2}, GaussHermiteMethod{}), InvalidInput);
  EXPECT_THROW(grid_bell_scenario(4, 0.1), InvalidInput);
}

TEST(Reports, ExactTables) {
  for (const char* id : {"appG", "appH"}) {
    const auto r = reproduce_table(id);
    EXPECT_TRUE(r.pass()) << id;
    EXPECT_FALSE(r.rows.empty());
  }
  EXPECT_THROW(reproduce_table("table9"), InvalidInput);
}
