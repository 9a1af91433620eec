#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homog/gbar.hpp"

using namespace homog;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicTensor oscillating() {
  const PeriodicField s = ModeBuilder(2, 1)
                              .add_constant(0, 2.0)
                              .add_sin({1, 0}, 0, 0.5)
                              .add_cos({0, 1}, 0, 0.4)
                              .add_cos({1, 1}, 0, 0.3)
                              .build();
  return PeriodicTensor::isotropic(s, 1, 0.3);
}

TwoScaleBoundaryDatum fast_only(const PeriodicField& p) {
  return TwoScaleBoundaryDatum({DatumTerm{SlowFactor::constant(1.0), p}});
}

CellOptions cell_at(int n) {
  CellOptions o;
  o.resolution = n;
  o.tol = 1e-12;
  return o;
}

// Shared across tests: one cell solve and one weight for the golden normal.
struct Fixture {
  PeriodicTensor a = oscillating();
  CellSolution adj = adjoint_corrector(a, cell_at(64));
  std::vector<double> n = golden_direction();
  Direction dir = dioph_constant(n, 1.5, 200);
  BoundaryWeight w{a, adj, n};
  static const Fixture& get() {
    static const Fixture f;
    return f;
  }
};

}  // namespace

TEST(BoundaryWeight, NormalizationIdentity) {
  const auto& f = Fixture::get();
  EXPECT_LT(f.w.normalization_error(64), 1e-6);
  double ann = 0;
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be) ann += f.adj.abar_entry(al, be, 0, 0) * f.n[al] * f.n[be];
  EXPECT_NEAR(f.w.h()(0, 0), 1.0 / ann, 1e-12);
}

TEST(BoundaryWeight, DoublesDepthUntilTheLayerDecays) {
  const Fixture& f = Fixture::get();
  const std::vector<double> n{0.7191, 0.6949};
  const double norm = std::hypot(n[0], n[1]);
  const std::vector<double> u{n[0] / norm, n[1] / norm};
  const BoundaryWeight w(f.a, f.adj, u);
  EXPECT_GT(w.layers()[0].T, 30.0);
  EXPECT_LT(w.normalization_error(64), 1e-6);
  GbarOptions fixed;
  fixed.max_doublings = 0;
  EXPECT_THROW(BoundaryWeight(f.a, f.adj, u, fixed), Error);
}

TEST(BoundaryWeight, PiecesSumToOmega) {
  const auto& f = Fixture::get();
  const double th[2] = {0.31, 0.77};
  const auto p = f.w.pieces(th);
  EXPECT_NEAR((p[0] + p[1] + p[2] - f.w.omega(th)).norm(), 0.0, 1e-14);
}

TEST(Gbar, ConstantDataPreserved) {
  const auto& f = Fixture::get();
  const GbarSample s = compute_gbar(0.0, {0, 0}, f.dir, f.w, fast_only(PeriodicField::constant(2, {1.7})), 64);
  EXPECT_NEAR(s.gbar[0], 1.7, 1e-6);
  EXPECT_NEAR(s.components[0][0] + s.components[1][0] + s.components[2][0], s.gbar[0], 1e-14);
}

TEST(Gbar, IdentityCoefficientGivesFastMean) {
  const auto& f = Fixture::get();
  const PeriodicTensor I = PeriodicTensor::identity(2, 1, 0.5);
  const CellSolution adj = adjoint_corrector(I, cell_at(32));
  const BoundaryWeight w(I, adj, f.n);
  const PeriodicField p = ModeBuilder(2, 1).add_constant(0, 0.3).add_cos({1, 0}, 0, 1.0).add_sin({2, 1}, 0, 0.5).build();
  const GbarSample s = compute_gbar(0.0, {0, 0}, f.dir, w, fast_only(p), 64);
  EXPECT_NEAR(s.gbar[0], 0.3, 1e-8);
  for (double x : {0.0, 0.3, 0.71}) EXPECT_NEAR((tilde_omega(w, 0.01, {x, 2 * x}) - Eigen::MatrixXd::Identity(1, 1)).norm(), 0.0, 1e-12);
}

TEST(Gbar, CosineDataFrozenValue) {
  const auto& f = Fixture::get();
  // Frozen from a run with the cell problem at 128 and layer and quadrature grids at 64 / 128.
  const double reference = -0.065543677840;
  const PeriodicField p = ModeBuilder(2, 1).add_cos({1, 0}, 0, 1.0).build();
  const GbarSample s = compute_gbar(0.0, {0, 0}, f.dir, f.w, fast_only(p), 64);
  EXPECT_NEAR(s.gbar[0], reference, 1e-7);
}

TEST(Gbar, FrameInvariance) {
  const auto& f = Fixture::get();
  Frame fr = build_frame({-f.n[0], -f.n[1]});
  fr.M.col(0) *= -1;
  fr.N = fr.M.leftCols(1);
  const BoundaryWeight w2(f.a, f.adj, f.n, fr);
  const PeriodicField p = ModeBuilder(2, 1).add_cos({1, 0}, 0, 1.0).add_sin({1, 2}, 0, 0.4).build();
  const double g1 = compute_gbar(0.0, {0, 0}, f.dir, f.w, fast_only(p), 64).gbar[0];
  const double g2 = compute_gbar(0.0, {0, 0}, f.dir, w2, fast_only(p), 64).gbar[0];
  EXPECT_NEAR(g1, g2, 1e-6);
}

TEST(Gbar, LinearInData) {
  const auto& f = Fixture::get();
  const PeriodicField p = ModeBuilder(2, 1).add_cos({1, 0}, 0, 1.0).build();
  const PeriodicField q = ModeBuilder(2, 1).add_constant(0, 0.2).add_sin({0, 1}, 0, 0.8).add_cos({2, -1}, 0, 0.3).build();
  const double gp = compute_gbar(0.0, {0, 0}, f.dir, f.w, fast_only(p), 64).gbar[0];
  const double gq = compute_gbar(0.0, {0, 0}, f.dir, f.w, fast_only(q), 64).gbar[0];
  const double gs = compute_gbar(0.0, {0, 0}, f.dir, f.w, fast_only(p.scaled(0.7) + q.scaled(-1.3)), 64).gbar[0];
  EXPECT_NEAR(gs, 0.7 * gp - 1.3 * gq, 1e-12);
}

TEST(Gbar, TangentLineAverageApproachesGbar) {
  const auto& f = Fixture::get();
  const PeriodicField p = ModeBuilder(2, 1).add_constant(0, 0.5).add_cos({1, 0}, 0, 1.0).build();
  const double gbar = compute_gbar(0.0, {0, 0}, f.dir, f.w, fast_only(p), 64).gbar[0];
  // Average of omega~ g along the tangent line through the origin with a Gaussian window of width R.
  const Eigen::Vector2d tau(-f.n[1], f.n[0]);
  const double eps = 1.0, R = 400.0, step = 0.05;
  double num = 0, den = 0;
  for (double t = -4 * R; t <= 4 * R; t += step) {
    const double wt = std::exp(-kPi * t * t / (R * R));
    const Eigen::Vector2d x = t * tau;
    num += wt * tilde_omega(f.w, eps, x)(0, 0) * p.evaluate({x.x(), x.y()}, 0);
    den += wt;
  }
  EXPECT_NEAR(num / den, gbar, 1e-3);
}

TEST(Gbar, ProfileForIdentityIsSlowTimesMean) {
  const PeriodicTensor I = PeriodicTensor::identity(2, 1, 0.5);
  const CellSolution adj = adjoint_corrector(I, cell_at(16));
  GbarOptions opt;
  opt.layer.check_decay = false;
  opt.layer.res_theta = 16;
  opt.layer.res_t = 100;
  opt.quadrature_res = 16;
  WeightCache cache(I, adj, opt);
  SlowFactor slow;
  slow.modes = {{0, cplx(1.0, 0)}, {1, cplx(0.5, 0)}};
  const PeriodicField p = ModeBuilder(2, 1).add_constant(0, 0.8).add_cos({1, 1}, 0, 1.0).build();
  const TwoScaleBoundaryDatum g({DatumTerm{slow, p}});
  const GbarProfile prof = gbar_profile(ConvexDomain::disc(), g, cache, 1.5, 50, 32);
  ASSERT_EQ(prof.samples.size(), 32u);
  for (const auto& s : prof.samples) EXPECT_NEAR(s.gbar[0], 0.8 * slow.evaluate(s.s), 1e-8);
  EXPECT_GT(prof.rational_samples, 0);
  EXPECT_TRUE(std::isfinite(prof.seminorm_half));
  EXPECT_EQ(cache.size(), 32u);
}

TEST(Gbar, ContinuityRatioBoundedOnNearbyPairs) {
  const auto& f = Fixture::get();
  GbarOptions opt;
  WeightCache cache(f.a, f.adj, opt);
  const double s0 = std::atan2(f.n[1], f.n[0]);
  std::vector<std::pair<double, double>> pairs;
  for (double d : {1e-2, 3e-3, 1e-3}) pairs.push_back({s0, s0 + d});
  const PeriodicField p = ModeBuilder(2, 1).add_cos({1, 0}, 0, 1.0).build();
  const GbarProfile prof = gbar_pairs(ConvexDomain::disc(), fast_only(p), cache, 1.5, 200, pairs);
  ASSERT_EQ(prof.increments.size(), 3u);
  for (const auto& inc : prof.increments) EXPECT_LT(inc.ratio, 100.0);
  EXPECT_LT(prof.max_ratio, 100.0);
}

TEST(BoundarySeminorm, ConstantHasZeroSeminorm) {
  std::vector<double> s, v;
  for (int i = 0; i < 64; ++i) s.push_back(2 * kPi * i / 64), v.push_back(3.0);
  EXPECT_EQ(boundary_seminorm(ConvexDomain::disc(), s, v, 0.5), 0.0);
  for (int i = 0; i < 64; ++i) v[i] = std::cos(s[i]);
  EXPECT_GT(boundary_seminorm(ConvexDomain::disc(), s, v, 0.5), 0.0);
}
