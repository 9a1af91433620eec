#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homog/convergence.hpp"

using namespace homog;

namespace {

constexpr double kPi = std::numbers::pi;

BoundaryProfile sampled(double (*f)(double), int n = 8192) {
  BoundaryProfile p;
  for (int k = 0; k < n; ++k) {
    p.s.push_back(2 * kPi * k / n);
    p.values.push_back(f(2 * kPi * k / n));
  }
  return p;
}

BoundaryProfile constant_profile(double c) {
  BoundaryProfile p;
  p.s = {0.0, kPi};
  p.values = {c, c};
  return p;
}

DiscreteSolution nodal(const DiscreteSolution& u, double (*f)(const Eigen::Vector2d&)) {
  DiscreteSolution out = u;
  const HexMesh& m = *u.mesh;
  const LatticeRows& R = m.rows();
  for (int r = 0; r < R.rows(); ++r)
    for (int i = R.lo[r]; i <= R.hi[r]; ++i) {
      const std::int64_t p = R.offset[r] + (i - R.lo[r]);
      if (m.kind()[p] >= 0) out.values[p] = f(m.position(i, R.j0 + r));
    }
  return out;
}

const std::vector<double> kIdentity{1.0, 0.0, 0.0, 1.0};

PeriodicTensor oscillating() {
  return PeriodicTensor::isotropic(
      ModeBuilder(2, 1).add_constant(0, 2.0).add_sin({1, 0}, 0, 1.0).add_cos({0, 1}, 0, 0.5).build(), 1, 0.2);
}

}  // namespace

TEST(HexMesh, BoundaryNodesOnBoundaryAndNoInversion) {
  for (const auto& dom : {ConvexDomain::disc(), ConvexDomain::ellipse(1.5, 0.7)}) {
    const HexMesh m(dom, 1.0 / 40);
    EXPECT_EQ(m.inverted(), 0);
    EXPECT_GT(m.unknowns(), 0);
    for (const auto& x : m.boundary_positions()) EXPECT_NEAR(dom.level(x), 0.0, 1e-12);
    EXPECT_LE(m.covered_area(), dom.area());
    EXPECT_GT(m.covered_area(), 0.98 * dom.area());
    EXPECT_LE(m.max_diameter(), 2.0 / 40);
  }
}

TEST(HexMesh, CoveredAreaConverges) {
  const auto dom = ConvexDomain::disc();
  const double e1 = kPi - HexMesh(dom, 1.0 / 32).covered_area();
  const double e2 = kPi - HexMesh(dom, 1.0 / 64).covered_area();
  EXPECT_GT(e1, 0.0);
  EXPECT_GT(e1 / e2, 3.0);
}

TEST(HexMesh, StiffnessRowsSumToZero) {
  const std::array<Eigen::Vector2d, 3> p{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0.1), Eigen::Vector2d(0.2, 0.9)};
  const double K[4] = {2.0, 0.3, 0.3, 1.0};
  const Eigen::Matrix3d S = p1_stiffness(p, K);
  EXPECT_LT((S - S.transpose()).norm(), 1e-14);
  EXPECT_LT(S.rowwise().sum().norm(), 1e-14);
  EXPECT_GT(signed_area(p), 0.0);
  // Linear function u = x: energy = area * K00.
  const Eigen::Vector3d u(p[0].x(), p[1].x(), p[2].x());
  EXPECT_NEAR(u.dot(S * u), signed_area(p) * 2.0, 1e-14);
}

TEST(Multigrid, AgreesWithDirectSolve) {
  const auto dom = ConvexDomain::disc();
  FemOptions direct, mg;
  direct.direct_min_h = 0.0;
  mg.direct_min_h = 1.0;
  const auto f = [](double s) { return std::cos(3 * s) + 0.5 * std::sin(s); };
  const BoundaryProfile p = sampled(+f);
  const DiscreteSolution a = solve_homogenized({2.0, 0.3, 0.3, 1.0}, p, dom, 1.0 / 128, mg);
  const DiscreteSolution b = solve_homogenized({2.0, 0.3, 0.3, 1.0}, p, dom, 1.0 / 128, direct);
  ASSERT_EQ(a.stats.method, "multigrid");
  ASSERT_EQ(b.stats.method, "direct");
  EXPECT_GT(a.stats.levels, 2);
  EXPECT_LT(a.stats.iterations, 30);
  double worst = 0;
  for (std::size_t k = 0; k < a.values.size(); ++k) worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
  EXPECT_LT(worst, 1e-8);
}

TEST(Homogenized, ConstantDataGivesConstant) {
  const DiscreteSolution u = solve_homogenized(kIdentity, constant_profile(1.0), ConvexDomain::disc(), 1.0 / 64);
  for (std::size_t k = 0; k < u.values.size(); ++k)
    if (u.mesh->kind()[k] >= 0) EXPECT_NEAR(u.values[k], 1.0, 1e-12);
}

TEST(Homogenized, CircularHarmonicSecondOrder) {
  const auto dom = ConvexDomain::disc();
  std::vector<double> err;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    const DiscreteSolution u = solve_homogenized(kIdentity, sampled([](double s) { return std::cos(2 * s); }), dom, h);
    const DiscreteSolution ex = nodal(u, [](const Eigen::Vector2d& x) { return x.x() * x.x() - x.y() * x.y(); });
    err.push_back(std::sqrt(error_norm(u, ex, 2)));
  }
  EXPECT_GT(std::log2(err[0] / err[1]), 1.7);
  EXPECT_GT(std::log2(err[1] / err[2]), 1.7);
}

TEST(Homogenized, LaminateTensorSelfConvergence) {
  const auto dom = ConvexDomain::disc();
  const std::vector<double> abar{std::sqrt(3.0), 0.0, 0.0, 2.0};
  const BoundaryProfile p = sampled([](double s) { return std::cos(s) + 0.3 * std::sin(2 * s); });
  const auto u1 = solve_homogenized(abar, p, dom, 1.0 / 16);
  const auto u2 = solve_homogenized(abar, p, dom, 1.0 / 32);
  const auto u3 = solve_homogenized(abar, p, dom, 1.0 / 64);
  const double d1 = std::sqrt(error_norm(u1, u2, 2)), d2 = std::sqrt(error_norm(u2, u3, 2));
  EXPECT_GT(std::log2(d1 / d2), 1.5);
}

TEST(Oscillating, NonOscillatingDataIsHarmonicExtension) {
  const auto dom = ConvexDomain::disc();
  SlowFactor slow;
  slow.modes = {{2, cplx(1.0, 0.0)}};
  const TwoScaleBoundaryDatum g({DatumTerm{slow, PeriodicField::constant(2, {1.0})}});
  const PeriodicTensor I = PeriodicTensor::identity(2, 1, 0.5);
  std::vector<double> err;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    const DiscreteSolution u = solve_oscillating(I, g, dom, 8 * h, h);
    err.push_back(
        std::sqrt(error_norm(u, nodal(u, [](const Eigen::Vector2d& x) { return x.x() * x.x() - x.y() * x.y(); }), 2)));
  }
  EXPECT_LT(err[2], 1e-3);
  EXPECT_GT(std::log2(err[1] / err[2]), 1.7);
}

TEST(Oscillating, SelfConvergenceUnderRefinement) {
  const auto dom = ConvexDomain::disc();
  const TwoScaleBoundaryDatum g({DatumTerm{SlowFactor::constant(1.0), ModeBuilder(2, 1).add_cos({1, 0}, 0, 1.0).build()}});
  const PeriodicTensor I = PeriodicTensor::identity(2, 1, 0.5);
  const double eps = 1.0 / 8;
  const auto u1 = solve_oscillating(I, g, dom, eps, eps / 16);
  const auto u2 = solve_oscillating(I, g, dom, eps, eps / 32);
  const auto u3 = solve_oscillating(I, g, dom, eps, eps / 64);
  const double d1 = std::sqrt(error_norm(u1, u2, 2)), d2 = std::sqrt(error_norm(u2, u3, 2));
  EXPECT_GT(std::log2(d1 / d2), 1.5);
}

TEST(Oscillating, DiscreteMaximumPrinciple) {
  const auto dom = ConvexDomain::disc();
  const TwoScaleBoundaryDatum g({DatumTerm{SlowFactor::constant(1.0),
                                           ModeBuilder(2, 1).add_cos({1, 0}, 0, 1.0).add_sin({1, 1}, 0, 0.5).build()}});
  const DiscreteSolution u = solve_oscillating(oscillating(), g, dom, 1.0 / 16, 1.0 / 128);
  double lo = 1e300, hi = -1e300;
  for (auto id : u.mesh->boundary_node_ids()) lo = std::min(lo, u.values[id]), hi = std::max(hi, u.values[id]);
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    if (u.mesh->kind()[k] != 0) continue;
    EXPECT_GE(u.values[k], lo - 1e-8);
    EXPECT_LE(u.values[k], hi + 1e-8);
  }
}

TEST(Oscillating, ConstantDataExact) {
  const TwoScaleBoundaryDatum g({DatumTerm{SlowFactor::constant(1.0), PeriodicField::constant(2, {2.0})}});
  const DiscreteSolution u = solve_oscillating(oscillating(), g, ConvexDomain::disc(), 1.0 / 16, 1.0 / 128);
  for (std::size_t k = 0; k < u.values.size(); ++k)
    if (u.mesh->kind()[k] >= 0) EXPECT_NEAR(u.values[k], 2.0, 1e-10);
}

TEST(Oscillating, RefusesCoarseMeshAndUnsupportedInput) {
  const TwoScaleBoundaryDatum g({DatumTerm{SlowFactor::constant(1.0), PeriodicField::constant(2, {1.0})}});
  EXPECT_THROW(solve_oscillating(oscillating(), g, ConvexDomain::disc(), 1.0 / 16, 1.0 / 64), InvalidArgument);
  const PeriodicTensor skew = PeriodicTensor::constant(2, 1, {1.0, 0.2, -0.2, 1.0}, 0.5);
  EXPECT_THROW(solve_oscillating(skew, g, ConvexDomain::disc(), 1.0 / 16, 1.0 / 128), InvalidArgument);
}

TEST(ErrorNorm, IdenticalSolutionsGiveZero) {
  const auto u = solve_homogenized(kIdentity, sampled([](double s) { return std::sin(s); }), ConvexDomain::disc(), 1.0 / 32);
  EXPECT_EQ(error_norm(u, u, 2), 0.0);
  EXPECT_EQ(error_norm(u, u, 3, 2), 0.0);
}

TEST(ErrorNorm, ConstantDifferenceIntegratesArea) {
  const auto dom = ConvexDomain::disc(1.0 / std::sqrt(kPi));
  const auto mesh = std::make_shared<const HexMesh>(dom, 1.0 / 64);
  const auto u1 = solve_homogenized(kIdentity, constant_profile(1.0), mesh);
  const auto u2 = solve_homogenized(kIdentity, constant_profile(1.5), mesh);
  for (double q : {2.0, 3.0, 4.5})
    EXPECT_NEAR(error_norm(u1, u2, q), std::pow(0.5, q) * mesh->covered_area(), 1e-10);
}

TEST(ErrorNorm, QuadratureRefinementCrossCheck) {
  const auto dom = ConvexDomain::disc();
  const auto u1 = solve_homogenized(kIdentity, sampled([](double s) { return std::cos(s); }), dom, 1.0 / 32);
  const auto u2 = solve_homogenized(kIdentity, sampled([](double s) { return std::cos(3 * s); }), dom, 1.0 / 32);
  EXPECT_NEAR(error_norm(u1, u2, 2, 1), error_norm(u1, u2, 2, 4), 1e-12);
  EXPECT_NEAR(error_norm(u1, u2, 3, 1), error_norm(u1, u2, 3, 4), 1e-6);
}

TEST(ErrorNorm, DifferentMeshesInterpolate) {
  const auto dom = ConvexDomain::disc();
  const auto lin = sampled([](double s) { return std::cos(s); });
  const auto u1 = solve_homogenized(kIdentity, lin, dom, 1.0 / 32);
  const auto u2 = solve_homogenized(kIdentity, lin, dom, 1.0 / 64);
  EXPECT_LT(error_norm(u1, u2, 2), 1e-5);
  EXPECT_EQ(error_norm(u1, u2, 2), error_norm(u2, u1, 2));
}

TEST(ErrorNorm, RejectsSmallExponent) {
  const auto u = solve_homogenized(kIdentity, constant_profile(1.0), ConvexDomain::disc(), 1.0 / 16);
  EXPECT_THROW(error_norm(u, u, 1.5), InvalidArgument);
}

TEST(FitSlope, RecoversPowerLaw) {
  std::vector<double> e, v;
  for (int k = 3; k < 9; ++k) e.push_back(std::ldexp(1.0, -k)), v.push_back(3.0 * std::pow(e.back(), 0.4));
  EXPECT_NEAR(fit_slope(e, v), 0.4, 1e-12);
  EXPECT_THROW(fit_slope({1.0}, {1.0}), InvalidArgument);
}

TEST(BoundaryProfile, LinearInterpolationWithWrap) {
  BoundaryProfile p;
  p.s = {0.0, 1.0, 2.0, 6.0};
  p.values = {10, 11, 12, 16};
  const double gap = 2 * kPi - 6.0;
  EXPECT_NEAR(p(0.4), 10.4, 1e-14);
  EXPECT_NEAR(p(1.5), 11.5, 1e-14);
  EXPECT_NEAR(p(1.0), 11.0, 1e-14);
  EXPECT_NEAR(p(6.2), 16 - 6 * 0.2 / gap, 1e-12);
  EXPECT_NEAR(p(-0.1), 16 - 6 * (gap - 0.1) / gap, 1e-12);
  EXPECT_NEAR(p(4.0), 14.0, 1e-14);
}

TEST(RateStudy, RefusesFewerThanFourEpsilons) {
  RateConfig cfg;
  cfg.a = oscillating();
  cfg.epsilons = {1.0 / 8, 1.0 / 16, 1.0 / 32};
  EXPECT_THROW(rate_study(cfg), InvalidArgument);
}

TEST(RateStudy, FastConstantDataSitsAtMeshFloor) {
  RateConfig cfg;
  cfg.a = oscillating();
  SlowFactor slow;
  slow.modes = {{0, cplx(1.0, 0.0)}, {1, cplx(0.5, 0.0)}};
  cfg.g = TwoScaleBoundaryDatum({DatumTerm{slow, PeriodicField::constant(2, {1.0})}});
  cfg.epsilons = {1.0 / 4, 1.0 / 6, 1.0 / 8, 1.0 / 12};
  cfg.gbar_samples = 16;
  cfg.cell_res = 16;
  cfg.gbar.layer.res_theta = 16;
  cfg.gbar.layer.res_t = 100;
  cfg.gbar.quadrature_res = 16;
  const RateStudy st = rate_study(cfg);
  ASSERT_EQ(st.records.size(), 4u);
  for (const auto& s : st.profile.samples) EXPECT_NEAR(s.gbar[0], slow.evaluate(s.s), 1e-6);
  for (const auto& r : st.records) {
    EXPECT_GE(r.error_Lq, 0.0);
    EXPECT_NEAR(r.h, r.epsilon / 8, 1e-15);
  }
}
