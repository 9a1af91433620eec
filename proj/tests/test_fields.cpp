#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "homog/config.hpp"
#include "homog/fft.hpp"
#include "homog/fields.hpp"

using namespace homog;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicField sine_laminate() {
  return ModeBuilder(2, 1).add_constant(0, 2.0).add_sin({1, 0}, 0, 1.0).build();
}

PeriodicField random_field(int dim, int comps, int modes, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> k(-3, 3);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  ModeBuilder b(dim, comps);
  std::set<Lattice> used;
  for (int m = 0; m < modes;) {
    Lattice xi(dim), neg(dim);
    for (int i = 0; i < dim; ++i) xi[i] = k(rng), neg[i] = -xi[i];
    if (xi == neg || used.count(xi) || used.count(neg)) continue;
    used.insert(xi);
    b.add_mode(xi, m % comps, cplx(c(rng), c(rng)));
    ++m;
  }
  return b.build();
}

}  // namespace

TEST(PeriodicField, ConjugatePartnersAreCompleted) {
  const PeriodicField f(2, 1, {FieldMode{{1, 2}, {cplx(0.5, 0.25)}}});
  EXPECT_EQ(f.coefficient({-1, -2}, 0), cplx(0.5, -0.25));
  const std::vector<double> y{0.3, 0.7};
  const double expected = 2 * (0.5 * std::cos(2 * kPi * 1.7) - 0.25 * std::sin(2 * kPi * 1.7));
  EXPECT_NEAR(f.evaluate(y, 0), expected, 1e-14);
}

TEST(PeriodicField, InconsistentConjugatePairThrows) {
  EXPECT_THROW(PeriodicField(2, 1, {FieldMode{{1, 0}, {cplx(1, 0)}}, FieldMode{{-1, 0}, {cplx(2, 0)}}}),
               InvalidArgument);
}

TEST(PeriodicField, IntegerShiftInvariance) {
  const PeriodicField f = random_field(2, 1, 5, 7);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const std::vector<double> y{u(rng), u(rng)};
    const std::vector<double> z{y[0] + 3, y[1] - 7};
    EXPECT_NEAR(f.evaluate(y, 0), f.evaluate(z, 0), 1e-12);
  }
}

TEST(PeriodicField, SynthesisMatchesInverseFft) {
  const PeriodicField f = random_field(2, 1, 8, 3);
  const int n = 16;
  FftN fft({n, n});
  std::vector<cplx> spec(n * n, 0.0);
  for (const auto& m : f.modes()) {
    const int i = (m.xi[0] + n) % n, j = (m.xi[1] + n) % n;
    spec[i * n + j] += m.c[0];
  }
  fft.backward(spec.data());
  double worst = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::vector<double> y{static_cast<double>(i) / n, static_cast<double>(j) / n};
      worst = std::max(worst, std::abs(f.evaluate(y, 0) - spec[i * n + j].real()));
      EXPECT_LT(std::abs(spec[i * n + j].imag()), 1e-12);
    }
  EXPECT_LT(worst, 1e-12);
}

TEST(PeriodicTensor, IdentityEvaluatesToIdentity) {
  const PeriodicTensor a = PeriodicTensor::identity(2, 2, 0.5);
  const auto v = a.evaluate({0.17, 0.91});
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_EQ(v[a.index(al, be, i, j)], (al == be && i == j) ? 1.0 : 0.0);
}

TEST(PeriodicTensor, LaminateValueAtQuarter) {
  const PeriodicTensor a = PeriodicTensor::isotropic(sine_laminate(), 1, 1.0 / 3.0);
  const auto v = a.evaluate({0.25, 0.0});
  EXPECT_NEAR(v[a.index(0, 0, 0, 0)], 3.0, 1e-14);
  EXPECT_NEAR(v[a.index(1, 1, 0, 0)], 3.0, 1e-14);
  EXPECT_EQ(v[a.index(0, 1, 0, 0)], 0.0);
}

TEST(PeriodicTensor, LambdaOutsideUnitIntervalThrows) {
  EXPECT_THROW(PeriodicTensor::identity(2, 1, 0.0), InvalidArgument);
  EXPECT_THROW(PeriodicTensor::identity(2, 1, 1.0), InvalidArgument);
}

TEST(PeriodicTensor, AdjointSwapsIndices) {
  const PeriodicTensor id = PeriodicTensor::identity(2, 2, 0.1);
  const PeriodicTensor a(2, 2, id.field() + random_field(2, 16, 12, 5).scaled(0.05), 0.1);
  const PeriodicTensor b = a.adjoint();
  const auto va = a.evaluate({0.3, 0.4}), vb = b.evaluate({0.3, 0.4});
  for (int al = 0; al < 2; ++al)
    for (int be = 0; be < 2; ++be)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(vb[a.index(al, be, i, j)], va[a.index(be, al, j, i)], 1e-15);
}

TEST(PeriodicTensor, RotationByIdentityIsNoOp) {
  const PeriodicTensor a = PeriodicTensor::isotropic(sine_laminate(), 1, 1.0 / 3.0);
  const PeriodicTensor b = a.rotated(Eigen::MatrixXd::Identity(2, 2));
  const auto va = a.evaluate({0.1, 0.6}), vb = b.evaluate({0.1, 0.6});
  for (std::size_t k = 0; k < va.size(); ++k) EXPECT_NEAR(va[k], vb[k], 1e-15);
}

TEST(Ellipticity, IdentityPasses) {
  const auto cert = validate_ellipticity(PeriodicTensor::identity(2, 1, 0.5), 16);
  EXPECT_TRUE(cert.pass);
  EXPECT_DOUBLE_EQ(cert.lambda_observed, 1.0);
}

TEST(Ellipticity, LaminateFailsForTightLambda) {
  const auto cert = validate_ellipticity(PeriodicTensor::isotropic(sine_laminate(), 1, 0.9), 64);
  EXPECT_FALSE(cert.pass);
  EXPECT_NEAR(cert.max_eig, 3.0, 1e-12);
  EXPECT_EQ(cert.worst_point.size(), 2u);
}

TEST(Ellipticity, LaminatePassesForOneThird) {
  const auto cert = validate_ellipticity(PeriodicTensor::isotropic(sine_laminate(), 1, 1.0 / 3.0), 64);
  EXPECT_TRUE(cert.pass);
  EXPECT_NEAR(cert.min_eig, 1.0, 1e-12);
  EXPECT_NEAR(cert.max_eig, 3.0, 1e-12);
}

TEST(BoundaryDatum, PeriodicInFastVariable) {
  SlowFactor slow;
  slow.modes = {{0, cplx(1, 0)}, {2, cplx(0.3, -0.1)}};
  const TwoScaleBoundaryDatum g({DatumTerm{slow, random_field(2, 1, 4, 9)}});
  for (double s : {0.0, 1.0, 4.0}) EXPECT_NEAR(g.evaluate(s, {0.2, 0.9}), g.evaluate(s, {5.2, -2.1}), 1e-12);
  EXPECT_FALSE(g.is_fast_constant());
}

TEST(BoundaryDatum, SlowFactorIsRealPart) {
  SlowFactor slow;
  slow.modes = {{1, cplx(0.0, 1.0)}};
  EXPECT_NEAR(slow.evaluate(0.0), 0.0, 1e-15);
  EXPECT_NEAR(slow.evaluate(kPi / 2), -1.0, 1e-15);
  EXPECT_NEAR(slow.evaluate(0.5), -std::sin(0.5), 1e-15);
}

TEST(ConvexDomain, DiscChart) {
  const auto dom = ConvexDomain::disc();
  const auto p0 = boundary_chart_eval(dom, 0.0);
  EXPECT_NEAR((p0.point - Eigen::Vector2d(1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((p0.normal - Eigen::Vector2d(1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(p0.curvature, 1.0, 1e-15);
  const auto p1 = boundary_chart_eval(dom, kPi / 2);
  EXPECT_NEAR((p1.point - Eigen::Vector2d(0, 1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((p1.normal - Eigen::Vector2d(0, 1)).norm(), 0.0, 1e-15);
}

TEST(ConvexDomain, EllipseCurvatureAgainstClosedForm) {
  const auto dom = ConvexDomain::ellipse(2.0, 1.0);
  const auto p = boundary_chart_eval(dom, 0.0);
  EXPECT_NEAR((p.point - Eigen::Vector2d(2, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(p.curvature, 2.0, 1e-12);
  for (double t = 0.1; t < 6.2; t += 0.37) {
    const double st = std::sin(t), ct = std::cos(t);
    const double k = 2.0 / std::pow(4 * st * st + ct * ct, 1.5);
    EXPECT_NEAR(boundary_chart_eval(dom, t).curvature, k, 1e-12);
  }
  EXPECT_NEAR(dom.curvature_min(), 0.25, 1e-15);
}

TEST(ConvexDomain, NormalIsOutwardAndUnit) {
  for (const auto& dom : {ConvexDomain::disc(), ConvexDomain::ellipse(2.0, 1.0), ConvexDomain::ellipse(0.7, 1.3)}) {
    for (int k = 0; k < 200; ++k) {
      const auto c = dom.chart(2 * kPi * k / 200);
      EXPECT_NEAR(c.normal.norm(), 1.0, 1e-14);
      EXPECT_GT((c.point - dom.interior_reference()).dot(c.normal), 0.0);
      EXPECT_NEAR(dom.level(c.point), 0.0, 1e-13);
    }
  }
}

TEST(ConvexDomain, ChartParameterInvertsChart) {
  const auto dom = ConvexDomain::ellipse(1.5, 0.8);
  for (int k = 0; k < 50; ++k) {
    const double s = 2 * kPi * (k + 0.5) / 50;
    EXPECT_NEAR(dom.chart_parameter(dom.chart(s).point), s, 1e-12);
  }
}

TEST(ConvexDomain, EllipsePerimeterAndArea) {
  const auto dom = ConvexDomain::ellipse(2.0, 1.0);
  EXPECT_NEAR(dom.area(), 2 * kPi, 1e-14);
  // Complete elliptic integral of the second kind, E(sqrt(3)/2) = 1.2110560275684595.
  EXPECT_NEAR(dom.perimeter(), 4 * 2.0 * 1.2110560275684595, 1e-10);
}

TEST(ConvexDomain, DistanceToBoundary) {
  const auto disc = ConvexDomain::disc(2.0);
  EXPECT_NEAR(disc.distance_to_boundary({0.5, 0.0}), 1.5, 1e-14);
  const auto ell = ConvexDomain::ellipse(2.0, 1.0);
  EXPECT_NEAR(ell.distance_to_boundary({0.0, 0.0}), 1.0, 1e-10);
  EXPECT_NEAR(ell.distance_to_boundary({0.0, 0.25}), 0.75, 1e-10);
}

TEST(Config, ParsesTensorDomainAndDatum) {
  const Config cfg = Config::parse(
      "# laminate\n"
      "a.dim = 2\n"
      "a.sysdim = 1\n"
      "a.lambda = 0.3\n"
      "a.scalar = (0,0; 2,0) (1,0; 0,-0.5)\n"
      "domain = ellipse(2,1)\n"
      "g.0.slow = (0; 1,0)\n"
      "g.0.fast = (0,0; 0.5,0) (1,1; 0.5,0)\n");
  const PeriodicTensor a = tensor_from_config(cfg);
  EXPECT_NEAR(a.evaluate({0.25, 0.0})[0], 3.0, 1e-14);
  const ConvexDomain dom = domain_from_config(cfg);
  EXPECT_EQ(dom.semi_a(), 2.0);
  EXPECT_EQ(dom.semi_b(), 1.0);
  const TwoScaleBoundaryDatum g = datum_from_config(cfg, 2, 1);
  EXPECT_NEAR(g.evaluate(0.3, {0.0, 0.0}), 1.5, 1e-14);
}

TEST(Config, HashIgnoresOrderAndComments) {
  const Config a = Config::parse("x = 1\ny = 2\n");
  const Config b = Config::parse("# c\ny = 2\n\nx = 1\n");
  EXPECT_EQ(a.hash_hex(), b.hash_hex());
  EXPECT_NE(a.hash_hex(), Config::parse("x = 1\ny = 3\n").hash_hex());
}

TEST(Config, MalformedModeListThrows) {
  EXPECT_THROW(parse_mode_list("(1,0 1,0)", 2), InvalidArgument);
}
