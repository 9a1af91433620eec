#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homog/ergodic.hpp"

using namespace homog;

namespace {

constexpr double kPi = std::numbers::pi;

struct GoldenCase {
  Direction dir = dioph_constant(golden_direction(), 1.5, 200);
  Frame frame = build_frame(golden_direction());
};

}  // namespace

TEST(SmoothWindow, GaussianDerivativeNormsClosedForm) {
  const SmoothWindow g = SmoothWindow::gaussian(1, 1.0);
  EXPECT_NEAR(g.integral(), 1.0, 1e-14);
  EXPECT_NEAR(g.derivative_l1(1), 2.0, 1e-13);
  EXPECT_NEAR(g.derivative_l1(2), 6.081387604265124, 1e-12);
  EXPECT_NEAR(g.derivative_l1(3), 23.782115765025111, 1e-10);
  EXPECT_NEAR(g.derivative_l1(4), 110.56326821904932, 1e-9);
}

TEST(SmoothWindow, ClosedFormMatchesNumericNorms) {
  for (const auto& w : {SmoothWindow::gaussian(1, 0.7), SmoothWindow::gaussian(2, 1.3), SmoothWindow::bump(1, 1.0)})
    for (int k = 0; k <= 3; ++k)
      EXPECT_NEAR(w.derivative_l1(k), w.derivative_l1_numeric(k), 1e-7 * std::max(1.0, w.derivative_l1(k)));
}

TEST(SmoothWindow, ScalingOfDerivativeNorms) {
  const SmoothWindow a = SmoothWindow::gaussian(1, 1.0), b = SmoothWindow::gaussian(1, 2.0);
  for (int k = 0; k <= 3; ++k) EXPECT_NEAR(b.derivative_l1(k), a.derivative_l1(k) * std::pow(2.0, 1 - k), 1e-11);
}

TEST(Quasiperiodic, ConstantFieldGivesMass) {
  GoldenCase s;
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.5);
  const PeriodicField K = PeriodicField::constant(2, {2.5});
  EXPECT_NEAR(quasiperiodic_integral(psi, K, s.frame, 0.1).real(), 2.5 * psi.integral(), 1e-14);
  const ErgodicTable t = verify_ergodic(psi, K, s.dir, {0.5, 0.25}, {1, 2});
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.error, 0.0);
    EXPECT_EQ(r.bound, 0.0);
  }
}

TEST(Quasiperiodic, SingleCosineClosedForm) {
  GoldenCase s;
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  const Lattice xi{2, -1};
  const PeriodicField K = ModeBuilder(2, 1).add_cos(xi, 0, 1.0).build();
  const double p = (s.frame.N.transpose() * Eigen::Vector2d(xi[0], xi[1])).norm();
  for (double eta : {1.0, 0.5, 0.25}) {
    const double expected = std::exp(-kPi * p * p / (eta * eta));
    EXPECT_NEAR(quasiperiodic_integral(psi, K, s.frame, eta).real(), expected, 1e-14);
  }
}

TEST(Quasiperiodic, QuadratureAgreesWithModeSum) {
  GoldenCase s;
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  const PeriodicField K = random_band_limited(2, 5, 3, 17);
  for (double eta : {0.5, 0.125}) {
    const cplx a = quasiperiodic_integral(psi, K, s.frame, eta);
    const double b = quasiperiodic_integral_quadrature(psi, K, s.frame, eta);
    EXPECT_NEAR(a.real(), b, 1e-8);
    EXPECT_LT(std::abs(a.imag()), 1e-12);
  }
}

TEST(Quasiperiodic, BumpWindowUsesQuadrature) {
  GoldenCase s;
  const SmoothWindow psi = SmoothWindow::bump(1, 1.0);
  const PeriodicField K = PeriodicField::constant(2, {1.0});
  EXPECT_NEAR(quasiperiodic_integral_quadrature(psi, K, s.frame, 0.3), psi.integral(), 1e-10);
}

TEST(ErgodicBound, SingleModeAssembledFromFactors) {
  GoldenCase s;
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  const Lattice xi{1, 2};
  const PeriodicField K = ModeBuilder(2, 1).add_mode(xi, 0, cplx(0.3, 0.4)).build();
  const double eta = 0.2;
  // Two modes +-xi, each |K-hat| = 0.5.
  const double expected = (eta / s.dir.A_lb) * 2.0 * 2 * 0.5 * std::pow(std::sqrt(5.0), 1.5);
  EXPECT_NEAR(ergodic_bound(psi, K, s.dir, eta, 1), expected, 1e-13 * expected);
}

TEST(ErgodicBound, HomogeneousInEta) {
  GoldenCase s;
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  const PeriodicField K = random_band_limited(2, 5, 3, 2);
  const double b1 = ergodic_bound(psi, K, s.dir, 0.25, 2), b2 = ergodic_bound(psi, K, s.dir, 0.125, 2);
  EXPECT_NEAR(b1 / b2, 4.0, 1e-13);
}

TEST(ErgodicBound, RationalDirectionThrows) {
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  const Direction d = dioph_constant({0.0, 1.0}, 1.5, 10);
  EXPECT_THROW(ergodic_bound(psi, random_band_limited(2, 3, 2, 1), d, 0.1, 1), InvalidArgument);
}

TEST(ErgodicBound, ModesOutsideCutoffThrow) {
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  const Direction d = dioph_constant(golden_direction(), 1.5, 2);
  const PeriodicField K = ModeBuilder(2, 1).add_cos({3, 0}, 0, 1.0).build();
  EXPECT_THROW(ergodic_bound(psi, K, d, 0.1, 1), InvalidArgument);
}

TEST(VerifyErgodic, GoldenDirectionAllPass) {
  GoldenCase s;
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  const PeriodicField K = random_band_limited(2, 5, 3, 23);
  const ErgodicTable t =
      verify_ergodic(psi, K, s.dir, {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}, {1, 2, 3});
  EXPECT_TRUE(t.all_pass);
  EXPECT_EQ(t.rows.size(), 15u);
  for (const auto& r : t.rows) EXPECT_LE(r.error, r.bound + 1e-10);
}

TEST(VerifyErgodic, ErrorDecaysAtLeastLinearly) {
  GoldenCase s;
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  const PeriodicField K = random_band_limited(2, 5, 3, 5);
  const ErgodicTable t = verify_ergodic(psi, K, s.dir, {1.0, 0.8, 0.6, 0.5, 0.4}, {1});
  EXPECT_GE(t.slope, 1.0);
}

TEST(RandomField, RealAndBandLimited) {
  const PeriodicField K = random_band_limited(2, 6, 4, 99);
  EXPECT_EQ(K.coefficient({0, 0}, 0).imag(), 0.0);
  EXPECT_LE(K.cutoff(), 4);
  for (const auto& m : K.modes()) EXPECT_EQ(K.coefficient({-m.xi[0], -m.xi[1]}, 0), std::conj(m.c[0]));
  EXPECT_EQ(random_band_limited(2, 6, 4, 99).modes().size(), K.modes().size());
}
