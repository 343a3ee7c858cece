#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gbmcert/activation_bounds.hpp"
#include "gbmcert/oracle/finite_difference.hpp"

using namespace gbmcert;

namespace {

double dsigmoid(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 - s);
}
double dtanh(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

}  // namespace

TEST(DerivativeBounds, SigmoidStraddlingZeroMatchesGrid) {
  const auto b = derivative_bounds(ActivationKind::Sigmoid, Interval(-1, 2));
  const auto g = oracle::grid_extrema(dsigmoid, -1, 2, 100001);
  EXPECT_NEAR(b.lo(), g.min, 1e-12);
  EXPECT_NEAR(b.hi(), g.max, 1e-9);
  EXPECT_NEAR(b.lo(), 0.104994, 1e-6);
  EXPECT_DOUBLE_EQ(b.hi(), 0.25);
}

TEST(DerivativeBounds, TanhAwayFromZeroUsesEndpoints) {
  const auto b = derivative_bounds(ActivationKind::Tanh, Interval(0.5, 1.5));
  const auto g = oracle::grid_extrema(dtanh, 0.5, 1.5, 100001);
  EXPECT_NEAR(b.lo(), g.min, 1e-12);
  EXPECT_NEAR(b.hi(), g.max, 1e-12);
  EXPECT_NEAR(b.lo(), 0.180707, 1e-6);
  EXPECT_NEAR(b.hi(), 0.786448, 1e-6);
}

TEST(DerivativeBounds, PointAtZero) {
  const auto b = derivative_bounds(ActivationKind::Sigmoid, Interval(0, 0));
  EXPECT_DOUBLE_EQ(b.lo(), 0.25);
  EXPECT_DOUBLE_EQ(b.hi(), 0.25);
}

TEST(DerivativeBounds, NegativeSideAndRandomIntervals) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int k = 0; k < 200; ++k) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    for (auto kind : {ActivationKind::Sigmoid, ActivationKind::Tanh}) {
      const auto f = kind == ActivationKind::Sigmoid ? dsigmoid : dtanh;
      const auto bound = derivative_bounds(kind, Interval(a, b));
      const auto g = oracle::grid_extrema(f, a, b, 2001);
      EXPECT_LE(bound.lo(), g.min + 1e-12);
      EXPECT_GE(bound.hi(), g.max - 1e-12);
      EXPECT_NEAR(bound.lo(), g.min, 1e-12);
    }
  }
}

TEST(ValueBounds, FixedPoints) {
  const auto t = value_bounds(ActivationKind::Tanh, Interval(0, 0));
  EXPECT_EQ(t.lo(), 0.0);
  EXPECT_EQ(t.hi(), 0.0);
  const auto s = value_bounds(ActivationKind::Sigmoid, Interval(0, 0));
  EXPECT_DOUBLE_EQ(s.lo(), 0.5);
  EXPECT_DOUBLE_EQ(s.hi(), 0.5);
}

TEST(ValueBounds, SigmoidWideSpanNearUnitInterval) {
  const auto s = value_bounds(ActivationKind::Sigmoid, Interval(-20, 20));
  EXPECT_NEAR(s.lo(), 0.0, 1e-8);
  EXPECT_NEAR(s.hi(), 1.0, 1e-8);
}

TEST(ValueBounds, SigmoidIsStableForLargeNegativeInputs) {
  EXPECT_GT(sigmoid(-800.0), -1e-300);
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
  EXPECT_DOUBLE_EQ(sigmoid(800.0), 1.0);
}
