#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lrpd/loss.hpp"
#include "lrpd/random.hpp"
#include "lrpd/testing/oracles.hpp"

namespace lrpd {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(FocalLoss, CertainPredictionIsFree) {
  EXPECT_NEAR(automated_focal_loss(1.0, 0.3).value, 0.0, 1e-6);
  EXPECT_NEAR(automated_focal_loss(1.0, 1.0).value, 0.0, 1e-6);
}

TEST(FocalLoss, ReducesToCrossEntropyWhenExpectationIsOne) {
  EXPECT_NEAR(automated_focal_loss(0.5, 1.0).value, 0.6931, 5e-5);
  for (const double p : {0.01, 0.2, 0.5, 0.77, 0.999}) {
    EXPECT_EQ(automated_focal_loss(p, 1.0).value, -std::log(p));
  }
}

TEST(FocalLoss, HalfAndHalf) {
  // (1 - 0.5)^(ln 2) * ln 2 evaluated independently.
  const double expected = std::exp(std::log(0.5) * std::log(2.0)) * std::log(2.0);
  EXPECT_NEAR(automated_focal_loss(0.5, 0.5).value, expected, 1e-12);
  // The usual quoted figure is 0.4288; the exact value is 0.428714.
  EXPECT_NEAR(automated_focal_loss(0.5, 0.5).value, 0.4288, 1e-4);
}

TEST(FocalLoss, ClampsZeroProbability) {
  const auto r = automated_focal_loss(0.0, 0.5);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_EQ(r.grad, 0.0);
}

TEST(PHat, Updates) {
  EXPECT_NEAR(update_p_hat(0.2, 0.8, 0.9), 0.26, 1e-12);
  EXPECT_EQ(update_p_hat(0.2, 0.8, 0.0), 0.8);
  EXPECT_EQ(update_p_hat(0.4, 0.4), 0.4);
  EXPECT_THROW(update_p_hat(0.4, 0.4, 1.0), InvalidArgument);
  EXPECT_THROW(update_p_hat(0.4, 0.4, -0.1), InvalidArgument);
  EXPECT_GT(update_p_hat(0.0, 0.0, 0.5), 0.0);
}

TEST(SmoothL1, Branches) {
  EXPECT_EQ(smooth_l1(0.0).value, 0.0);
  EXPECT_EQ(smooth_l1(0.5).value, 0.125);
  EXPECT_EQ(smooth_l1(2.0).value, 1.5);
  EXPECT_EQ(smooth_l1(-2.0).grad, -1.0);
  const std::vector<double> r{0.0, 0.5, 2.0};
  const auto v = smooth_l1(std::span<const double>(r));
  EXPECT_EQ(v.value, 1.625);
  EXPECT_EQ(v.grad, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Heading, Examples) {
  EXPECT_NEAR(heading_loss(0, 1, 0).value, 0.0, 1e-15);
  EXPECT_NEAR(heading_loss(1, 0, 0).value, 1.0, 1e-15);
  EXPECT_NEAR(heading_loss(0, 1, kPi).value, 1.5, 1e-15);
}

TEST(Total, ZeroAndSumOfParts) {
  LossSample s;
  s.p_t = 1.0;
  EXPECT_NEAR(total_loss(s).total, 0.0, 1e-6);

  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    LossSample t;
    t.p_t = rng.uniform(0.01, 1.0);
    t.p_hat_t = rng.uniform(0.01, 1.0);
    for (auto& r : t.xyz_residual) r = rng.uniform(-3, 3);
    for (auto& r : t.lwh_residual) r = rng.uniform(-3, 3);
    t.s_pred = rng.uniform(-1, 1);
    t.c_pred = rng.uniform(-1, 1);
    t.theta_gt = rng.uniform(-kPi, kPi);
    double expected = 0.0;
    for (double r : t.xyz_residual) expected += smooth_l1(r).value;
    for (double r : t.lwh_residual) expected += smooth_l1(r).value;
    expected += heading_loss(t.s_pred, t.c_pred, t.theta_gt).value;
    expected += automated_focal_loss(t.p_t, t.p_hat_t).value;
    EXPECT_NEAR(total_loss(t).total, expected, 1e-12);
  }
}

bool away_from_kink(double r) { return std::abs(std::abs(r) - 1.0) > 1e-3; }

TEST(LossProperty, GradientsMatchFiniteDifferences) {
  Rng rng(21);
  const auto rel_ok = [](double analytic, double numeric) {
    return std::abs(analytic - numeric) <= 1e-4 * std::max(1.0, std::abs(numeric));
  };
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform(0.01, 0.99);
    const double ph = rng.uniform(0.01, 1.0);
    const double fd = oracle::central_difference([&](double x) { return automated_focal_loss(x, ph).value; }, p);
    ASSERT_TRUE(rel_ok(automated_focal_loss(p, ph).grad, fd)) << p << " " << ph;

    double r = rng.uniform(-3, 3);
    while (!away_from_kink(r)) r = rng.uniform(-3, 3);
    ASSERT_TRUE(rel_ok(smooth_l1(r).grad, oracle::central_difference([](double x) { return smooth_l1(x).value; }, r)));

    const double th = rng.uniform(-kPi, kPi);
    double s = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
    while (!away_from_kink(s - std::sin(th))) s = rng.uniform(-1, 1);
    while (!away_from_kink(c - std::cos(th))) c = rng.uniform(-1, 1);
    const auto h = heading_loss(s, c, th);
    ASSERT_TRUE(rel_ok(h.d_s, oracle::central_difference([&](double x) { return heading_loss(x, c, th).value; }, s)));
    ASSERT_TRUE(rel_ok(h.d_c, oracle::central_difference([&](double x) { return heading_loss(s, x, th).value; }, c)));
  }
}

TEST(LossProperty, FocalNonNegativeAndDecreasing) {
  Rng rng(22);
  for (int i = 0; i < 1000; ++i) {
    const double ph = rng.uniform(1e-6, 1.0);
    double a = rng.uniform(0.0, 1.0), b = rng.uniform(0.0, 1.0);
    if (a > b) std::swap(a, b);
    const double la = automated_focal_loss(a, ph).value;
    const double lb = automated_focal_loss(b, ph).value;
    ASSERT_GE(la, 0.0);
    ASSERT_GE(lb, 0.0);
    ASSERT_GE(la, lb);
  }
}

TEST(LossProperty, HeadingPeriodic) {
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform(-1, 1), c = rng.uniform(-1, 1), th = rng.uniform(-kPi, kPi);
    ASSERT_NEAR(heading_loss(s, c, th).value, heading_loss(s, c, th + 2 * kPi).value, 1e-12);
  }
}

TEST(LossProperty, TotalMonotoneInResidualMagnitude) {
  Rng rng(24);
  for (int i = 0; i < 1000; ++i) {
    LossSample t;
    t.p_t = rng.uniform(0.1, 1.0);
    t.p_hat_t = rng.uniform(0.1, 1.0);
    for (auto& r : t.xyz_residual) r = rng.uniform(-2, 2);
    for (auto& r : t.lwh_residual) r = rng.uniform(-2, 2);
    const auto k = static_cast<std::size_t>(rng.uniform_int(0, 5));
    double& r = k < 3 ? t.xyz_residual[k] : t.lwh_residual[k - 3];
    const double before = total_loss(t).total;
    r *= 1.0 + rng.uniform(0.01, 1.0);
    ASSERT_GE(total_loss(t).total, before);
  }
}

}  // namespace
}  // namespace lrpd
