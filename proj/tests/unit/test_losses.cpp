#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pofmkl/error.hpp"
#include "pofmkl/losses.hpp"
#include "pofmkl/rng.hpp"

using namespace pofmkl;

namespace {
double predict(const std::vector<double>& z, const std::vector<double>& th) {
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += z[j] * th[j];
  return s;
}
}  // namespace

TEST(Loss, Values) {
  const LossConfig plain;
  const std::vector<double> theta{1.0, 1.0};
  EXPECT_EQ(loss(0.4, 0.4, theta, plain), 0.0);
  EXPECT_EQ(loss(1.0, 0.0, theta, plain), 1.0);
  LossConfig ridge;
  ridge.lambda = 0.5;
  EXPECT_DOUBLE_EQ(loss(1.0, 0.0, theta, ridge), 2.0);
}

TEST(Loss, RejectsNonFinite) {
  const LossConfig cfg;
  const std::vector<double> theta{0.0};
  try {
    (void)loss(std::numeric_limits<double>::quiet_NaN(), 0.0, theta, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
  EXPECT_THROW((void)loss(0.0, INFINITY, theta, cfg), Error);
  EXPECT_THROW((void)bounded_loss(NAN, 0.0, cfg), Error);
}

TEST(Gradient, ZeroCases) {
  const LossConfig cfg;
  const std::vector<double> z{0.5, -0.5, 0.5, 0.5};
  const std::vector<double> zero(4, 0.0);
  for (double g : loss_grad_theta(z, zero, 0.0, cfg)) EXPECT_EQ(g, 0.0);
  const std::vector<double> th{0.2, 0.1, -0.3, 0.4};
  for (double g : loss_grad_theta(z, th, predict(z, th), cfg)) EXPECT_NEAR(g, 0.0, 1e-16);
}

TEST(Gradient, ShapeMismatch) {
  const LossConfig cfg;
  const std::vector<double> z(4, 0.5), th(3, 0.0);
  try {
    (void)loss_grad_theta(z, th, 0.0, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  CounterRng rng(StreamKey::derive(5, 0, StreamPurpose::SynthInputs));
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_index(12));
    std::vector<double> z(n), th(n);
    for (auto& v : z) v = rng.normal() / std::sqrt(static_cast<double>(n));
    for (auto& v : th) v = rng.normal();
    const double y = rng.normal();
    LossConfig cfg;
    cfg.lambda = trial % 2 == 0 ? 0.0 : rng.uniform();
    const auto g = loss_grad_theta(z, th, y, cfg);
    const double h = 1e-6;
    for (std::size_t j = 0; j < n; ++j) {
      auto up = th, down = th;
      up[j] += h;
      down[j] -= h;
      const double fd = (loss(predict(z, up), y, up, cfg) - loss(predict(z, down), y, down, cfg)) / (2 * h);
      EXPECT_NEAR(g[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(BoundedLoss, Values) {
  const LossConfig cfg;
  EXPECT_EQ(bounded_loss(0.5, 0.5, cfg), 0.0);
  EXPECT_EQ(bounded_loss(3.0, 0.0, cfg), 1.0);
  EXPECT_NEAR(bounded_loss(0.8, 0.5, cfg), 0.09, 1e-15);
  LossConfig unclipped;
  unclipped.clip_for_weights = false;
  EXPECT_EQ(bounded_loss(3.0, 0.0, unclipped), 9.0);
}

TEST(BoundedLoss, IgnoresRegularization) {
  LossConfig cfg;
  cfg.lambda = 10.0;
  EXPECT_NEAR(bounded_loss(0.8, 0.5, cfg), 0.09, 1e-15);
}
