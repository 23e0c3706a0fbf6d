#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pofmkl/client.hpp"
#include "pofmkl/error.hpp"
#include "pofmkl/server.hpp"

using namespace pofmkl;

namespace {

// N kernels whose features are fixed basis-like vectors so predictions are
// easy to write down.
struct Fixture {
  GlobalModel model;
  std::vector<FeatureVector> features;
};

Fixture two_kernel_fixture() {
  Fixture f;
  f.model = GlobalModel::zeros(2, 1, 1);
  f.model.thetas[0] = {0.8, 0.0};
  f.model.thetas[1] = {0.0, 0.0};
  f.features = {{0.5, 0.5}, {0.5, 0.5}};
  return f;
}

}  // namespace

TEST(ClientState, Make) {
  const auto s = ClientState::make(2, 5, 0.1, 0.5, 7);
  EXPECT_EQ(s.num_kernels(), 5);
  for (double w : s.weights) EXPECT_EQ(w, 1.0);
  EXPECT_THROW(ClientState::make(0, 5, 0.1, 0.0, 7), Error);
  EXPECT_THROW(ClientState::make(0, 5, 0.1, 1.5, 7), Error);
  EXPECT_THROW(ClientState::make(0, 5, 0.0, 1.0, 7), Error);
}

TEST(Predict, ZeroModelPredictsZero) {
  const auto model = GlobalModel::zeros(3, 2, 1);
  const auto snap = broadcast(model);
  std::vector<FeatureVector> feats(3, FeatureVector{0.5, 0.5, 0.5, 0.5});
  const auto s = ClientState::make(0, 3, 0.1, 1.0, 1);
  EXPECT_EQ(predict(s, snap, feats), 0.0);
}

TEST(Predict, SingleKernelIgnoresWeight) {
  auto model = GlobalModel::zeros(1, 1, 1);
  model.thetas[0] = {0.3, -0.2};
  auto s = ClientState::make(0, 1, 0.1, 1.0, 1);
  s.weights[0] = 1e-7;
  const std::vector<FeatureVector> feats{{0.6, 0.8}};
  EXPECT_NEAR(predict(s, broadcast(model), feats), 0.3 * 0.6 - 0.2 * 0.8, 1e-16);
}

TEST(Predict, WeightedMixture) {
  auto f = two_kernel_fixture();
  auto s = ClientState::make(0, 2, 0.1, 1.0, 1);
  s.weights = {1.0, 3.0};
  // per-kernel predictions 0.4 and 0.0
  EXPECT_NEAR(predict(s, broadcast(f.model), f.features), 0.1, 1e-15);
  const std::vector<double> zero_w{0.0, 0.0}, preds{1.0, 2.0};
  try {
    (void)mixture_prediction(zero_w, preds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Invariant);
  }
}

TEST(UpdateWeights, ClosedForms) {
  auto s = ClientState::make(0, 3, 1.0, 1.0, 1);
  update_weights(s, std::vector<double>{0.0, 0.0, 0.0});
  for (double w : s.weights) EXPECT_EQ(w, 1.0);
  update_weights(s, std::vector<double>{1.0, 0.0, 0.5});
  EXPECT_NEAR(s.weights[0], 0.36787944117144233, 1e-15);
  EXPECT_EQ(s.weights[1], 1.0);
  EXPECT_NEAR(s.weights[2], std::exp(-0.5), 1e-15);
  EXPECT_EQ(s.cumulative_loss[0], 1.0);
}

TEST(UpdateWeights, EqualLossesKeepRatios) {
  auto s = ClientState::make(0, 3, 0.7, 1.0, 1);
  s.weights = {0.2, 0.5, 0.3};
  update_weights(s, std::vector<double>{0.4, 0.4, 0.4});
  const double W = s.weights[0] + s.weights[1] + s.weights[2];
  EXPECT_NEAR(s.weights[0] / W, 0.2, 1e-15);
  EXPECT_NEAR(s.weights[1] / W, 0.5, 1e-15);
}

TEST(UpdateWeights, UnderflowRescale) {
  auto s = ClientState::make(0, 2, 1.0, 1.0, 1);
  s.weights = {2e-300, 1e-300};  // times e^-1 drops below the guard
  update_weights(s, std::vector<double>{1.0, 1.0});
  EXPECT_EQ(*std::max_element(s.weights.begin(), s.weights.end()), 1.0);
  EXPECT_NEAR(s.weights[1], 0.5, 1e-12);
  for (double w : s.weights) EXPECT_GT(w, 0.0);
}

TEST(AssignBins, HandTrace) {
  const std::vector<double> w{0.1, 0.4, 0.3, 0.2};
  const auto b = assign_bins(w, 0.0, 2);
  ASSERT_EQ(b.num_bins(), 2);
  EXPECT_EQ(b.bins[0], (std::vector<int>{1, 2}));
  EXPECT_EQ(b.bins[1], (std::vector<int>{3, 0}));
  EXPECT_NEAR(b.bin_weights[0], 0.7, 1e-15);
  EXPECT_NEAR(b.bin_weights[1], 0.3, 1e-15);
  EXPECT_NEAR(b.pmf[0], 0.7, 1e-15);
  EXPECT_NEAR(b.pmf[1], 0.3, 1e-15);
  EXPECT_FALSE(b.selected());
}

TEST(AssignBins, SizesAndUniformPmf) {
  const std::vector<double> w(51, 1.0);
  const auto b = assign_bins(w, 1.0, 25);
  ASSERT_EQ(b.num_bins(), 3);
  EXPECT_EQ(b.bins[0].size(), 25u);
  EXPECT_EQ(b.bins[1].size(), 25u);
  EXPECT_EQ(b.bins[2].size(), 1u);
  for (double q : b.pmf) EXPECT_DOUBLE_EQ(q, 1.0 / 3.0);
  // ties keep ascending index order
  EXPECT_EQ(b.bins[0].front(), 0);
  EXPECT_EQ(b.bins[2].front(), 50);
}

TEST(AssignBins, RejectsBadM) {
  const std::vector<double> w(4, 1.0);
  for (int M : {0, 5}) {
    try {
      (void)assign_bins(w, 1.0, M);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config);
      EXPECT_EQ(e.field(), "client.M");
    }
  }
}

TEST(SelectSubset, SingleBinSelectsAll) {
  const auto s = ClientState::make(0, 4, 0.1, 1.0, 3);
  auto b = assign_bins(s, 4);
  select_subset(s, b, 1);
  EXPECT_EQ(b.selected_bin, 0);
  EXPECT_EQ(b.selected_set, (std::vector<int>{0, 1, 2, 3}));
  for (double p : b.inclusion_probs) EXPECT_EQ(p, 1.0);
}

TEST(SelectSubset, UniformFrequencies) {
  auto s = ClientState::make(0, 9, 0.1, 1.0, 11);
  s.weights = {5, 1, 2, 7, 3, 1, 1, 9, 4};
  auto base = assign_bins(s, 3);
  std::vector<int> counts(3, 0);
  const int n = 30000;
  for (int r = 0; r < n; ++r) {
    auto b = base;
    select_subset(s, b, static_cast<std::uint64_t>(r));
    ++counts[static_cast<std::size_t>(b.selected_bin)];
  }
  for (int c : counts) EXPECT_NEAR(c / static_cast<double>(n), 1.0 / 3.0, 0.01);
}

TEST(SelectSubset, RepeatableByDrawId) {
  const auto s = ClientState::make(1, 10, 0.1, 1.0, 5);
  auto a = assign_bins(s, 2), b = assign_bins(s, 2);
  select_subset(s, a, 42);
  select_subset(s, b, 42);
  EXPECT_EQ(a.selected_bin, b.selected_bin);
  EXPECT_EQ(a.selected_set, b.selected_set);
}

TEST(SelectSubset, InclusionProbsFollowBins) {
  auto s = ClientState::make(0, 5, 0.1, 0.4, 5);
  s.weights = {0.1, 0.5, 0.2, 0.15, 0.05};
  auto b = assign_bins(s, 2);
  select_subset(s, b, 3);
  for (int j = 0; j < b.num_bins(); ++j) {
    for (int i : b.bins[static_cast<std::size_t>(j)]) {
      EXPECT_EQ(b.inclusion_probs[static_cast<std::size_t>(i)], b.pmf[static_cast<std::size_t>(j)]);
    }
  }
  EXPECT_TRUE(std::is_sorted(b.selected_set.begin(), b.selected_set.end()));
}

TEST(DrawFromPmf, DegenerateAndEdges) {
  const std::vector<double> pmf{1.0, 0.0, 0.0};
  for (double u : {1e-12, 0.5, 1.0 - 1e-16}) EXPECT_EQ(draw_from_pmf(pmf, u), 0);
  const std::vector<double> q{0.25, 0.5, 0.25};
  EXPECT_EQ(draw_from_pmf(q, 0.2), 0);
  EXPECT_EQ(draw_from_pmf(q, 0.3), 1);
  EXPECT_EQ(draw_from_pmf(q, 0.9), 2);
  const std::vector<double> tail{0.5, 0.5, 0.0};
  EXPECT_EQ(draw_from_pmf(tail, 1.0), 1);
}

TEST(LocalUpdate, PlainStepWhenFullySelected) {
  auto model = GlobalModel::zeros(1, 1, 1);
  model.thetas[0] = {0.2, 0.1};
  const auto snap = broadcast(model);
  auto s = ClientState::make(0, 1, 0.1, 1.0, 1);
  auto b = assign_bins(s, 1);
  select_subset(s, b, 1);
  const std::vector<FeatureVector> feats{{0.6, 0.8}};
  const double y = 1.0;
  const double eta = 0.3;
  const auto u = local_update(s, snap, feats, y, b, eta, LossConfig{});
  const double r = 2.0 * (0.2 * 0.6 + 0.1 * 0.8 - y);
  ASSERT_EQ(u.kernels, (std::vector<int>{0}));
  EXPECT_NEAR(u.thetas[0][0], 0.2 - eta * r * 0.6, 1e-15);
  EXPECT_NEAR(u.thetas[0][1], 0.1 - eta * r * 0.8, 1e-15);
  EXPECT_EQ(u.params_sent, 2u);
}

TEST(LocalUpdate, ImportanceWeightedStep) {
  auto model = GlobalModel::zeros(2, 1, 1);
  model.thetas[0] = {0.2, 0.1};
  model.thetas[1] = {-0.1, 0.3};
  const auto snap = broadcast(model);
  auto s = ClientState::make(0, 2, 0.1, 1.0, 1);
  auto b = assign_bins(s, 1);  // two bins, p = 1/2 each
  select_subset(s, b, 9);
  const std::vector<FeatureVector> feats{{0.6, 0.8}, {0.8, 0.6}};
  const auto u = local_update(s, snap, feats, 0.0, b, 0.1, LossConfig{});
  ASSERT_EQ(u.kernels.size(), 1u);
  const int i = u.kernels[0];
  const auto& th = model.thetas[static_cast<std::size_t>(i)];
  const auto& z = feats[static_cast<std::size_t>(i)];
  const double r = 2.0 * (th[0] * z[0] + th[1] * z[1]);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(u.thetas[0][static_cast<std::size_t>(j)], th[static_cast<std::size_t>(j)] - 2.0 * 0.1 * r * z[static_cast<std::size_t>(j)], 1e-15);
  }
  EXPECT_EQ(u.params_sent, 2u);
}

TEST(LocalUpdate, PerfectFitLeavesTheta) {
  auto model = GlobalModel::zeros(1, 1, 1);
  model.thetas[0] = {0.5, 0.5};
  auto s = ClientState::make(0, 1, 0.1, 1.0, 1);
  auto b = assign_bins(s, 1);
  select_subset(s, b, 1);
  const std::vector<FeatureVector> feats{{0.6, 0.8}};
  const auto u = local_update(s, broadcast(model), feats, 0.7, b, 0.5, LossConfig{});
  EXPECT_NEAR(u.thetas[0][0], 0.5, 1e-16);
  EXPECT_NEAR(u.thetas[0][1], 0.5, 1e-16);
}

TEST(LocalUpdate, RejectsZeroProbability) {
  auto model = GlobalModel::zeros(1, 1, 1);
  auto s = ClientState::make(0, 1, 0.1, 1.0, 1);
  auto b = assign_bins(s, 1);
  select_subset(s, b, 1);
  b.inclusion_probs[0] = 0.0;
  const std::vector<FeatureVector> feats{{0.6, 0.8}};
  try {
    (void)local_update(s, broadcast(model), feats, 0.7, b, 0.5, LossConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Invariant);
  }
}
