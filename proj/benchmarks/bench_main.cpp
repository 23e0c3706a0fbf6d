#include <benchmark/benchmark.h>

#include <memory>

#include "pofmkl/client.hpp"
#include "pofmkl/engine.hpp"
#include "pofmkl/kernels.hpp"

namespace bm = benchmark;
using namespace pofmkl;

static void BM_FeatureMap(bm::State& st) {
  const int D = static_cast<int>(st.range(0));
  const auto map = RandomFeatureMap::sample({1, KernelFamily::GaussianRbf, 0.5}, 2, D, 1);
  const std::vector<double> x{0.3, -0.2};
  std::vector<double> z(map.feature_dim());
  for (auto _ : st) {
    map.map_into(x, z);
    bm::DoNotOptimize(z.data());
  }
  st.SetItemsProcessed(st.iterations() * D);
}
BENCHMARK(BM_FeatureMap)->Arg(9)->Arg(20)->Arg(100)->Arg(5000);

// One client's work for a round: features, prediction, weight update, bin
// draw and the local step. 51 kernels.
static void BM_ClientStep(bm::State& st) {
  const int M = static_cast<int>(st.range(0));
  const int D = static_cast<int>(st.range(1));
  const auto dict = build_dictionary(51, GridRule::log_uniform());
  const auto maps = sample_dictionary(dict, 2, D, 1);
  auto model = std::make_shared<GlobalModel>(GlobalModel::zeros(51, D, 8));
  for (auto& th : model->thetas) th.assign(th.size(), 0.01);
  const ModelSnapshot snap(model);
  auto state = ClientState::make(0, 51, 0.045, 1.0, 1);
  const std::vector<double> x{0.3, -0.2};
  const LossConfig cfg;
  std::vector<FeatureVector> feats(51);
  std::uint64_t t = 0;
  for (auto _ : st) {
    for (int i = 0; i < 51; ++i) feats[static_cast<std::size_t>(i)] = maps[static_cast<std::size_t>(i)].map(x);
    const auto preds = kernel_predictions(snap, feats);
    const double y_hat = mixture_prediction(state.weights, preds);
    std::vector<double> losses(51);
    for (int i = 0; i < 51; ++i) losses[static_cast<std::size_t>(i)] = bounded_loss(preds[static_cast<std::size_t>(i)], 0.5, cfg);
    auto bins = assign_bins(state, M);
    update_weights(state, losses);
    select_subset(state, bins, ++t);
    auto u = local_update(state, snap, feats, 0.5, bins, 0.045, cfg);
    bm::DoNotOptimize(y_hat);
    bm::DoNotOptimize(u.thetas.data());
  }
}
BENCHMARK(BM_ClientStep)->Args({1, 20})->Args({1, 100})->Args({25, 20})->Args({51, 9});

// A whole run of T rounds with K = 8 clients, reported per round.
static void BM_Round(bm::State& st) {
  ExperimentConfig cfg;
  cfg.K = 8;
  cfg.T = 50;
  cfg.M = static_cast<int>(st.range(0));
  cfg.D = static_cast<int>(st.range(1));
  const auto data = prepare_data(cfg);
  for (auto _ : st) {
    auto r = run(cfg, data.streams);
    bm::DoNotOptimize(r.records.data());
  }
  st.SetItemsProcessed(st.iterations() * cfg.T);
}
BENCHMARK(BM_Round)->Args({1, 20})->Args({1, 100})->Args({51, 9})->Unit(bm::kMillisecond);

BENCHMARK_MAIN();
