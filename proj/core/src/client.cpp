#include "pofmkl/client.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pofmkl/error.hpp"

namespace pofmkl {

ClientState ClientState::make(int client_id, int n_kernels, double eta_k, double xi_k,
                              std::uint64_t seed) {
  if (n_kernels < 1) throw Error(ErrorKind::Config, "kernels.N", "N must be >= 1");
  if (!(eta_k > 0.0)) throw Error(ErrorKind::Config, "client.eta_k", "eta_k must be > 0");
  if (!(xi_k > 0.0 && xi_k <= 1.0)) {
    throw Error(ErrorKind::Config, "client.xi_k", "xi_k must lie in (0, 1]");
  }
  ClientState s;
  s.client_id = client_id;
  s.weights.assign(static_cast<std::size_t>(n_kernels), 1.0);
  s.eta_k = eta_k;
  s.xi_k = xi_k;
  s.rng_key = StreamKey::derive(seed, static_cast<std::uint64_t>(client_id),
                                StreamPurpose::SubsetSelection);
  s.cumulative_loss.assign(static_cast<std::size_t>(n_kernels), 0.0);
  return s;
}

std::vector<double> kernel_predictions(const ModelSnapshot& model,
                                       std::span<const FeatureVector> features) {
  if (features.size() != static_cast<std::size_t>(model.num_kernels())) {
    throw Error(ErrorKind::Shape, "need one feature vector per kernel");
  }
  std::vector<double> preds(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto theta = model.theta(static_cast<int>(i));
    if (theta.size() != features[i].size()) {
      throw Error(ErrorKind::Shape, "feature vector length does not match theta");
    }
    preds[i] = dot(theta, features[i]);
  }
  return preds;
}

double mixture_prediction(std::span<const double> weights,
                          std::span<const double> per_kernel_predictions) {
  if (weights.size() != per_kernel_predictions.size()) {
    throw Error(ErrorKind::Shape, "weights and predictions differ in length");
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) {
    throw Error(ErrorKind::Invariant, "total kernel weight is not positive");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += (weights[i] / total) * per_kernel_predictions[i];
  }
  return acc;
}

double predict(const ClientState& state, const ModelSnapshot& model,
               std::span<const FeatureVector> features) {
  const auto preds = kernel_predictions(model, features);
  return mixture_prediction(state.weights, preds);
}

void update_weights(ClientState& state, std::span<const double> per_kernel_losses) {
  if (per_kernel_losses.size() != state.weights.size()) {
    throw Error(ErrorKind::Shape, "need one loss per kernel");
  }
  double largest = 0.0;
  for (std::size_t i = 0; i < state.weights.size(); ++i) {
    const double l = per_kernel_losses[i];
    if (!std::isfinite(l)) throw Error(ErrorKind::Numeric, "non-finite kernel loss");
    state.weights[i] *= std::exp(-state.eta_k * l);
    state.cumulative_loss[i] += l;
    largest = std::max(largest, state.weights[i]);
  }
  if (largest < kWeightUnderflowGuard) {
    for (double& w : state.weights) w /= largest;
  }
}

BinAssignment assign_bins(const ClientState& state, int M) {
  return assign_bins(state.weights, state.xi_k, M);
}

BinAssignment assign_bins(std::span<const double> weights, double xi, int M) {
  const int n = static_cast<int>(weights.size());
  if (M < 1 || M > n) {
    throw Error(ErrorKind::Config, "client.M",
                "M must satisfy 1 <= M <= N (M=" + std::to_string(M) +
                    ", N=" + std::to_string(n) + ")");
  }
  // xi = 0 (pure exploitation) is allowed here; client states keep xi > 0.
  if (!(xi >= 0.0 && xi <= 1.0)) {
    throw Error(ErrorKind::Config, "client.xi_k", "xi must lie in [0, 1]");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // With xi = 1 the PMF ignores weights, but sorting keeps bin contents the
  // same function of the weights in every mode.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return weights[static_cast<std::size_t>(a)] > weights[static_cast<std::size_t>(b)];
  });

  BinAssignment out;
  const int m = (n + M - 1) / M;
  out.bins.resize(static_cast<std::size_t>(m));
  for (int pos = 0; pos < n; ++pos) {
    out.bins[static_cast<std::size_t>(pos / M)].push_back(order[static_cast<std::size_t>(pos)]);
  }
  out.bin_weights.resize(static_cast<std::size_t>(m));
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    double u = 0.0;
    for (int i : out.bins[static_cast<std::size_t>(j)]) u += weights[static_cast<std::size_t>(i)];
    out.bin_weights[static_cast<std::size_t>(j)] = u;
    total += u;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::Invariant, "total kernel weight is not positive");
  out.pmf.resize(static_cast<std::size_t>(m));
  const double floor = xi / static_cast<double>(m);
  for (int j = 0; j < m; ++j) {
    out.pmf[static_cast<std::size_t>(j)] =
        (1.0 - xi) * (out.bin_weights[static_cast<std::size_t>(j)] / total) + floor;
  }
  out.inclusion_probs.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < m; ++j) {
    for (int i : out.bins[static_cast<std::size_t>(j)]) {
      out.inclusion_probs[static_cast<std::size_t>(i)] = out.pmf[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

int draw_from_pmf(std::span<const double> pmf, double u) {
  double cumulative = 0.0;
  for (std::size_t j = 0; j < pmf.size(); ++j) {
    cumulative += pmf[j];
    if (u < cumulative) return static_cast<int>(j);
  }
  // Rounding can leave the total slightly under 1; fall back to the last
  // bin with nonzero mass.
  for (std::size_t j = pmf.size(); j-- > 0;) {
    if (pmf[j] > 0.0) return static_cast<int>(j);
  }
  throw Error(ErrorKind::Invariant, "PMF has no mass");
}

void select_subset(const ClientState& state, BinAssignment& bins, std::uint64_t draw_id) {
  if (bins.pmf.empty() || bins.pmf.size() != bins.bins.size()) {
    throw Error(ErrorKind::Invariant, "bin assignment has no PMF");
  }
  CounterRng rng(state.rng_key, draw_id);
  bins.selected_bin = draw_from_pmf(bins.pmf, rng.uniform());
  bins.selected_set = bins.bins[static_cast<std::size_t>(bins.selected_bin)];
  std::sort(bins.selected_set.begin(), bins.selected_set.end());
}

ClientUpdate local_update(const ClientState& state, const ModelSnapshot& model,
                          std::span<const FeatureVector> features, double label,
                          const BinAssignment& selection, double eta,
                          const LossConfig& loss_cfg) {
  if (!selection.selected()) throw Error(ErrorKind::Invariant, "subset not drawn yet");
  if (!(eta > 0.0)) throw Error(ErrorKind::Config, "server.eta", "eta must be > 0");
  if (features.size() != static_cast<std::size_t>(model.num_kernels())) {
    throw Error(ErrorKind::Shape, "need one feature vector per kernel");
  }
  ClientUpdate u;
  u.client_id = state.client_id;
  u.round = model.round();
  u.kernels = selection.selected_set;
  u.thetas.reserve(u.kernels.size());
  std::vector<double> grad;
  for (int i : u.kernels) {
    const double p = selection.inclusion_probs[static_cast<std::size_t>(i)];
    if (!(p > 0.0)) {
      throw Error(ErrorKind::Invariant, "inclusion probability of kernel " +
                                            std::to_string(i + 1) + " is not positive");
    }
    const auto theta = model.theta(i);
    grad.resize(theta.size());
    loss_grad_theta_into(features[static_cast<std::size_t>(i)], theta, label, loss_cfg, grad);
    std::vector<double> next(theta.begin(), theta.end());
    const double step = eta / p;
    for (std::size_t c = 0; c < next.size(); ++c) next[c] -= step * grad[c];
    u.params_sent += next.size();
    u.thetas.push_back(std::move(next));
  }
  return u;
}

}  // namespace pofmkl
