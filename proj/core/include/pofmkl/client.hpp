#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pofmkl/kernels.hpp"
#include "pofmkl/losses.hpp"
#include "pofmkl/rng.hpp"
#include "pofmkl/server.hpp"
#include "pofmkl/update.hpp"

namespace pofmkl {

/// Weights are kept strictly positive; they are rescaled by 1/max(w) when the
/// largest falls below this, which leaves w/W and the bin PMF unchanged.
inline constexpr double kWeightUnderflowGuard = 1e-300;

struct ClientState {
  int client_id = 0;              // 0-based
  std::vector<double> weights;    // w_{ik,t}, all > 0
  double eta_k = 1.0;             // Hedge learning rate
  double xi_k = 1.0;              // exploration rate in (0, 1]
  StreamKey rng_key;              // subset-selection stream
  std::vector<double> cumulative_loss;  // per-kernel sum of Hedge losses

  /// Uniform unit weights, selection stream keyed by (seed, client_id).
  static ClientState make(int client_id, int n_kernels, double eta_k, double xi_k,
                          std::uint64_t seed);

  int num_kernels() const noexcept { return static_cast<int>(weights.size()); }
};

struct BinAssignment {
  std::vector<std::vector<int>> bins;  // 0-based kernel ids, sorted-weight order
  std::vector<double> bin_weights;     // u_j
  std::vector<double> pmf;             // q_j
  int selected_bin = -1;               // I_{k,t}, 0-based; -1 until drawn
  std::vector<int> selected_set;       // S_{k,t}, ascending
  std::vector<double> inclusion_probs; // p_i = q_{b_i}

  int num_bins() const noexcept { return static_cast<int>(bins.size()); }
  bool selected() const noexcept { return selected_bin >= 0; }
};

/// theta_{i,t}.z_i(x) for every kernel.
std::vector<double> kernel_predictions(const ModelSnapshot& model,
                                       std::span<const FeatureVector> features);

/// sum_i (w_i / W) * preds_i
double mixture_prediction(std::span<const double> weights,
                          std::span<const double> per_kernel_predictions);

double predict(const ClientState& state, const ModelSnapshot& model,
               std::span<const FeatureVector> features);

/// w_i <- w_i * exp(-eta_k * loss_i) for all kernels; also accumulates losses.
void update_weights(ClientState& state, std::span<const double> per_kernel_losses);

/// Sort by weight (descending, ties by ascending index), fill bins of
/// capacity M, and build the exploration-mixed PMF. Does not draw.
BinAssignment assign_bins(const ClientState& state, int M);
BinAssignment assign_bins(std::span<const double> weights, double xi, int M);

/// Draws the bin with the client's stream. `draw_id` picks the substream
/// (the engine uses the round number), so a draw never depends on how many
/// draws came before it.
void select_subset(const ClientState& state, BinAssignment& bins, std::uint64_t draw_id);

/// Inverse-CDF draw of a bin index from a PMF given a uniform in (0,1).
int draw_from_pmf(std::span<const double> pmf, double u);

/// theta_{ik,t+1} = theta_{i,t} - eta * grad / p_i for every selected kernel.
ClientUpdate local_update(const ClientState& state, const ModelSnapshot& model,
                          std::span<const FeatureVector> features, double label,
                          const BinAssignment& selection, double eta,
                          const LossConfig& loss_cfg);

}  // namespace pofmkl
