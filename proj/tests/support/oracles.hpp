#pragma once

// Reference implementations used only by tests. They share nothing with the
// library beyond the sampled frequencies, so an agreement is evidence that
// both sides compute the same thing.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pofmkl/data.hpp"
#include "pofmkl/engine.hpp"
#include "pofmkl/kernels.hpp"

namespace oracle {

/// z(x) recomputed from the frequency matrix with plain loops.
std::vector<double> features(const pofmkl::RandomFeatureMap& map, std::span<const double> x);

/// exp(-|x - x'|^2 / (2 sigma^2))
double gaussian_kernel(std::span<const double> x, std::span<const double> xp, double sigma);

/// Synchronous FedSGD with every client updating every kernel:
/// theta_i <- theta_i - (eta / K) sum_k 2 (theta_i.z_ik - y_k) z_ik.
/// Returns theta after every round: trajectory[t][i] for t = 0..T.
std::vector<std::vector<std::vector<double>>> fedsgd(
    const std::vector<pofmkl::RandomFeatureMap>& maps,
    std::span<const pofmkl::ClientStream> streams, int T, double eta);

/// Single-machine online SGD with one feature map. Returns the prequential
/// predictions.
std::vector<double> online_sgd_predictions(const pofmkl::RandomFeatureMap& map,
                                           const pofmkl::ClientStream& stream, int T,
                                           double eta);

/// Client regret after every round, recomputed from the records alone.
/// result[k][t-1] is the regret of client k after t rounds.
std::vector<std::vector<double>> regret_from_records(
    std::span<const pofmkl::RoundRecord> records, int K, int N, bool raw);

/// Hedge weights rebuilt from the recorded kernel losses, normalized to sum 1.
std::vector<double> hedge_weights_from_records(std::span<const pofmkl::RoundRecord> records,
                                               int client, int N, double eta_k);

/// Server proxy recomputed from records.
double server_proxy_from_records(std::span<const pofmkl::RoundRecord> records, int K, int N);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& p);

}  // namespace oracle
