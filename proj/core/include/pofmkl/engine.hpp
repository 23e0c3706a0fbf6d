#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pofmkl/client.hpp"
#include "pofmkl/data.hpp"
#include "pofmkl/kernels.hpp"
#include "pofmkl/losses.hpp"
#include "pofmkl/metrics.hpp"
#include "pofmkl/server.hpp"

namespace pofmkl {

enum class Algorithm {
  PofMkl,      // personalized weights, randomized subset of M kernels
  Ofskl,       // single RBF kernel, sigma = ofskl_sigma
  OfmklAvg,    // all kernels, prediction is the plain average
  VmkoflLike,  // all kernels, one server-held weight vector shared by clients
};

std::string_view to_string(Algorithm a) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept;

enum class DataSource { Synth, Csv };

struct DataConfig {
  DataSource source = DataSource::Synth;
  std::uint64_t seed = 7;
  SynthSpec synth;  // K, T, grid and dictionary size are taken from the experiment
  std::string csv_path;
  CsvSchema csv;
  PartitionPlan partition;  // K and T are taken from the experiment
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::PofMkl;
  int N = 51;
  int M = 1;
  int D = 20;
  int K = 8;
  int T = 500;
  std::optional<double> eta;      // unset: 1/sqrt(T)
  std::vector<double> eta_k;      // empty: 1/sqrt(T); one value or K values
  std::vector<double> xi_k{1.0};  // one value or K values
  GridRule grid = GridRule::log_uniform();
  double ofskl_sigma = 10.0;
  LossConfig loss;
  std::uint64_t seed = 1;
  int n_seeds = 20;
  std::optional<std::size_t> uplink_cap;
  std::optional<double> theta_norm_cap;
  bool record_kernel_losses = true;
  DataConfig data;

  double eta_value() const;
  double eta_k_for(int client) const;
  double xi_k_for(int client) const;
  /// Dictionary size and subset size the algorithm actually runs with.
  int effective_N() const noexcept;
  int effective_M() const noexcept;
  std::size_t max_uplink_params() const noexcept {
    return 2 * static_cast<std::size_t>(effective_M()) * static_cast<std::size_t>(D);
  }
  std::vector<KernelSpec> dictionary() const;
};

/// Throws a config error naming the first violated field.
void validate(const ExperimentConfig& cfg);

struct RoundRecord {
  int t = 0;
  int client_id = 0;  // 0-based
  double prediction = 0.0;
  double label = 0.0;
  double squared_error = 0.0;
  std::vector<double> kernel_losses;      // Hedge loss per kernel (may be empty)
  std::vector<double> kernel_losses_raw;  // squared error per kernel (may be empty)
  int selected_bin = 0;                   // 0-based
  std::size_t params_sent_uplink = 0;
  double regret = 0.0;      // cumulative client regret after this round
  double regret_raw = 0.0;
};

struct RunOptions {
  /// Worker threads for the per-round client fan-out. Results do not depend
  /// on this value.
  unsigned threads = 1;
};

struct RunResult {
  std::vector<RoundRecord> records;  // ordered by t, then client
  GlobalModel final_model;
  std::vector<std::vector<double>> final_weights;  // per client (global for VmkoflLike)
  RegretLedger ledger;
  BandwidthMeter bandwidth;
  std::vector<NormDiagnostic> norm_diagnostics;
  double client_seconds = 0.0;  // summed over clients
  double server_seconds = 0.0;
};

/// Executes the configured algorithm for T synchronous rounds.
RunResult run(const ExperimentConfig& cfg, std::span<const ClientStream> streams,
              const RunOptions& options = {});

RunResult run_baseline_ofskl(const ExperimentConfig& cfg, std::span<const ClientStream> streams,
                             const RunOptions& options = {});
RunResult run_baseline_ofmkl_avg(const ExperimentConfig& cfg,
                                 std::span<const ClientStream> streams,
                                 const RunOptions& options = {});
RunResult run_baseline_vmkofl_like(const ExperimentConfig& cfg,
                                   std::span<const ClientStream> streams,
                                   const RunOptions& options = {});

/// Streams plus whatever the source knows about them.
struct ExperimentData {
  std::vector<ClientStream> streams;
  std::optional<SynthTruth> truth;
  std::optional<Scaling> scaling;
};

ExperimentData prepare_data(const ExperimentConfig& cfg);

}  // namespace pofmkl
