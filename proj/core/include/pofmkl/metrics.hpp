#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace pofmkl {

struct RoundRecord;

/// Online accumulation of the client regret: cumulative mixture loss against
/// the best single kernel's cumulative loss, tracked both with the Hedge
/// (clamped) loss and with the raw squared error.
class RegretLedger {
 public:
  RegretLedger() = default;
  RegretLedger(int n_clients, int n_kernels);

  void record(int client, double mixture_loss, double mixture_raw,
              std::span<const double> kernel_losses, std::span<const double> kernel_raw,
              double squared_error);

  int num_clients() const noexcept { return static_cast<int>(clients_.size()); }
  int num_kernels() const noexcept { return n_kernels_; }
  int rounds(int client) const;

  /// Regret after t rounds (t = 0 gives 0). Clamped loss.
  double client_regret(int client, int t) const;
  double client_regret_raw(int client, int t) const;

  double cumulative_mixture(int client) const;
  std::span<const double> cumulative_kernel(int client) const;

  /// Mean squared prediction error over every recorded client-round.
  double mse() const;

 private:
  struct PerClient {
    double mixture = 0.0;
    double mixture_raw = 0.0;
    std::vector<double> kernel;
    std::vector<double> kernel_raw;
    std::vector<double> regret_trace;
    std::vector<double> regret_raw_trace;
    double squared_error = 0.0;
  };
  int n_kernels_ = 0;
  std::vector<PerClient> clients_;
};

/// ln N / eta_k + eta_k T / 2
double hedge_regret_bound(int n_kernels, double eta_k, int T);

/// Fixed-kernel comparator in place of the RKHS-optimal function:
/// sum_k mixture_k - min_i sum_k kernel_{i,k}. This is a proxy, not the
/// server regret against the best function in hindsight.
double server_regret_proxy(const RegretLedger& ledger);

struct MseSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across runs; 0 for one run
};

/// Spread across runs (one entry per random-feature seed).
MseSummary mse_summary(std::span<const double> run_mses);

/// Mean of (prediction - label)^2 over a run's records.
double run_mse(std::span<const RoundRecord> records);

struct BandwidthSummary {
  std::size_t client_rounds = 0;
  std::size_t max_uplink = 0;
  double mean_uplink = 0.0;
  std::size_t total_uplink = 0;
};

/// Throws an invariant error when any record exceeds `cap`.
BandwidthSummary bandwidth_report(std::span<const RoundRecord> records,
                                  std::optional<std::size_t> cap = std::nullopt);

/// Writes `<prefix>regret.csv` (t, mean and population std across clients
/// of the client regret, clamped and raw) and `<prefix>mse.csv` (t, mean
/// squared error over clients at round t, running MSE up to t).
void emit_traces(std::span<const RoundRecord> records, const std::filesystem::path& dir,
                 const std::string& prefix = "");

}  // namespace pofmkl
