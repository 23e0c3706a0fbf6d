#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pofmkl/update.hpp"

namespace pofmkl {

/// Server-held parameters theta_{i,t}, one 2D-vector per kernel.
struct GlobalModel {
  std::vector<std::vector<double>> thetas;
  int round = 1;
  int num_clients = 1;

  static GlobalModel zeros(int n_kernels, int n_frequencies, int n_clients);

  int num_kernels() const noexcept { return static_cast<int>(thetas.size()); }
  std::size_t theta_dim() const noexcept { return thetas.empty() ? 0 : thetas.front().size(); }

  friend bool operator==(const GlobalModel&, const GlobalModel&) = default;
};

/// Read-only view handed to clients for one round.
class ModelSnapshot {
 public:
  explicit ModelSnapshot(std::shared_ptr<const GlobalModel> model)
      : model_(std::move(model)) {}

  int round() const noexcept { return model_->round; }
  int num_kernels() const noexcept { return model_->num_kernels(); }
  std::span<const double> theta(int kernel) const noexcept {
    return model_->thetas[static_cast<std::size_t>(kernel)];
  }
  const GlobalModel& model() const noexcept { return *model_; }
  /// Parameters a client downloads per round: 2 N D.
  std::size_t downlink_params() const noexcept {
    return model_->theta_dim() * static_cast<std::size_t>(model_->num_kernels());
  }

 private:
  std::shared_ptr<const GlobalModel> model_;
};

ModelSnapshot broadcast(const GlobalModel& model);

struct NormDiagnostic {
  int round = 0;
  int kernel = 0;  // 0-based
  double norm = 0.0;
};

/// theta_{i,t+1} = theta_{i,t} - (1/K) sum_{k in C_i} (theta_{i,t} - theta_{ik,t+1}).
/// The divisor is always the full client count. Updates may arrive in any
/// order; they are sorted by client id before summation.
GlobalModel aggregate(const GlobalModel& model, std::span<const ClientUpdate> updates);

/// Same as `aggregate`, plus a diagnostic for each kernel whose new norm
/// exceeds `norm_cap`.
GlobalModel aggregate(const GlobalModel& model, std::span<const ClientUpdate> updates,
                      std::optional<double> norm_cap,
                      std::vector<NormDiagnostic>* diagnostics);

/// Running totals of parameters moved in each direction.
class BandwidthMeter {
 public:
  void record_uplink(std::size_t params) noexcept {
    uplink_total_ += params;
    if (params > uplink_max_) uplink_max_ = params;
    ++uplink_messages_;
  }
  void record_downlink(std::size_t params) noexcept { downlink_total_ += params; }

  std::size_t uplink_total() const noexcept { return uplink_total_; }
  std::size_t uplink_max() const noexcept { return uplink_max_; }
  std::size_t uplink_messages() const noexcept { return uplink_messages_; }
  std::size_t downlink_total() const noexcept { return downlink_total_; }

 private:
  std::size_t uplink_total_ = 0;
  std::size_t uplink_max_ = 0;
  std::size_t uplink_messages_ = 0;
  std::size_t downlink_total_ = 0;
};

/// Checkpoint format. Binary: magic "PMKLGM01", int32 round, int32 K,
/// int32 N, int32 dim, then N*dim float64 little-endian.
void write_model_binary(const GlobalModel& model, std::ostream& out);
GlobalModel read_model_binary(std::istream& in);
/// CSV: header `kernel,j,value`, one row per coordinate, 1-based kernel index.
void write_model_csv(const GlobalModel& model, std::ostream& out);

}  // namespace pofmkl
