#include "pofmkl/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

#include "pofmkl/error.hpp"
#include "pofmkl/thread_pool.hpp"

namespace pofmkl {

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::PofMkl: return "pof_mkl";
    case Algorithm::Ofskl: return "ofskl";
    case Algorithm::OfmklAvg: return "ofmkl_avg";
    case Algorithm::VmkoflLike: return "vmkofl_like";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept {
  if (name == "pof_mkl" || name == "pof-mkl") return Algorithm::PofMkl;
  if (name == "ofskl") return Algorithm::Ofskl;
  if (name == "ofmkl_avg" || name == "ofmkl-avg") return Algorithm::OfmklAvg;
  if (name == "vmkofl_like" || name == "vm-kofl-like") return Algorithm::VmkoflLike;
  return std::nullopt;
}

double ExperimentConfig::eta_value() const {
  if (eta) return *eta;
  return T > 0 ? 1.0 / std::sqrt(static_cast<double>(T)) : 1.0;
}

double ExperimentConfig::eta_k_for(int client) const {
  if (eta_k.empty()) return T > 0 ? 1.0 / std::sqrt(static_cast<double>(T)) : 1.0;
  return eta_k.size() == 1 ? eta_k.front() : eta_k.at(static_cast<std::size_t>(client));
}

double ExperimentConfig::xi_k_for(int client) const {
  return xi_k.size() == 1 ? xi_k.front() : xi_k.at(static_cast<std::size_t>(client));
}

int ExperimentConfig::effective_N() const noexcept {
  return algorithm == Algorithm::Ofskl ? 1 : N;
}

int ExperimentConfig::effective_M() const noexcept {
  switch (algorithm) {
    case Algorithm::PofMkl: return M;
    case Algorithm::Ofskl: return 1;
    case Algorithm::OfmklAvg:
    case Algorithm::VmkoflLike: return N;
  }
  return M;
}

std::vector<KernelSpec> ExperimentConfig::dictionary() const {
  if (algorithm == Algorithm::Ofskl) return build_dictionary(1, GridRule::constant(ofskl_sigma));
  return build_dictionary(N, grid);
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const char* field, const std::string& msg) {
    throw Error(ErrorKind::Config, field, msg);
  };
  if (cfg.N < 1) fail("kernels.N", "N must be >= 1");
  if (cfg.D < 1) fail("kernels.D", "D must be >= 1");
  if (cfg.K < 1) fail("experiment.K", "K must be >= 1");
  if (cfg.T < 0) fail("experiment.T", "T must be >= 0");
  if (cfg.n_seeds < 1) fail("experiment.seeds", "seeds must be >= 1");
  if (cfg.algorithm == Algorithm::PofMkl && (cfg.M < 1 || cfg.M > cfg.N)) {
    fail("client.M", "M must satisfy 1 <= M <= N (M=" + std::to_string(cfg.M) +
                         ", N=" + std::to_string(cfg.N) + ")");
  }
  if (!(cfg.eta_value() > 0.0)) fail("server.eta", "eta must be > 0");
  if (!cfg.eta_k.empty() && cfg.eta_k.size() != 1 &&
      cfg.eta_k.size() != static_cast<std::size_t>(cfg.K)) {
    fail("client.eta_k", "eta_k needs one value or K values");
  }
  for (double v : cfg.eta_k) {
    if (!(v > 0.0)) fail("client.eta_k", "eta_k must be > 0");
  }
  if (cfg.xi_k.size() != 1 && cfg.xi_k.size() != static_cast<std::size_t>(cfg.K)) {
    fail("client.xi_k", "xi_k needs one value or K values");
  }
  for (double v : cfg.xi_k) {
    if (!(v > 0.0 && v <= 1.0)) fail("client.xi_k", "xi_k must lie in (0, 1]");
  }
  if (!(cfg.loss.lambda >= 0.0)) fail("losses.lambda", "lambda must be >= 0");
  if (!(cfg.ofskl_sigma > 0.0)) fail("kernels.ofskl_sigma", "ofskl_sigma must be > 0");
  if (cfg.theta_norm_cap && !(*cfg.theta_norm_cap > 0.0)) {
    fail("server.theta_norm_cap", "theta_norm_cap must be > 0");
  }
  (void)cfg.dictionary();  // bandwidth grid errors
  if (cfg.uplink_cap) {
    const std::size_t need = cfg.max_uplink_params();
    if (need > *cfg.uplink_cap) {
      fail("budget.uplink_cap",
           "uplink budget exceeded: 2*M*D = 2*" + std::to_string(cfg.effective_M()) + "*" +
               std::to_string(cfg.D) + " = " + std::to_string(need) + " > cap " +
               std::to_string(*cfg.uplink_cap));
    }
  }
}

namespace {

enum class WeightPolicy { Personal, Uniform, Global };

WeightPolicy policy_for(Algorithm a) {
  switch (a) {
    case Algorithm::PofMkl: return WeightPolicy::Personal;
    case Algorithm::Ofskl:
    case Algorithm::OfmklAvg: return WeightPolicy::Uniform;
    case Algorithm::VmkoflLike: return WeightPolicy::Global;
  }
  return WeightPolicy::Personal;
}

/// Everything one client produces in one round.
struct ClientRound {
  double prediction = 0.0;
  std::vector<double> losses;
  std::vector<double> raw;
  double mixture_loss = 0.0;
  double mixture_raw = 0.0;
  double squared_error = 0.0;
  int selected_bin = 0;
  ClientUpdate update;
  double seconds = 0.0;
};

/// Per-client workspace: the feature vectors of the current datum.
struct Workspace {
  std::vector<FeatureVector> features;
};

class Simulation {
 public:
  Simulation(const ExperimentConfig& cfg, std::span<const ClientStream> streams)
      : cfg_(cfg),
        streams_(streams),
        policy_(policy_for(cfg.algorithm)),
        n_kernels_(cfg.effective_N()),
        subset_size_(cfg.effective_M()) {
    validate(cfg);
    if (streams.size() != static_cast<std::size_t>(cfg.K)) {
      throw Error(ErrorKind::Data, "expected " + std::to_string(cfg.K) + " client streams, got " +
                                       std::to_string(streams.size()));
    }
    for (std::size_t k = 0; k < streams.size(); ++k) {
      if (streams[k].size() < static_cast<std::size_t>(cfg.T)) {
        throw Error(ErrorKind::Data, "stream of client " + std::to_string(k + 1) +
                                         " is exhausted at round " +
                                         std::to_string(streams[k].size() + 1) + " of " +
                                         std::to_string(cfg.T));
      }
    }
    d_ = 0;
    if (cfg.T > 0) d_ = static_cast<int>(streams.front().front().x.size());
    for (const auto& s : streams) {
      for (int t = 0; t < cfg.T; ++t) {
        if (s[static_cast<std::size_t>(t)].x.size() != static_cast<std::size_t>(d_)) {
          throw Error(ErrorKind::Shape, "samples have inconsistent feature dimension");
        }
      }
    }
    if (d_ > 0) maps_ = sample_dictionary(cfg.dictionary(), d_, cfg.D, cfg.seed);

    const bool personal_xi = policy_ == WeightPolicy::Personal;
    clients_.reserve(static_cast<std::size_t>(cfg.K));
    for (int k = 0; k < cfg.K; ++k) {
      clients_.push_back(ClientState::make(k, n_kernels_, cfg.eta_k_for(k),
                                           personal_xi ? cfg.xi_k_for(k) : 1.0, cfg.seed));
    }
    global_weights_.assign(static_cast<std::size_t>(n_kernels_), 1.0);
    workspaces_.resize(static_cast<std::size_t>(cfg.K));
    for (auto& w : workspaces_) {
      w.features.assign(static_cast<std::size_t>(n_kernels_),
                        FeatureVector(2 * static_cast<std::size_t>(cfg.D), 0.0));
    }
  }

  RunResult execute(const RunOptions& options) {
    RunResult result;
    result.final_model = GlobalModel::zeros(n_kernels_, cfg_.D, cfg_.K);
    result.ledger = RegretLedger(cfg_.K, n_kernels_);
    result.records.reserve(static_cast<std::size_t>(cfg_.K) * static_cast<std::size_t>(cfg_.T));

    ThreadPool pool(options.threads);
    std::vector<ClientRound> rounds(static_cast<std::size_t>(cfg_.K));
    GlobalModel& model = result.final_model;

    for (int t = 1; t <= cfg_.T; ++t) {
      const ModelSnapshot snapshot = broadcast(model);
      const std::vector<double> shared_weights = global_weights_;
      pool.parallel_for(static_cast<std::size_t>(cfg_.K), [&](std::size_t k) {
        rounds[k] = client_step(static_cast<int>(k), t, snapshot, shared_weights);
      });

      const auto server_start = std::chrono::steady_clock::now();
      if (policy_ == WeightPolicy::Global) update_global_weights(rounds);
      std::vector<ClientUpdate> updates;
      updates.reserve(rounds.size());
      for (int k = 0; k < cfg_.K; ++k) {
        auto& r = rounds[static_cast<std::size_t>(k)];
        const std::size_t sent = r.update.params_sent;
        if (cfg_.uplink_cap && sent > *cfg_.uplink_cap) {
          throw Error(ErrorKind::Invariant, "round " + std::to_string(t) + " client " +
                                                std::to_string(k + 1) + ": uplink of " +
                                                std::to_string(sent) + " exceeds cap");
        }
        result.bandwidth.record_uplink(sent);
        result.bandwidth.record_downlink(snapshot.downlink_params());
        result.client_seconds += r.seconds;

        result.ledger.record(k, r.mixture_loss, r.mixture_raw, r.losses, r.raw, r.squared_error);
        RoundRecord rec;
        rec.t = t;
        rec.client_id = k;
        rec.prediction = r.prediction;
        rec.label = streams_[static_cast<std::size_t>(k)][static_cast<std::size_t>(t - 1)].y;
        rec.squared_error = r.squared_error;
        rec.selected_bin = r.selected_bin;
        rec.params_sent_uplink = sent;
        rec.regret = result.ledger.client_regret(k, t);
        rec.regret_raw = result.ledger.client_regret_raw(k, t);
        if (cfg_.record_kernel_losses) {
          rec.kernel_losses = std::move(r.losses);
          rec.kernel_losses_raw = std::move(r.raw);
        }
        result.records.push_back(std::move(rec));
        updates.push_back(std::move(r.update));
      }

      try {
        model = aggregate(model, updates, cfg_.theta_norm_cap, &result.norm_diagnostics);
      } catch (const Error& e) {
        throw Error(e.kind(), "round " + std::to_string(t) + ": " + e.what());
      }
      result.server_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - server_start).count();
    }

    for (const auto& c : clients_) {
      result.final_weights.push_back(policy_ == WeightPolicy::Global ? global_weights_
                                                                     : c.weights);
    }
    return result;
  }

 private:
  ClientRound client_step(int k, int t, const ModelSnapshot& snapshot,
                          const std::vector<double>& shared_weights) {
    const auto start = std::chrono::steady_clock::now();
    try {
      ClientState& state = clients_[static_cast<std::size_t>(k)];
      auto& ws = workspaces_[static_cast<std::size_t>(k)];
      const Sample& datum = streams_[static_cast<std::size_t>(k)][static_cast<std::size_t>(t - 1)];

      // Prediction uses x only.
      for (int i = 0; i < n_kernels_; ++i) {
        maps_[static_cast<std::size_t>(i)].map_into(datum.x, ws.features[static_cast<std::size_t>(i)]);
      }
      ClientRound out;
      const auto preds = kernel_predictions(snapshot, ws.features);
      const std::span<const double> mixing =
          policy_ == WeightPolicy::Personal ? std::span<const double>(state.weights)
                                            : std::span<const double>(shared_weights);
      out.prediction = mixture_prediction(mixing, preds);

      // The label is revealed after the prediction is fixed.
      const double y = datum.y;
      out.losses.resize(preds.size());
      out.raw.resize(preds.size());
      for (std::size_t i = 0; i < preds.size(); ++i) {
        out.losses[i] = bounded_loss(preds[i], y, cfg_.loss);
        const double e = preds[i] - y;
        out.raw[i] = e * e;
      }
      out.mixture_loss = bounded_loss(out.prediction, y, cfg_.loss);
      const double err = out.prediction - y;
      out.squared_error = err * err;
      out.mixture_raw = out.squared_error;

      // Bins come from w_{k,t}, before this round's Hedge step.
      BinAssignment bins = assign_bins(policy_ == WeightPolicy::Personal
                                           ? std::span<const double>(state.weights)
                                           : std::span<const double>(shared_weights),
                                       state.xi_k, subset_size_);
      if (policy_ == WeightPolicy::Personal) update_weights(state, out.losses);
      select_subset(state, bins, static_cast<std::uint64_t>(t));
      out.selected_bin = bins.selected_bin;
      out.update = local_update(state, snapshot, ws.features, y, bins, cfg_.eta_value(), cfg_.loss);
      out.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return out;
    } catch (const Error& e) {
      throw Error(e.kind(), "round " + std::to_string(t) + " client " + std::to_string(k + 1) +
                                ": " + e.what());
    }
  }

  // Server-side Hedge step on the clients' average loss (VmkoflLike only).
  void update_global_weights(const std::vector<ClientRound>& rounds) {
    double eta_w = 0.0;
    for (int k = 0; k < cfg_.K; ++k) eta_w += cfg_.eta_k_for(k);
    eta_w /= static_cast<double>(cfg_.K);
    double largest = 0.0;
    for (std::size_t i = 0; i < global_weights_.size(); ++i) {
      double mean = 0.0;
      for (const auto& r : rounds) mean += r.losses[i];
      mean /= static_cast<double>(rounds.size());
      global_weights_[i] *= std::exp(-eta_w * mean);
      largest = std::max(largest, global_weights_[i]);
    }
    if (largest < kWeightUnderflowGuard) {
      for (double& w : global_weights_) w /= largest;
    }
  }

  const ExperimentConfig& cfg_;
  std::span<const ClientStream> streams_;
  WeightPolicy policy_;
  int n_kernels_;
  int subset_size_;
  int d_ = 0;
  std::vector<RandomFeatureMap> maps_;
  std::vector<ClientState> clients_;
  std::vector<double> global_weights_;
  std::vector<Workspace> workspaces_;
};

}  // namespace

RunResult run(const ExperimentConfig& cfg, std::span<const ClientStream> streams,
              const RunOptions& options) {
  Simulation sim(cfg, streams);
  return sim.execute(options);
}

RunResult run_baseline_ofskl(const ExperimentConfig& cfg, std::span<const ClientStream> streams,
                             const RunOptions& options) {
  ExperimentConfig c = cfg;
  c.algorithm = Algorithm::Ofskl;
  return run(c, streams, options);
}

RunResult run_baseline_ofmkl_avg(const ExperimentConfig& cfg,
                                 std::span<const ClientStream> streams,
                                 const RunOptions& options) {
  ExperimentConfig c = cfg;
  c.algorithm = Algorithm::OfmklAvg;
  return run(c, streams, options);
}

RunResult run_baseline_vmkofl_like(const ExperimentConfig& cfg,
                                   std::span<const ClientStream> streams,
                                   const RunOptions& options) {
  ExperimentConfig c = cfg;
  c.algorithm = Algorithm::VmkoflLike;
  return run(c, streams, options);
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
  ExperimentData out;
  if (cfg.data.source == DataSource::Synth) {
    SynthSpec spec = cfg.data.synth;
    spec.K = cfg.K;
    spec.T = cfg.T;
    spec.seed = cfg.data.seed;
    spec.n_dictionary = cfg.N;
    spec.grid = cfg.grid;
    auto synth = synth_stream(spec);
    out.streams = std::move(synth.streams);
    out.truth = std::move(synth.truth);
    return out;
  }
  const Dataset raw = ingest_csv(cfg.data.csv_path, cfg.data.csv);
  if (raw.rows() == 0) throw Error(ErrorKind::Data, cfg.data.csv_path + ": no data rows");
  const Dataset ds = normalize(raw);
  PartitionPlan plan = cfg.data.partition;
  plan.K = cfg.K;
  plan.T = cfg.T;
  auto parts = partition(ds, plan, cfg.data.seed);
  out.streams = std::move(parts.streams);
  out.scaling = ds.scaling;
  return out;
}

}  // namespace pofmkl
