#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pofmkl/config.hpp"
#include "pofmkl/engine.hpp"

namespace pofmkl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kArtifactVersion = "pofmkl 0.1.0";
inline constexpr const char* kOutRootEnv = "POFMKL_OUT_ROOT";

/// Entry point shared by the executable and the tests.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Aggregate of one algorithm over a seed sweep.
struct SweepResult {
  ExperimentConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<double> run_mse;
  std::vector<double> run_mean_regret;      // mean over clients of regret at T
  std::vector<double> run_max_regret;
  std::vector<double> run_server_proxy;
  std::vector<std::vector<double>> client_regret;  // [seed][client]
  std::size_t max_uplink = 0;
  double mean_uplink = 0.0;
  std::size_t total_uplink = 0;
  std::size_t downlink_per_client_round = 0;
  std::size_t norm_diagnostics = 0;
  double client_seconds = 0.0;  // summed client time / K, averaged over seeds
  double server_seconds = 0.0;
};

/// Runs every seed of `cfg`, writing per-seed traces under `out_dir`.
SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentData& data,
                      const std::filesystem::path& out_dir, unsigned threads);

/// Summary JSON text (no wall-clock fields), byte-stable for a given sweep.
std::string summary_json(const SweepResult& sweep, const ExperimentData& data);

/// Parses `name[:key=value...]` into overrides for `compare`.
struct AlgoSpec {
  std::string label;
  std::string name;
  std::vector<std::string> overrides;  // dot-path assignments
};
AlgoSpec parse_algo_spec(const std::string& text);

}  // namespace pofmkl::cli
