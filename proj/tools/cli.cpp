#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pofmkl/error.hpp"
#include "pofmkl/metrics.hpp"

namespace pofmkl::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_records_csv(const RunResult& result, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, path.string(), "cannot write " + path.string());
  out << "t,client,prediction,label,squared_error,selected_bin,params_sent_uplink,regret,"
         "regret_raw\n";
  for (const auto& r : result.records) {
    out << r.t << ',' << (r.client_id + 1) << ',' << fmt(r.prediction) << ',' << fmt(r.label)
        << ',' << fmt(r.squared_error) << ',' << (r.selected_bin + 1) << ','
        << r.params_sent_uplink << ',' << fmt(r.regret) << ',' << fmt(r.regret_raw) << '\n';
  }
}

void write_kernel_losses_csv(const RunResult& result, int n_kernels, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, path.string(), "cannot write " + path.string());
  out << "t,client";
  for (int i = 1; i <= n_kernels; ++i) out << ",loss_" << i;
  out << '\n';
  for (const auto& r : result.records) {
    out << r.t << ',' << (r.client_id + 1);
    for (double l : r.kernel_losses) out << ',' << fmt(l);
    out << '\n';
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, path.string(), "cannot write " + path.string());
  out << text;
}

std::vector<std::uint64_t> seed_list(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (int j = 0; j < cfg.n_seeds; ++j) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(j));
  return seeds;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentData& data,
                      const fs::path& out_dir, unsigned threads) {
  SweepResult sweep;
  sweep.config = cfg;
  sweep.seeds = seed_list(cfg);
  double uplink_sum = 0.0;
  std::size_t client_rounds = 0;
  for (std::uint64_t seed : sweep.seeds) {
    ExperimentConfig c = cfg;
    c.seed = seed;
    RunOptions opts;
    opts.threads = threads;
    const RunResult result = run(c, data.streams, opts);

    const auto bw = bandwidth_report(result.records, c.uplink_cap);
    sweep.max_uplink = std::max(sweep.max_uplink, bw.max_uplink);
    sweep.total_uplink += bw.total_uplink;
    uplink_sum += static_cast<double>(bw.total_uplink);
    client_rounds += bw.client_rounds;
    sweep.downlink_per_client_round =
        2 * static_cast<std::size_t>(c.D) * static_cast<std::size_t>(c.effective_N());
    sweep.norm_diagnostics += result.norm_diagnostics.size();

    sweep.run_mse.push_back(run_mse(result.records));
    std::vector<double> regrets;
    for (int k = 0; k < c.K; ++k) regrets.push_back(result.ledger.client_regret(k, c.T));
    double mean = 0.0;
    for (double r : regrets) mean += r;
    sweep.run_mean_regret.push_back(regrets.empty() ? 0.0 : mean / static_cast<double>(regrets.size()));
    sweep.run_max_regret.push_back(regrets.empty() ? 0.0 : *std::max_element(regrets.begin(), regrets.end()));
    sweep.run_server_proxy.push_back(server_regret_proxy(result.ledger));
    sweep.client_regret.push_back(std::move(regrets));
    sweep.client_seconds += result.client_seconds / static_cast<double>(c.K);
    sweep.server_seconds += result.server_seconds;

    if (!out_dir.empty()) {
      const fs::path dir = out_dir / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      write_records_csv(result, dir / "records.csv");
      emit_traces(result.records, dir);
      if (c.record_kernel_losses) {
        write_kernel_losses_csv(result, c.effective_N(), dir / "kernel_losses.csv");
      }
      std::ofstream model(dir / "model_final.bin", std::ios::binary);
      write_model_binary(result.final_model, model);
      std::ofstream model_csv(dir / "model_final.csv");
      write_model_csv(result.final_model, model_csv);
    }
  }
  const auto n = static_cast<double>(sweep.seeds.size());
  sweep.client_seconds /= n;
  sweep.server_seconds /= n;
  sweep.mean_uplink = client_rounds ? uplink_sum / static_cast<double>(client_rounds) : 0.0;
  return sweep;
}

std::string summary_json(const SweepResult& sweep, const ExperimentData& data) {
  const auto& c = sweep.config;
  ordered_json j;
  j["format_version"] = 1;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["config_hash"] = hash_hex(config_hash(c));
  j["seeds"] = sweep.seeds;
  j["N"] = c.effective_N();
  j["M"] = c.effective_M();
  j["D"] = c.D;
  j["K"] = c.K;
  j["T"] = c.T;

  const auto mse = mse_summary(sweep.run_mse);
  ordered_json m;
  m["mean"] = mse.mean;
  m["std"] = mse.stddev;
  m["per_seed"] = sweep.run_mse;
  m["label_scale"] = "normalized";
  if (data.scaling) {
    const double f = data.scaling->label_variance_factor();
    m["mean_denormalized"] = mse.mean * f;
    m["std_denormalized"] = mse.stddev * f;
  }
  j["mse"] = m;

  ordered_json r;
  double bound = 0.0;
  for (int k = 0; k < c.K; ++k) {
    bound = std::max(bound, hedge_regret_bound(c.effective_N(), c.eta_k_for(k), c.T));
  }
  r["loss"] = c.loss.clip_for_weights ? "clamped_squared_error" : "squared_error";
  r["bound"] = bound;
  std::vector<double> per_client(static_cast<std::size_t>(c.K), 0.0);
  for (const auto& seed_regrets : sweep.client_regret) {
    for (std::size_t k = 0; k < seed_regrets.size(); ++k) per_client[k] += seed_regrets[k];
  }
  for (double& v : per_client) v /= static_cast<double>(sweep.client_regret.size());
  r["per_client_at_T"] = per_client;
  r["mean_at_T"] = mse_summary(sweep.run_mean_regret).mean;
  r["max_at_T"] = *std::max_element(sweep.run_max_regret.begin(), sweep.run_max_regret.end());
  r["server_proxy_fixed_kernel"] = mse_summary(sweep.run_server_proxy).mean;
  j["regret"] = r;

  ordered_json b;
  b["max_uplink"] = sweep.max_uplink;
  b["mean_uplink"] = sweep.mean_uplink;
  b["total_uplink"] = sweep.total_uplink;
  b["uplink_limit_2MD"] = c.max_uplink_params();
  b["uplink_cap"] = c.uplink_cap ? ordered_json(*c.uplink_cap) : ordered_json(nullptr);
  b["downlink_per_client_round"] = sweep.downlink_per_client_round;
  j["bandwidth"] = b;

  j["theta_norm_diagnostics"] = sweep.norm_diagnostics;
  ordered_json norm;
  norm["features"] = data.scaling ? "per-feature min-max, then division by max row norm"
                                  : "synthetic inputs inside the unit ball";
  norm["labels"] = data.scaling ? "min-max to [0,1]" : "generator output rescaled to [0,1]";
  if (data.scaling) {
    norm["row_norm_divisor"] = data.scaling->row_norm_divisor;
    norm["label_min"] = data.scaling->label_min;
    norm["label_max"] = data.scaling->label_max;
  }
  j["normalization"] = norm;
  if (data.truth) j["synth_truth_kernels"] = data.truth->client_kernel;
  return j.dump(2) + "\n";
}

AlgoSpec parse_algo_spec(const std::string& text) {
  AlgoSpec spec;
  spec.label = text;
  std::stringstream ss(text);
  std::string part;
  bool first = true;
  while (std::getline(ss, part, ':')) {
    if (first) {
      spec.name = part;
      first = false;
      continue;
    }
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, text, "algorithm option '" + part + "' is not key=value");
    }
    std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    if (key == "M") key = "client.M";
    else if (key == "D") key = "kernels.D";
    else if (key == "N") key = "kernels.N";
    else if (key == "xi") key = "client.xi_k";
    else if (key == "eta") key = "server.eta";
    else if (key == "eta_k") key = "client.eta_k";
    spec.overrides.push_back(key + "=" + value);
  }
  if (!parse_algorithm(spec.name)) {
    throw Error(ErrorKind::Config, "--algo", "unknown algorithm '" + spec.name + "'");
  }
  return spec;
}

namespace {

struct CommonArgs {
  std::string config_path;
  std::string manifest_path;
  std::string out_dir;
  std::optional<int> seeds;
  std::vector<std::string> algos;
  unsigned threads = 1;
  std::vector<std::string> overrides;
};

int report(std::ostream& err, const Error& e) {
  const bool config_error = e.kind() == ErrorKind::Config;
  err << "error: kind=" << to_string(e.kind());
  if (!e.field().empty()) err << " field=" << e.field();
  err << " message=" << e.what() << '\n';
  return config_error ? kExitConfig : kExitRuntime;
}

ConfigFile load_with_overrides(const CommonArgs& a) {
  ConfigFile file;
  try {
    file = load_config_file(a.config_path);
  } catch (const Error& e) {
    // An unreadable config file is a configuration problem, not a runtime one.
    throw Error(ErrorKind::Config, a.config_path, e.what());
  }
  for (const auto& o : a.overrides) apply_override(file, o);
  if (a.seeds) apply_override(file, "experiment.seeds=" + std::to_string(*a.seeds));
  return file;
}

fs::path resolve_out(const CommonArgs& a, const ExperimentConfig& cfg) {
  if (!a.out_dir.empty()) return a.out_dir;
  const char* root = std::getenv(kOutRootEnv);
  const fs::path base = root && *root ? fs::path(root) : fs::path("pofmkl-out");
  return base / hash_hex(config_hash(cfg));
}

std::string manifest_json(const ExperimentConfig& cfg, const fs::path& out_dir) {
  ordered_json j;
  j["format_version"] = 1;
  j["artifact_version"] = kArtifactVersion;
  j["config_hash"] = hash_hex(config_hash(cfg));
  j["algorithm"] = std::string(to_string(cfg.algorithm));
  j["seeds"] = seed_list(cfg);
  j["out_dir"] = out_dir.string();
  j["config"] = canonical_text(cfg);
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_manifest(const std::string& path, const CommonArgs& a) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, path, "cannot read manifest '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Config, path, std::string("malformed manifest: ") + e.what());
  }
  if (!j.contains("config") || !j["config"].is_string()) {
    throw Error(ErrorKind::Config, path, "manifest has no config text");
  }
  ConfigFile file = parse_config_text(j["config"].get<std::string>(), path);
  for (const auto& o : a.overrides) apply_override(file, o);
  if (a.seeds) apply_override(file, "experiment.seeds=" + std::to_string(*a.seeds));
  return to_experiment_config(file);
}

int cmd_run(const CommonArgs& a, std::ostream& out) {
  ExperimentConfig cfg;
  if (!a.manifest_path.empty()) {
    cfg = config_from_manifest(a.manifest_path, a);
  } else {
    ConfigFile file = load_with_overrides(a);
    if (!a.algos.empty()) apply_override(file, "experiment.algorithm=" + a.algos.front());
    cfg = to_experiment_config(file);
  }
  const fs::path dir = resolve_out(a, cfg);
  fs::create_directories(dir);
  const ExperimentData data = prepare_data(cfg);
  const SweepResult sweep = run_sweep(cfg, data, dir, a.threads);
  write_text(dir / "config.ini", canonical_text(cfg));
  write_text(dir / "manifest.json", manifest_json(cfg, dir));
  write_text(dir / "summary.json", summary_json(sweep, data));
  ordered_json timing;
  timing["client_seconds_per_client"] = sweep.client_seconds;
  timing["server_seconds"] = sweep.server_seconds;
  write_text(dir / "timing.json", timing.dump(2) + "\n");
  const auto mse = mse_summary(sweep.run_mse);
  out << to_string(cfg.algorithm) << ": mse " << fmt(mse.mean) << " +- " << fmt(mse.stddev)
      << " over " << sweep.seeds.size() << " seed(s), max uplink " << sweep.max_uplink
      << ", output " << dir.string() << '\n';
  return kExitOk;
}

int cmd_compare(const CommonArgs& a, std::ostream& out) {
  if (a.algos.empty()) throw Error(ErrorKind::Config, "--algo", "compare needs --algo");
  const ConfigFile base = load_with_overrides(a);
  std::vector<std::pair<AlgoSpec, ExperimentConfig>> plans;
  for (const auto& text : a.algos) {
    AlgoSpec spec = parse_algo_spec(text);
    ConfigFile file = base;
    apply_override(file, "experiment.algorithm=" + spec.name);
    for (const auto& o : spec.overrides) apply_override(file, o);
    plans.emplace_back(spec, to_experiment_config(file));
  }
  const fs::path dir = resolve_out(a, plans.front().second);
  fs::create_directories(dir);
  // Streams depend only on the data section, which overrides leave alone,
  // so every algorithm sees the same data.
  const ExperimentData data = prepare_data(plans.front().second);

  std::ostringstream table;
  table << "label,algorithm,N,M,D,max_uplink,mse_mean,mse_std,regret_mean,regret_max,"
           "regret_bound,server_regret_proxy,client_runtime_s,server_runtime_s\n";
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const auto& [spec, cfg] = plans[p];
    const fs::path sub = dir / (std::to_string(p + 1) + "_" + std::string(to_string(cfg.algorithm)));
    fs::create_directories(sub);
    const SweepResult sweep = run_sweep(cfg, data, sub, a.threads);
    write_text(sub / "config.ini", canonical_text(cfg));
    write_text(sub / "summary.json", summary_json(sweep, data));
    const auto mse = mse_summary(sweep.run_mse);
    const auto reg = mse_summary(sweep.run_mean_regret);
    double bound = 0.0;
    for (int k = 0; k < cfg.K; ++k) {
      bound = std::max(bound, hedge_regret_bound(cfg.effective_N(), cfg.eta_k_for(k), cfg.T));
    }
    table << spec.label << ',' << to_string(cfg.algorithm) << ',' << cfg.effective_N() << ','
          << cfg.effective_M() << ',' << cfg.D << ',' << sweep.max_uplink << ',' << fmt(mse.mean)
          << ',' << fmt(mse.stddev) << ',' << fmt(reg.mean) << ','
          << fmt(*std::max_element(sweep.run_max_regret.begin(), sweep.run_max_regret.end()))
          << ',' << fmt(bound) << ',' << fmt(mse_summary(sweep.run_server_proxy).mean) << ','
          << fmt(sweep.client_seconds) << ',' << fmt(sweep.server_seconds) << '\n';
    out << spec.label << ": mse " << fmt(mse.mean) << " +- " << fmt(mse.stddev) << '\n';
  }
  write_text(dir / "comparison.csv", table.str());
  out << "comparison table: " << (dir / "comparison.csv").string() << '\n';
  return kExitOk;
}

int cmd_validate(const CommonArgs& a, std::ostream& out) {
  ConfigFile file = load_with_overrides(a);
  if (!a.algos.empty()) apply_override(file, "experiment.algorithm=" + a.algos.front());
  const ExperimentConfig cfg = to_experiment_config(file);
  out << "ok: " << to_string(cfg.algorithm) << " N=" << cfg.effective_N()
      << " M=" << cfg.effective_M() << " D=" << cfg.D << " uplink<=" << cfg.max_uplink_params()
      << " config_hash=" << hash_hex(config_hash(cfg)) << '\n';
  return kExitOk;
}

int cmd_features(const CommonArgs& a, const std::string& format, std::ostream& out) {
  ConfigFile file = load_with_overrides(a);
  const ExperimentConfig cfg = to_experiment_config(file);
  const ExperimentData data = prepare_data(cfg);
  if (data.streams.empty() || data.streams.front().empty()) {
    throw Error(ErrorKind::Data, "no samples to infer the input dimension from");
  }
  const int d = static_cast<int>(data.streams.front().front().x.size());
  const fs::path dir = resolve_out(a, cfg);
  fs::create_directories(dir);
  const auto maps = sample_dictionary(cfg.dictionary(), d, cfg.D, cfg.seed);
  for (const auto& m : maps) {
    const std::string stem = "kernel_" + std::to_string(m.kernel().index);
    if (format == "csv") {
      std::ofstream f(dir / (stem + ".csv"));
      m.write_csv(f);
    } else {
      std::ofstream f(dir / (stem + ".bin"), std::ios::binary);
      m.write_binary(f);
    }
  }
  out << "wrote " << maps.size() << " feature maps to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Personalized online federated multi-kernel learning simulator", "pofmkl"};
  app.require_subcommand(1);
  app.footer(std::string("Exit codes: 0 success, 2 configuration error, 3 runtime or data "
                         "error.\nEnvironment: ") +
             kOutRootEnv + " sets the default output root (default ./pofmkl-out).");

  CommonArgs a;
  std::string format = "csv";
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config,-c", a.config_path, "Experiment config file");
    if (config_required) opt->required();
    sub->add_option("--out,-o", a.out_dir, "Output directory");
    sub->add_option("--seeds", a.seeds, "Number of random-feature seeds (overrides experiment.seeds)");
    sub->add_option("--threads", a.threads, "Worker threads for client computation")
        ->check(CLI::Range(1u, 1024u));
    sub->add_option("--override", a.overrides, "Config override key=value (dot-path key)");
  };

  auto* run_cmd = app.add_subcommand("run", "Run one algorithm over a seed sweep");
  add_common(run_cmd, false);
  run_cmd->add_option("--manifest", a.manifest_path, "Re-run from a manifest.json");
  run_cmd->add_option("--algo", a.algos, "Algorithm (overrides experiment.algorithm)")
      ->expected(1);

  auto* cmp_cmd = app.add_subcommand("compare", "Run several algorithms on identical streams");
  add_common(cmp_cmd, true);
  cmp_cmd->add_option("--algo", a.algos,
                      "Algorithms as name[:key=value...], comma separated "
                      "(e.g. pof_mkl:M=1:D=100,ofmkl_avg:D=9)")
      ->delimiter(',')
      ->required();

  auto* val_cmd = app.add_subcommand("validate", "Check a config without running");
  add_common(val_cmd, true);
  val_cmd->add_option("--algo", a.algos, "Algorithm (overrides experiment.algorithm)")->expected(1);

  auto* feat_cmd = app.add_subcommand("features", "Dump the sampled random-feature frequencies");
  add_common(feat_cmd, true);
  feat_cmd->add_option("--format", format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: kind=usage message=" << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) {
      if (a.config_path.empty() && a.manifest_path.empty()) {
        throw Error(ErrorKind::Config, "--config", "run needs --config or --manifest");
      }
      return cmd_run(a, out);
    }
    if (cmp_cmd->parsed()) return cmd_compare(a, out);
    if (val_cmd->parsed()) return cmd_validate(a, out);
    if (feat_cmd->parsed()) return cmd_features(a, format, out);
  } catch (const Error& e) {
    return report(err, e);
  } catch (const std::exception& e) {
    err << "error: kind=internal message=" << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  return main(args, out, err);
}

}  // namespace pofmkl::cli
