#include "pofmkl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "pofmkl/engine.hpp"
#include "pofmkl/error.hpp"

namespace pofmkl {

RegretLedger::RegretLedger(int n_clients, int n_kernels) : n_kernels_(n_kernels) {
  clients_.resize(static_cast<std::size_t>(n_clients));
  for (auto& c : clients_) {
    c.kernel.assign(static_cast<std::size_t>(n_kernels), 0.0);
    c.kernel_raw.assign(static_cast<std::size_t>(n_kernels), 0.0);
  }
}

void RegretLedger::record(int client, double mixture_loss, double mixture_raw,
                          std::span<const double> kernel_losses,
                          std::span<const double> kernel_raw, double squared_error) {
  auto& c = clients_.at(static_cast<std::size_t>(client));
  if (kernel_losses.size() != c.kernel.size() || kernel_raw.size() != c.kernel.size()) {
    throw Error(ErrorKind::Shape, "regret ledger: wrong number of kernel losses");
  }
  c.mixture += mixture_loss;
  c.mixture_raw += mixture_raw;
  for (std::size_t i = 0; i < c.kernel.size(); ++i) {
    c.kernel[i] += kernel_losses[i];
    c.kernel_raw[i] += kernel_raw[i];
  }
  c.squared_error += squared_error;
  c.regret_trace.push_back(c.mixture - *std::min_element(c.kernel.begin(), c.kernel.end()));
  c.regret_raw_trace.push_back(c.mixture_raw -
                               *std::min_element(c.kernel_raw.begin(), c.kernel_raw.end()));
}

int RegretLedger::rounds(int client) const {
  return static_cast<int>(clients_.at(static_cast<std::size_t>(client)).regret_trace.size());
}

double RegretLedger::client_regret(int client, int t) const {
  if (t == 0) return 0.0;
  return clients_.at(static_cast<std::size_t>(client)).regret_trace.at(static_cast<std::size_t>(t - 1));
}

double RegretLedger::client_regret_raw(int client, int t) const {
  if (t == 0) return 0.0;
  return clients_.at(static_cast<std::size_t>(client))
      .regret_raw_trace.at(static_cast<std::size_t>(t - 1));
}

double RegretLedger::cumulative_mixture(int client) const {
  return clients_.at(static_cast<std::size_t>(client)).mixture;
}

std::span<const double> RegretLedger::cumulative_kernel(int client) const {
  return clients_.at(static_cast<std::size_t>(client)).kernel;
}

double RegretLedger::mse() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& c : clients_) {
    total += c.squared_error;
    n += c.regret_trace.size();
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

double hedge_regret_bound(int n_kernels, double eta_k, int T) {
  if (n_kernels < 1 || !(eta_k > 0.0) || T < 0) {
    throw Error(ErrorKind::Config, "regret bound needs N >= 1, eta_k > 0, T >= 0");
  }
  return std::log(static_cast<double>(n_kernels)) / eta_k + eta_k * static_cast<double>(T) / 2.0;
}

double server_regret_proxy(const RegretLedger& ledger) {
  if (ledger.num_clients() == 0) return 0.0;
  double mixture = 0.0;
  std::vector<double> per_kernel(static_cast<std::size_t>(ledger.num_kernels()), 0.0);
  for (int k = 0; k < ledger.num_clients(); ++k) {
    mixture += ledger.cumulative_mixture(k);
    const auto kernel = ledger.cumulative_kernel(k);
    for (std::size_t i = 0; i < per_kernel.size(); ++i) per_kernel[i] += kernel[i];
  }
  return mixture - *std::min_element(per_kernel.begin(), per_kernel.end());
}

MseSummary mse_summary(std::span<const double> run_mses) {
  if (run_mses.empty()) throw Error(ErrorKind::Data, "MSE summary needs at least one run");
  MseSummary s;
  for (double v : run_mses) s.mean += v;
  s.mean /= static_cast<double>(run_mses.size());
  if (run_mses.size() > 1) {
    double ss = 0.0;
    for (double v : run_mses) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(run_mses.size() - 1));
  }
  return s;
}

double run_mse(std::span<const RoundRecord> records) {
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : records) total += r.squared_error;
  return total / static_cast<double>(records.size());
}

BandwidthSummary bandwidth_report(std::span<const RoundRecord> records,
                                  std::optional<std::size_t> cap) {
  BandwidthSummary s;
  for (const auto& r : records) {
    if (cap && r.params_sent_uplink > *cap) {
      throw Error(ErrorKind::Invariant, "budget.uplink_cap",
                  "round " + std::to_string(r.t) + " client " + std::to_string(r.client_id + 1) +
                      " sent " + std::to_string(r.params_sent_uplink) +
                      " parameters, cap is " + std::to_string(*cap));
    }
    ++s.client_rounds;
    s.total_uplink += r.params_sent_uplink;
    s.max_uplink = std::max(s.max_uplink, r.params_sent_uplink);
  }
  if (s.client_rounds) {
    s.mean_uplink = static_cast<double>(s.total_uplink) / static_cast<double>(s.client_rounds);
  }
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments population(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

}  // namespace

void emit_traces(std::span<const RoundRecord> records, const std::filesystem::path& dir,
                 const std::string& prefix) {
  std::filesystem::create_directories(dir);
  std::ofstream regret(dir / (prefix + "regret.csv"));
  std::ofstream mse(dir / (prefix + "mse.csv"));
  if (!regret || !mse) {
    throw Error(ErrorKind::Io, dir.string(), "cannot write traces under " + dir.string());
  }
  regret << "t,mean_regret,std_regret,mean_regret_raw,std_regret_raw\n";
  mse << "t,mse_round,mse_running\n";

  std::map<int, std::vector<const RoundRecord*>> by_round;
  for (const auto& r : records) by_round[r.t].push_back(&r);
  double running = 0.0;
  std::size_t seen = 0;
  for (const auto& [t, rows] : by_round) {
    std::vector<double> reg, reg_raw;
    double round_se = 0.0;
    for (const auto* r : rows) {
      reg.push_back(r->regret);
      reg_raw.push_back(r->regret_raw);
      round_se += r->squared_error;
    }
    running += round_se;
    seen += rows.size();
    const auto a = population(reg);
    const auto b = population(reg_raw);
    regret << t << ',' << fmt(a.mean) << ',' << fmt(a.stddev) << ',' << fmt(b.mean) << ','
           << fmt(b.stddev) << '\n';
    mse << t << ',' << fmt(round_se / static_cast<double>(rows.size())) << ','
        << fmt(running / static_cast<double>(seen)) << '\n';
  }
}

}  // namespace pofmkl
