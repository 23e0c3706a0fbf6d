#include "pofmkl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>

#include "pofmkl/error.hpp"
#include "pofmkl/rng.hpp"

namespace pofmkl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  // Header.
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto f : split(line, schema.delimiter)) header.emplace_back(f);
    break;
  }
  if (header.empty()) {
    throw Error(ErrorKind::Schema, source + ": missing header row");
  }
  auto find_column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorKind::Schema, name, source + ": no column named '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  if (schema.label_column.empty()) {
    throw Error(ErrorKind::Schema, "data.csv.label", source + ": label column not specified");
  }
  const std::size_t label_col = find_column(schema.label_column);
  std::optional<std::size_t> site_col;
  if (schema.site_column) site_col = find_column(*schema.site_column);

  std::vector<std::size_t> feature_cols;
  Dataset ds;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == label_col || (site_col && c == *site_col)) continue;
      feature_cols.push_back(c);
      ds.feature_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      feature_cols.push_back(find_column(name));
      ds.feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) throw Error(ErrorKind::Schema, source + ": no feature columns");
  ds.d = static_cast<int>(feature_cols.size());

  std::map<std::string, int, std::less<>> site_names;
  std::vector<std::string> raw_sites;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields, found " +
                                        std::to_string(fields.size()));
    }
    for (std::size_t c : feature_cols) {
      double v;
      if (!parse_double(fields[c], v)) {
        throw Error(ErrorKind::Parse, source + ":" + std::to_string(line_no) +
                                          ": non-numeric value '" + std::string(fields[c]) +
                                          "' in column '" + header[c] + "'");
      }
      ds.features.push_back(v);
    }
    double y;
    if (!parse_double(fields[label_col], y)) {
      throw Error(ErrorKind::Parse, source + ":" + std::to_string(line_no) +
                                        ": non-numeric label '" +
                                        std::string(fields[label_col]) + "'");
    }
    ds.labels.push_back(y);
    if (site_col) {
      raw_sites.emplace_back(fields[*site_col]);
      site_names.emplace(raw_sites.back(), 0);
    }
  }
  if (site_col) {
    // Site ids follow the sorted order of the distinct site values.
    int next = 0;
    for (auto& [name, id] : site_names) id = next++;
    ds.site_ids.reserve(raw_sites.size());
    for (const auto& s : raw_sites) ds.site_ids.push_back(site_names.find(s)->second);
  }
  return ds;
}

Dataset ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, path, "cannot open data file '" + path + "'");
  return parse_csv(in, schema, path);
}

Dataset normalize(const Dataset& ds) {
  if (ds.rows() == 0) throw Error(ErrorKind::Data, "cannot normalize an empty dataset");
  const std::size_t n = ds.rows();
  const auto d = static_cast<std::size_t>(ds.d);
  Dataset out = ds;
  Scaling sc;
  sc.feature_min.assign(d, 0.0);
  sc.feature_max.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double lo = ds.features[c], hi = ds.features[c];
    for (std::size_t r = 1; r < n; ++r) {
      lo = std::min(lo, ds.features[r * d + c]);
      hi = std::max(hi, ds.features[r * d + c]);
    }
    sc.feature_min[c] = lo;
    sc.feature_max[c] = hi;
    const double range = hi - lo;
    for (std::size_t r = 0; r < n; ++r) {
      double& v = out.features[r * d + c];
      v = range > 0.0 ? (v - lo) / range : 0.0;
    }
  }
  double max_norm = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = out.row(r);
    max_norm = std::max(max_norm, std::sqrt(dot(row, row)));
  }
  if (max_norm > 0.0) {
    for (double& v : out.features) v /= max_norm;
    sc.row_norm_divisor = max_norm;
  }
  const auto [lo_it, hi_it] = std::minmax_element(ds.labels.begin(), ds.labels.end());
  sc.label_min = *lo_it;
  sc.label_max = *hi_it;
  const double label_range = sc.label_max - sc.label_min;
  for (double& y : out.labels) y = label_range > 0.0 ? (y - sc.label_min) / label_range : 0.5;
  if (!(label_range > 0.0)) {
    // Keeps denormalize_label(0.5) at the constant value.
    sc.label_min = *lo_it - 0.5;
    sc.label_max = *lo_it + 0.5;
  }
  out.scaling = std::move(sc);
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed,
                                          std::uint64_t stream_index) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  CounterRng rng(StreamKey::derive(seed, stream_index, StreamPurpose::Partition));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

namespace {

Sample sample_at(const Dataset& ds, std::size_t r) {
  const auto row = ds.row(r);
  return Sample{std::vector<double>(row.begin(), row.end()), ds.labels[r]};
}

// Stream indices for the partition RNG; the values only need to differ.
constexpr std::uint64_t kGlobalShuffle = 0;
constexpr std::uint64_t kSitePoolBase = 1'000;
constexpr std::uint64_t kClientOrderBase = 1'000'000;

}  // namespace

Partition partition(const Dataset& ds, const PartitionPlan& plan, std::uint64_t seed) {
  if (plan.K < 1 || plan.T < 0) {
    throw Error(ErrorKind::Config, "partition", "partition needs K >= 1 and T >= 0");
  }
  const auto K = static_cast<std::size_t>(plan.K);
  const auto T = static_cast<std::size_t>(plan.T);
  Partition out;
  out.streams.resize(K);
  out.sample_indices.resize(K);

  if (plan.mode == PartitionMode::Iid) {
    if (K * T > ds.rows()) {
      throw Error(ErrorKind::Capacity, "experiment.K*experiment.T",
                  "i.i.d. partition needs K*T = " + std::to_string(K * T) +
                      " samples, dataset has " + std::to_string(ds.rows()));
    }
    const auto order = shuffled_indices(ds.rows(), seed, kGlobalShuffle);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t r = order[k * T + t];
        out.sample_indices[k].push_back(r);
        out.streams[k].push_back(sample_at(ds, r));
      }
    }
    return out;
  }

  if (ds.site_ids.size() != ds.rows()) {
    throw Error(ErrorKind::Schema, "data.csv.site", "site-skewed partition needs a site column");
  }
  int n_sites = 0;
  for (int s : ds.site_ids) n_sites = std::max(n_sites, s + 1);
  std::vector<std::vector<std::size_t>> pools(static_cast<std::size_t>(n_sites));
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    pools[static_cast<std::size_t>(ds.site_ids[r])].push_back(r);
  }
  const long long per_client =
      plan.home_count + static_cast<long long>(plan.away_count) * (n_sites - 1);
  if (plan.home_count < 0 || plan.away_count < 0 || per_client != plan.T) {
    throw Error(ErrorKind::Config, "partition.home",
                "site-skewed partition needs home + away*(sites-1) == T (" +
                    std::to_string(per_client) + " != " + std::to_string(plan.T) + ")");
  }
  for (int s = 0; s < n_sites; ++s) {
    const auto home_clients = static_cast<std::size_t>(
        plan.K / n_sites + (s < plan.K % n_sites ? 1 : 0));
    const std::size_t demand = home_clients * static_cast<std::size_t>(plan.home_count) +
                               (K - home_clients) * static_cast<std::size_t>(plan.away_count);
    auto& pool = pools[static_cast<std::size_t>(s)];
    if (demand > pool.size()) {
      throw Error(ErrorKind::Capacity, "site " + std::to_string(s),
                  "site " + std::to_string(s) + " has " + std::to_string(pool.size()) +
                      " samples, partition needs " + std::to_string(demand));
    }
    const auto order = shuffled_indices(pool.size(), seed, kSitePoolBase + static_cast<std::uint64_t>(s));
    std::vector<std::size_t> shuffled(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) shuffled[i] = pool[order[i]];
    pool = std::move(shuffled);
  }
  std::vector<std::size_t> cursor(static_cast<std::size_t>(n_sites), 0);
  for (std::size_t k = 0; k < K; ++k) {
    const int home = static_cast<int>(k % static_cast<std::size_t>(n_sites));
    out.home_site.push_back(home);
    std::vector<std::size_t> rows;
    for (int s = 0; s < n_sites; ++s) {
      const int count = s == home ? plan.home_count : plan.away_count;
      auto& pool = pools[static_cast<std::size_t>(s)];
      auto& cur = cursor[static_cast<std::size_t>(s)];
      for (int c = 0; c < count; ++c) rows.push_back(pool[cur++]);
    }
    const auto order = shuffled_indices(rows.size(), seed, kClientOrderBase + k);
    for (std::size_t i : order) {
      out.sample_indices[k].push_back(rows[i]);
      out.streams[k].push_back(sample_at(ds, rows[i]));
    }
  }
  return out;
}

namespace {

struct Generator {
  std::vector<double> omega;  // terms x d
  std::vector<double> phase;
  std::vector<double> amplitude;
  int d = 0;

  double operator()(std::span<const double> x) const {
    double f = 0.0;
    for (std::size_t j = 0; j < phase.size(); ++j) {
      const std::span<const double> w(omega.data() + j * static_cast<std::size_t>(d),
                                      static_cast<std::size_t>(d));
      f += amplitude[j] * std::cos(dot(w, x) + phase[j]);
    }
    return f;
  }
};

Generator make_generator(double sigma, int d, int terms, std::uint64_t seed, int group) {
  CounterRng rng(StreamKey::derive(seed, static_cast<std::uint64_t>(group),
                                   StreamPurpose::SynthGenerator));
  Generator g;
  g.d = d;
  g.omega.resize(static_cast<std::size_t>(terms) * d);
  for (double& w : g.omega) w = rng.normal() / sigma;
  g.phase.resize(static_cast<std::size_t>(terms));
  for (double& b : g.phase) b = 2.0 * std::numbers::pi * rng.uniform();
  g.amplitude.resize(static_cast<std::size_t>(terms));
  const double scale = 1.0 / std::sqrt(static_cast<double>(terms));
  for (double& a : g.amplitude) a = rng.normal() * scale;
  return g;
}

// Uniform point in the d-ball of the given radius.
std::vector<double> ball_point(CounterRng& rng, int d, double radius) {
  std::vector<double> v(static_cast<std::size_t>(d));
  double sq = 0.0;
  for (double& c : v) {
    c = rng.normal();
    sq += c * c;
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(sq);
  for (double& c : v) c *= r;
  return v;
}

std::vector<double> region_center(int group, int n_groups, int d, double spread) {
  std::vector<double> c(static_cast<std::size_t>(d), 0.0);
  if (n_groups <= 1) return c;
  if (d == 1) {
    c[0] = -spread + 2.0 * spread * group / (n_groups - 1);
  } else {
    const double angle = 2.0 * std::numbers::pi * group / n_groups;
    c[0] = spread * std::cos(angle);
    c[1] = spread * std::sin(angle);
  }
  return c;
}

}  // namespace

SynthData synth_stream(const SynthSpec& spec) {
  if (spec.d < 1 || spec.K < 1 || spec.T < 0 || spec.generator_terms < 1) {
    throw Error(ErrorKind::Config, "data.synth", "synthetic stream needs d, K, terms >= 1");
  }
  if (spec.generator_kernels.empty()) {
    throw Error(ErrorKind::Config, "data.synth.generators", "no generator kernels given");
  }
  if (!(spec.noise >= 0.0)) {
    throw Error(ErrorKind::Config, "data.synth.noise", "noise must be >= 0");
  }
  const auto dictionary = build_dictionary(spec.n_dictionary, spec.grid);
  const int n_groups = spec.kind == SynthKind::Homogeneous
                           ? 1
                           : static_cast<int>(spec.generator_kernels.size());
  for (int g = 0; g < n_groups; ++g) {
    const int idx = spec.generator_kernels[static_cast<std::size_t>(g)];
    if (idx < 1 || idx > spec.n_dictionary) {
      throw Error(ErrorKind::Config, "data.synth.generators",
                  "generator kernel index " + std::to_string(idx) + " outside dictionary");
    }
  }
  const bool regions = spec.kind == SynthKind::Heterogeneous && spec.separate_regions;
  if (regions && !(spec.region_radius > 0.0 && spec.region_spread >= 0.0 &&
                   spec.region_radius + spec.region_spread <= 1.0)) {
    throw Error(ErrorKind::Config, "data.synth.region_radius",
                "regions must satisfy radius > 0 and radius + spread <= 1");
  }

  SynthData out;
  out.streams.resize(static_cast<std::size_t>(spec.K));
  std::vector<int> group_of(static_cast<std::size_t>(spec.K));
  for (int k = 0; k < spec.K; ++k) {
    const int g = k % n_groups;
    group_of[static_cast<std::size_t>(k)] = g;
    const int idx = spec.generator_kernels[static_cast<std::size_t>(g)];
    out.truth.client_kernel.push_back(idx);
    out.truth.client_bandwidth.push_back(dictionary[static_cast<std::size_t>(idx - 1)].bandwidth);

    CounterRng rng(StreamKey::derive(spec.seed, static_cast<std::uint64_t>(k),
                                     StreamPurpose::SynthInputs));
    const auto center = region_center(g, regions ? n_groups : 1, spec.d, spec.region_spread);
    auto& stream = out.streams[static_cast<std::size_t>(k)];
    stream.reserve(static_cast<std::size_t>(spec.T));
    for (int t = 0; t < spec.T; ++t) {
      auto x = ball_point(rng, spec.d, regions ? spec.region_radius : 1.0);
      for (int c = 0; c < spec.d; ++c) x[static_cast<std::size_t>(c)] += center[static_cast<std::size_t>(c)];
      stream.push_back(Sample{std::move(x), 0.0});
    }
  }

  for (int g = 0; g < n_groups; ++g) {
    const int idx = spec.generator_kernels[static_cast<std::size_t>(g)];
    const auto f = make_generator(dictionary[static_cast<std::size_t>(idx - 1)].bandwidth,
                                  spec.d, spec.generator_terms, spec.seed, g);
    double lo = INFINITY, hi = -INFINITY;
    for (int k = 0; k < spec.K; ++k) {
      if (group_of[static_cast<std::size_t>(k)] != g) continue;
      for (auto& s : out.streams[static_cast<std::size_t>(k)]) {
        s.y = f(s.x);
        lo = std::min(lo, s.y);
        hi = std::max(hi, s.y);
      }
    }
    const double range = hi - lo;
    for (int k = 0; k < spec.K; ++k) {
      if (group_of[static_cast<std::size_t>(k)] != g) continue;
      CounterRng noise(StreamKey::derive(spec.seed, static_cast<std::uint64_t>(k),
                                         StreamPurpose::SynthNoise));
      for (auto& s : out.streams[static_cast<std::size_t>(k)]) {
        s.y = range > 0.0 ? (s.y - lo) / range : 0.5;
        if (spec.noise > 0.0) s.y += spec.noise * noise.normal();
      }
    }
  }
  return out;
}

}  // namespace pofmkl
