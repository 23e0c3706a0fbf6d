#include "pofmkl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "pofmkl/error.hpp"

namespace pofmkl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string strip_comment(std::string_view line) {
  const auto pos = line.find_first_of("#;");
  return std::string(trim(line.substr(0, pos)));
}

}  // namespace

ConfigFile parse_config_text(std::string_view text, const std::string& source) {
  ConfigFile out;
  out.source = source;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string line = strip_comment(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorKind::Config, source + ":" + std::to_string(line_no) +
                                           ": unterminated section header");
      }
      section = std::string(trim(std::string_view(line).substr(1, line.size() - 2)));
      if (section.empty()) {
        throw Error(ErrorKind::Config, source + ":" + std::to_string(line_no) + ": empty section");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, source + ":" + std::to_string(line_no) +
                                         ": expected 'key = value'");
    }
    const std::string key = std::string(trim(std::string_view(line).substr(0, eq)));
    const std::string value = std::string(trim(std::string_view(line).substr(eq + 1)));
    if (key.empty()) {
      throw Error(ErrorKind::Config, source + ":" + std::to_string(line_no) + ": empty key");
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (!out.values.emplace(full, value).second) {
      throw Error(ErrorKind::Config, full, source + ":" + std::to_string(line_no) +
                                               ": duplicate key '" + full + "'");
    }
    if (end == text.size()) break;
  }
  return out;
}

ConfigFile load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, path, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(ConfigFile& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorKind::Config, std::string(assignment),
                "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(trim(assignment.substr(0, eq)));
  if (key.empty()) throw Error(ErrorKind::Config, "override has an empty key");
  cfg.values[key] = std::string(trim(assignment.substr(eq + 1)));
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigFile& f) : f_(f) {}

  const std::string* find(const std::string& key) {
    used_.insert(key);
    const auto it = f_.values.find(key);
    return it == f_.values.end() ? nullptr : &it->second;
  }

  [[noreturn]] void bad(const std::string& key, const std::string& why) const {
    throw Error(ErrorKind::Config, key, f_.source + ": " + key + ": " + why);
  }

  void integer(const std::string& key, int& out) {
    if (const auto* v = find(key)) {
      long long x;
      const auto r = std::from_chars(v->data(), v->data() + v->size(), x);
      if (r.ec != std::errc() || r.ptr != v->data() + v->size() || x < INT32_MIN || x > INT32_MAX) {
        bad(key, "expected an integer, got '" + *v + "'");
      }
      out = static_cast<int>(x);
    }
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (const auto* v = find(key)) {
      const auto r = std::from_chars(v->data(), v->data() + v->size(), out);
      if (r.ec != std::errc() || r.ptr != v->data() + v->size()) {
        bad(key, "expected a non-negative integer, got '" + *v + "'");
      }
    }
  }

  static bool to_real(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
  }

  void real(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!to_real(*v, out)) bad(key, "expected a number, got '" + *v + "'");
    }
  }

  /// "auto" or empty leaves the optional unset.
  void optional_real(const std::string& key, std::optional<double>& out) {
    if (const auto* v = find(key)) {
      if (*v == "auto" || *v == "none" || v->empty()) {
        out.reset();
        return;
      }
      double x;
      if (!to_real(*v, x)) bad(key, "expected a number or 'auto', got '" + *v + "'");
      out = x;
    }
  }

  void real_list(const std::string& key, std::vector<double>& out, bool allow_auto) {
    if (const auto* v = find(key)) {
      if (allow_auto && (*v == "auto" || v->empty())) {
        out.clear();
        return;
      }
      out.clear();
      std::string_view rest = *v;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = rest.substr(0, comma);
        double x;
        if (!to_real(item, x)) bad(key, "expected a comma-separated list of numbers");
        out.push_back(x);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    }
  }

  void int_list(const std::string& key, std::vector<int>& out) {
    std::vector<double> tmp;
    if (!f_.values.count(key)) {
      used_.insert(key);
      return;
    }
    real_list(key, tmp, false);
    out.clear();
    for (double x : tmp) {
      if (x != std::floor(x)) bad(key, "expected integers");
      out.push_back(static_cast<int>(x));
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") out = true;
      else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") out = false;
      else bad(key, "expected true or false, got '" + *v + "'");
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) out = *v;
  }

  template <typename E>
  void choice(const std::string& key, E& out,
              std::initializer_list<std::pair<const char*, E>> options) {
    if (const auto* v = find(key)) {
      for (const auto& [name, value] : options) {
        if (*v == name) {
          out = value;
          return;
        }
      }
      std::string names;
      for (const auto& [name, value] : options) names += std::string(names.empty() ? "" : ", ") + name;
      bad(key, "unknown value '" + *v + "' (expected one of: " + names + ")");
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : f_.values) {
      if (!used_.count(key)) bad(key, "unknown key");
    }
  }

 private:
  const ConfigFile& f_;
  std::set<std::string> used_;
};

}  // namespace

ExperimentConfig to_experiment_config(const ConfigFile& file) {
  Reader r(file);
  int version = kConfigFormatVersion;
  r.integer("format_version", version);
  if (version != kConfigFormatVersion) {
    r.bad("format_version", "unsupported version " + std::to_string(version));
  }

  ExperimentConfig c;
  if (const auto* v = r.find("experiment.algorithm")) {
    const auto a = parse_algorithm(*v);
    if (!a) r.bad("experiment.algorithm", "unknown algorithm '" + *v + "'");
    c.algorithm = *a;
  }
  r.unsigned64("experiment.seed", c.seed);
  r.integer("experiment.seeds", c.n_seeds);
  r.integer("experiment.K", c.K);
  r.integer("experiment.T", c.T);

  r.integer("kernels.N", c.N);
  r.integer("kernels.D", c.D);
  r.choice("kernels.grid", c.grid.kind,
           {{"log_uniform", GridRule::Kind::LogUniform},
            {"constant", GridRule::Kind::Constant},
            {"explicit", GridRule::Kind::Explicit}});
  r.real("kernels.lo_exponent", c.grid.lo_exponent);
  r.real("kernels.hi_exponent", c.grid.hi_exponent);
  r.real("kernels.sigma", c.grid.sigma);
  r.real_list("kernels.sigmas", c.grid.sigmas, true);
  r.real("kernels.ofskl_sigma", c.ofskl_sigma);

  r.integer("client.M", c.M);
  r.real_list("client.eta_k", c.eta_k, true);
  r.real_list("client.xi_k", c.xi_k, false);

  r.optional_real("server.eta", c.eta);
  r.optional_real("server.theta_norm_cap", c.theta_norm_cap);

  r.real("losses.lambda", c.loss.lambda);
  r.boolean("losses.clip_for_weights", c.loss.clip_for_weights);

  if (const auto* v = r.find("budget.uplink_cap")) {
    if (*v == "none" || v->empty()) {
      c.uplink_cap.reset();
    } else {
      std::uint64_t cap = 0;
      const auto res = std::from_chars(v->data(), v->data() + v->size(), cap);
      if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
        r.bad("budget.uplink_cap", "expected a non-negative integer or 'none'");
      }
      c.uplink_cap = static_cast<std::size_t>(cap);
    }
  }

  auto& d = c.data;
  r.choice("data.source", d.source, {{"synth", DataSource::Synth}, {"csv", DataSource::Csv}});
  r.unsigned64("data.seed", d.seed);
  r.choice("data.synth.kind", d.synth.kind,
           {{"heterogeneous", SynthKind::Heterogeneous}, {"homogeneous", SynthKind::Homogeneous}});
  r.integer("data.synth.d", d.synth.d);
  r.real("data.synth.noise", d.synth.noise);
  r.int_list("data.synth.generators", d.synth.generator_kernels);
  r.integer("data.synth.terms", d.synth.generator_terms);
  r.boolean("data.synth.separate_regions", d.synth.separate_regions);
  r.real("data.synth.region_radius", d.synth.region_radius);
  r.real("data.synth.region_spread", d.synth.region_spread);
  r.string("data.csv.path", d.csv_path);
  std::string delim;
  r.string("data.csv.delimiter", delim);
  if (!delim.empty()) {
    if (delim == "comma") d.csv.delimiter = ',';
    else if (delim == "tab") d.csv.delimiter = '\t';
    else if (delim == "semicolon") d.csv.delimiter = ';';
    else if (delim.size() == 1) d.csv.delimiter = delim.front();
    else r.bad("data.csv.delimiter", "expected comma, tab, semicolon or a single character");
  }
  r.string("data.csv.label", d.csv.label_column);
  std::string features;
  r.string("data.csv.features", features);
  if (!features.empty()) {
    d.csv.feature_columns.clear();
    std::string_view rest = features;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (!item.empty()) d.csv.feature_columns.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  std::string site;
  r.string("data.csv.site", site);
  if (!site.empty()) d.csv.site_column = site;
  r.choice("partition.mode", d.partition.mode,
           {{"iid", PartitionMode::Iid}, {"site_skewed", PartitionMode::SiteSkewed}});
  r.integer("partition.home", d.partition.home_count);
  r.integer("partition.away", d.partition.away_count);

  r.boolean("output.kernel_losses", c.record_kernel_losses);

  r.reject_unknown();
  if (d.source == DataSource::Csv && d.csv_path.empty()) {
    r.bad("data.csv.path", "csv source needs a path");
  }
  if (d.source == DataSource::Csv && d.csv.label_column.empty()) {
    r.bad("data.csv.label", "csv source needs a label column");
  }
  validate(c);
  return c;
}

namespace {

std::string real_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string delimiter_name(char c) {
  switch (c) {
    case ',': return "comma";
    case '\t': return "tab";
    case ';': return "semicolon";
    default: return std::string(1, c);
  }
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += real_text(v[i]);
  }
  return out;
}

}  // namespace

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "format_version = " << kConfigFormatVersion << "\n\n";
  o << "[experiment]\n"
    << "algorithm = " << to_string(c.algorithm) << "\n"
    << "seed = " << c.seed << "\n"
    << "seeds = " << c.n_seeds << "\n"
    << "K = " << c.K << "\n"
    << "T = " << c.T << "\n\n";
  const char* grid = c.grid.kind == GridRule::Kind::LogUniform ? "log_uniform"
                     : c.grid.kind == GridRule::Kind::Constant ? "constant"
                                                               : "explicit";
  o << "[kernels]\n"
    << "N = " << c.N << "\n"
    << "D = " << c.D << "\n"
    << "grid = " << grid << "\n"
    << "lo_exponent = " << real_text(c.grid.lo_exponent) << "\n"
    << "hi_exponent = " << real_text(c.grid.hi_exponent) << "\n"
    << "sigma = " << real_text(c.grid.sigma) << "\n"
    << "sigmas = " << list_text(c.grid.sigmas) << "\n"
    << "ofskl_sigma = " << real_text(c.ofskl_sigma) << "\n\n";
  o << "[client]\n"
    << "M = " << c.M << "\n"
    << "eta_k = " << (c.eta_k.empty() ? std::string("auto") : list_text(c.eta_k)) << "\n"
    << "xi_k = " << list_text(c.xi_k) << "\n\n";
  o << "[server]\n"
    << "eta = " << (c.eta ? real_text(*c.eta) : std::string("auto")) << "\n"
    << "theta_norm_cap = " << (c.theta_norm_cap ? real_text(*c.theta_norm_cap) : std::string("none"))
    << "\n\n";
  o << "[losses]\n"
    << "lambda = " << real_text(c.loss.lambda) << "\n"
    << "clip_for_weights = " << (c.loss.clip_for_weights ? "true" : "false") << "\n\n";
  o << "[budget]\n"
    << "uplink_cap = " << (c.uplink_cap ? std::to_string(*c.uplink_cap) : std::string("none"))
    << "\n\n";
  const auto& d = c.data;
  o << "[data]\n"
    << "source = " << (d.source == DataSource::Synth ? "synth" : "csv") << "\n"
    << "seed = " << d.seed << "\n\n";
  std::string gens;
  for (std::size_t i = 0; i < d.synth.generator_kernels.size(); ++i) {
    if (i) gens += ", ";
    gens += std::to_string(d.synth.generator_kernels[i]);
  }
  o << "[data.synth]\n"
    << "kind = " << (d.synth.kind == SynthKind::Heterogeneous ? "heterogeneous" : "homogeneous")
    << "\n"
    << "d = " << d.synth.d << "\n"
    << "noise = " << real_text(d.synth.noise) << "\n"
    << "generators = " << gens << "\n"
    << "terms = " << d.synth.generator_terms << "\n"
    << "separate_regions = " << (d.synth.separate_regions ? "true" : "false") << "\n"
    << "region_radius = " << real_text(d.synth.region_radius) << "\n"
    << "region_spread = " << real_text(d.synth.region_spread) << "\n\n";
  std::string feats;
  for (std::size_t i = 0; i < d.csv.feature_columns.size(); ++i) {
    if (i) feats += ", ";
    feats += d.csv.feature_columns[i];
  }
  o << "[data.csv]\n"
    << "path = " << d.csv_path << "\n"
    << "delimiter = " << delimiter_name(d.csv.delimiter) << "\n"
    << "label = " << d.csv.label_column << "\n"
    << "features = " << feats << "\n"
    << "site = " << d.csv.site_column.value_or("") << "\n\n";
  o << "[partition]\n"
    << "mode = " << (d.partition.mode == PartitionMode::Iid ? "iid" : "site_skewed") << "\n"
    << "home = " << d.partition.home_count << "\n"
    << "away = " << d.partition.away_count << "\n\n";
  o << "[output]\n"
    << "kernel_losses = " << (c.record_kernel_losses ? "true" : "false") << "\n";
  return o.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pofmkl
