#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pofmkl/kernels.hpp"

namespace pofmkl {

struct Sample {
  std::vector<double> x;
  double y = 0.0;
};

using ClientStream = std::vector<Sample>;

/// Constants recorded by `normalize`, enough to map labels back to raw units.
struct Scaling {
  std::vector<double> feature_min;
  std::vector<double> feature_max;
  double row_norm_divisor = 1.0;
  double label_min = 0.0;
  double label_max = 1.0;

  double denormalize_label(double y) const noexcept {
    return label_min + y * (label_max - label_min);
  }
  /// Factor turning a normalized-label MSE into raw units.
  double label_variance_factor() const noexcept {
    const double r = label_max - label_min;
    return r * r;
  }
};

struct Dataset {
  int d = 0;
  std::vector<double> features;  // row-major, rows() x d
  std::vector<double> labels;
  std::vector<int> site_ids;     // empty when the source has no site column
  std::vector<std::string> feature_names;
  std::optional<Scaling> scaling;

  std::size_t rows() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(features).subspan(i * static_cast<std::size_t>(d), d);
  }
};

struct CsvSchema {
  char delimiter = ',';
  std::string label_column;
  std::vector<std::string> feature_columns;  // empty: every other column
  std::optional<std::string> site_column;
};

/// Header row required. Errors carry the 1-based line number.
Dataset ingest_csv(const std::string& path, const CsvSchema& schema);
Dataset parse_csv(std::istream& in, const CsvSchema& schema,
                  const std::string& source_name = "<stream>");

/// Per-feature min-max to [0,1], then every row divided by the largest row
/// norm; labels min-max to [0,1]. Constant feature columns become 0 and
/// constant labels become 0.5.
Dataset normalize(const Dataset& ds);

enum class PartitionMode { Iid, SiteSkewed };

struct PartitionPlan {
  PartitionMode mode = PartitionMode::Iid;
  int K = 1;
  int T = 1;
  int home_count = 350;  // SiteSkewed: samples from the client's home site
  int away_count = 50;   // SiteSkewed: samples from each other site
};

struct Partition {
  std::vector<ClientStream> streams;
  std::vector<std::vector<std::size_t>> sample_indices;  // dataset row per stream entry
  std::vector<int> home_site;                            // SiteSkewed only
};

Partition partition(const Dataset& ds, const PartitionPlan& plan, std::uint64_t seed);

enum class SynthKind { Homogeneous, Heterogeneous };

/// Each generator is a random cosine expansion f(x) = sum_j a_j cos(w_j.x + b_j)
/// with w_j drawn from the spectral density of one dictionary kernel, i.e. a
/// draw from (an RF approximation of) that kernel's RKHS. Labels are f
/// rescaled to [0,1] over the generated inputs, plus optional Gaussian noise.
struct SynthSpec {
  SynthKind kind = SynthKind::Heterogeneous;
  int d = 2;
  int K = 8;
  int T = 500;
  double noise = 0.05;
  /// 1-based dictionary indices. Homogeneous uses the first entry; in
  /// heterogeneous mode client k is generated by entry k mod size().
  std::vector<int> generator_kernels{14, 26, 38};
  int generator_terms = 64;
  int n_dictionary = 51;
  GridRule grid = GridRule::log_uniform();
  /// Heterogeneous mode: every generator group draws inputs from its own
  /// region of the unit ball when true, from a shared region when false.
  bool separate_regions = true;
  double region_radius = 0.35;  // radius of each group's input ball
  double region_spread = 0.6;   // distance of region centers from the origin
  std::uint64_t seed = 7;
};

struct SynthTruth {
  std::vector<int> client_kernel;        // 1-based generator index per client
  std::vector<double> client_bandwidth;  // sigma of that kernel
};

struct SynthData {
  std::vector<ClientStream> streams;
  SynthTruth truth;
};

SynthData synth_stream(const SynthSpec& spec);

/// Deterministic Fisher-Yates over [0, n) driven by a counter-based stream.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed,
                                          std::uint64_t stream_index);

}  // namespace pofmkl
