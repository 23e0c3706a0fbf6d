#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pofmkl {

enum class KernelFamily { GaussianRbf };

/// One shift-invariant dictionary kernel. `index` is 1-based.
/// GaussianRbf uses kappa(u) = exp(-|u|^2 / (2 sigma^2)).
struct KernelSpec {
  int index = 1;
  KernelFamily family = KernelFamily::GaussianRbf;
  double bandwidth = 1.0;

  double evaluate(std::span<const double> x, std::span<const double> x_prime) const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// How bandwidths are laid out over the dictionary.
struct GridRule {
  enum class Kind { LogUniform, Constant, Explicit };

  Kind kind = Kind::LogUniform;
  double lo_exponent = -2.0;  // LogUniform: sigma_1 = 10^lo
  double hi_exponent = 2.0;   // LogUniform: sigma_N = 10^hi
  double sigma = 10.0;        // Constant
  std::vector<double> sigmas; // Explicit

  /// 51-kernel default: sigma_i = 10^((2i - 52) / 25).
  static GridRule log_uniform(double lo = -2.0, double hi = 2.0);
  static GridRule constant(double sigma);
  static GridRule explicit_list(std::vector<double> sigmas);
};

std::vector<KernelSpec> build_dictionary(int n_kernels, const GridRule& rule);

using FeatureVector = std::vector<double>;

/// Sampled spectral frequencies for one kernel. Immutable after construction,
/// so a single map can be shared read-only by every client.
class RandomFeatureMap {
 public:
  /// Draws D frequencies in R^d from the kernel's spectral density. The stream
  /// is keyed by (seed_id, kernel.index), so regeneration is bit-identical.
  static RandomFeatureMap sample(const KernelSpec& kernel, int d, int D,
                                 std::uint64_t seed_id);

  /// z(x) = D^{-1/2} [sin(rho_1.x) .. sin(rho_D.x), cos(rho_1.x) .. cos(rho_D.x)]
  FeatureVector map(std::span<const double> x) const;
  void map_into(std::span<const double> x, std::span<double> out) const;

  int input_dim() const noexcept { return d_; }
  int num_frequencies() const noexcept { return D_; }
  std::size_t feature_dim() const noexcept { return 2 * static_cast<std::size_t>(D_); }
  std::uint64_t seed_id() const noexcept { return seed_id_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }

  /// Row-major D x d.
  std::span<const double> frequencies() const noexcept { return rho_; }
  std::span<const double> frequency(int j) const noexcept {
    return std::span<const double>(rho_).subspan(static_cast<std::size_t>(j) * d_, d_);
  }

  /// One row per frequency vector, %.17g, comma separated, no header.
  void write_csv(std::ostream& out) const;
  /// Little-endian layout: magic "PMKLRFM1", int32 kernel index, int32 d,
  /// int32 D, uint64 seed_id, float64 bandwidth, then D*d float64.
  void write_binary(std::ostream& out) const;
  static RandomFeatureMap read_binary(std::istream& in);

  friend bool operator==(const RandomFeatureMap&, const RandomFeatureMap&) = default;

 private:
  RandomFeatureMap(KernelSpec kernel, int d, int D, std::uint64_t seed_id,
                   std::vector<double> rho);

  KernelSpec kernel_;
  int d_ = 0;
  int D_ = 0;
  std::uint64_t seed_id_ = 0;
  std::vector<double> rho_;
};

/// Feature maps for the whole dictionary under one seed.
std::vector<RandomFeatureMap> sample_dictionary(const std::vector<KernelSpec>& kernels,
                                                int d, int D, std::uint64_t seed_id);

double dot(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace pofmkl
