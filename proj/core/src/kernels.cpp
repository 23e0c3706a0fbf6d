#include "pofmkl/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "pofmkl/error.hpp"
#include "pofmkl/rng.hpp"

namespace pofmkl {

// Neumaier-compensated, so |z(x)|^2 stays within a few ulps of 1 even for
// large D.
double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = a[i] * b[i];
    const double t = s + p;
    c += std::abs(s) >= std::abs(p) ? (s - t) + p : (p - t) + s;
    s = t;
  }
  return s + c;
}

double KernelSpec::evaluate(std::span<const double> x,
                            std::span<const double> x_prime) const {
  if (x.size() != x_prime.size()) {
    throw Error(ErrorKind::Shape, "kernel evaluate: dimension mismatch");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - x_prime[i];
    sq += diff * diff;
  }
  return std::exp(-sq / (2.0 * bandwidth * bandwidth));
}

GridRule GridRule::log_uniform(double lo, double hi) {
  GridRule r;
  r.kind = Kind::LogUniform;
  r.lo_exponent = lo;
  r.hi_exponent = hi;
  return r;
}

GridRule GridRule::constant(double sigma) {
  GridRule r;
  r.kind = Kind::Constant;
  r.sigma = sigma;
  return r;
}

GridRule GridRule::explicit_list(std::vector<double> sigmas) {
  GridRule r;
  r.kind = Kind::Explicit;
  r.sigmas = std::move(sigmas);
  return r;
}

std::vector<KernelSpec> build_dictionary(int n_kernels, const GridRule& rule) {
  if (n_kernels < 1) {
    throw Error(ErrorKind::Config, "kernels.N", "number of kernels must be >= 1");
  }
  std::vector<KernelSpec> out;
  out.reserve(static_cast<std::size_t>(n_kernels));
  for (int i = 1; i <= n_kernels; ++i) {
    double sigma = 0.0;
    switch (rule.kind) {
      case GridRule::Kind::LogUniform: {
        if (n_kernels == 1) {
          sigma = std::pow(10.0, 0.5 * (rule.lo_exponent + rule.hi_exponent));
        } else {
          // Single division so integer endpoints give the exact rational
          // exponent: (4i - 104) / 50 == (2i - 52) / 25 for the default grid.
          const double steps = static_cast<double>(n_kernels - 1);
          const double exponent =
              (rule.lo_exponent * steps +
               (rule.hi_exponent - rule.lo_exponent) * static_cast<double>(i - 1)) /
              steps;
          sigma = std::pow(10.0, exponent);
        }
        break;
      }
      case GridRule::Kind::Constant:
        sigma = rule.sigma;
        break;
      case GridRule::Kind::Explicit:
        if (rule.sigmas.size() != static_cast<std::size_t>(n_kernels)) {
          throw Error(ErrorKind::Config, "kernels.sigmas",
                      "explicit bandwidth list length must equal kernels.N");
        }
        sigma = rule.sigmas[static_cast<std::size_t>(i - 1)];
        break;
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw Error(ErrorKind::Config, "kernels.grid", "kernel bandwidth must be positive");
    }
    out.push_back(KernelSpec{i, KernelFamily::GaussianRbf, sigma});
  }
  return out;
}

RandomFeatureMap::RandomFeatureMap(KernelSpec kernel, int d, int D,
                                   std::uint64_t seed_id, std::vector<double> rho)
    : kernel_(kernel), d_(d), D_(D), seed_id_(seed_id), rho_(std::move(rho)) {}

RandomFeatureMap RandomFeatureMap::sample(const KernelSpec& kernel, int d, int D,
                                          std::uint64_t seed_id) {
  if (d < 1 || D < 1) {
    throw Error(ErrorKind::Config, "random features need d >= 1 and D >= 1");
  }
  if (kernel.family != KernelFamily::GaussianRbf) {
    throw Error(ErrorKind::UnsupportedKernel, "no spectral sampler for kernel family");
  }
  if (!(kernel.bandwidth > 0.0)) {
    throw Error(ErrorKind::Config, "kernel bandwidth must be positive");
  }
  // Fourier transform of exp(-|u|^2/(2 sigma^2)) is N(0, sigma^-2 I).
  CounterRng rng(StreamKey::derive(seed_id, static_cast<std::uint64_t>(kernel.index),
                                   StreamPurpose::SpectralSamples));
  const double scale = 1.0 / kernel.bandwidth;
  std::vector<double> rho(static_cast<std::size_t>(d) * D);
  for (double& r : rho) r = rng.normal() * scale;
  return RandomFeatureMap(kernel, d, D, seed_id, std::move(rho));
}

void RandomFeatureMap::map_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != static_cast<std::size_t>(d_)) {
    throw Error(ErrorKind::Shape, "feature map: input has dimension " +
                                      std::to_string(x.size()) + ", expected " +
                                      std::to_string(d_));
  }
  if (out.size() != feature_dim()) {
    throw Error(ErrorKind::Shape, "feature map: output buffer has wrong length");
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(D_));
  for (int j = 0; j < D_; ++j) {
    const double phase = dot(frequency(j), x);
    out[static_cast<std::size_t>(j)] = norm * std::sin(phase);
    out[static_cast<std::size_t>(j + D_)] = norm * std::cos(phase);
  }
}

FeatureVector RandomFeatureMap::map(std::span<const double> x) const {
  FeatureVector z(feature_dim());
  map_into(x, z);
  return z;
}

void RandomFeatureMap::write_csv(std::ostream& out) const {
  char buf[32];
  for (int j = 0; j < D_; ++j) {
    const auto row = frequency(j);
    for (int c = 0; c < d_; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", row[static_cast<std::size_t>(c)]);
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'M', 'K', 'L', 'R', 'F', 'M', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "binary dumps assume a little-endian host");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) {
    throw Error(ErrorKind::Parse, "feature map dump truncated");
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void RandomFeatureMap::write_binary(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  put_le<std::int32_t>(out, kernel_.index);
  put_le<std::int32_t>(out, d_);
  put_le<std::int32_t>(out, D_);
  put_le<std::uint64_t>(out, seed_id_);
  put_le<double>(out, kernel_.bandwidth);
  for (double r : rho_) put_le<double>(out, r);
}

RandomFeatureMap RandomFeatureMap::read_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::Parse, "not a feature map dump");
  }
  KernelSpec k;
  k.index = get_le<std::int32_t>(in);
  const int d = get_le<std::int32_t>(in);
  const int D = get_le<std::int32_t>(in);
  const auto seed = get_le<std::uint64_t>(in);
  k.bandwidth = get_le<double>(in);
  if (d < 1 || D < 1) throw Error(ErrorKind::Parse, "feature map dump has bad shape");
  std::vector<double> rho(static_cast<std::size_t>(d) * D);
  for (double& r : rho) r = get_le<double>(in);
  return RandomFeatureMap(k, d, D, seed, std::move(rho));
}

std::vector<RandomFeatureMap> sample_dictionary(const std::vector<KernelSpec>& kernels,
                                                int d, int D, std::uint64_t seed_id) {
  std::vector<RandomFeatureMap> maps;
  maps.reserve(kernels.size());
  for (const auto& k : kernels) maps.push_back(RandomFeatureMap::sample(k, d, D, seed_id));
  return maps;
}

}  // namespace pofmkl
