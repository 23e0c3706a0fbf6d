#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>

namespace pofmkl {

/// Purpose tags keep streams for different uses statistically independent
/// even when they share a global seed and an index.
enum class StreamPurpose : std::uint32_t {
  SpectralSamples = 1,
  SubsetSelection = 2,
  Partition = 3,
  SynthInputs = 4,
  SynthGenerator = 5,
  SynthNoise = 6,
};

/// 64-bit key derived from (global seed, index, purpose).
struct StreamKey {
  std::uint64_t value = 0;

  static StreamKey derive(std::uint64_t seed, std::uint64_t index,
                          StreamPurpose purpose) noexcept;
};

/// Philox4x32-10 block function. Exposed for tests against the published
/// known-answer vectors.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based random stream. A stream is fully determined by its key and
/// substream id, so any draw can be regenerated without replaying others.
/// The distributions are implemented here rather than via <random> so the
/// output is identical across standard libraries.
class CounterRng {
 public:
  explicit CounterRng(StreamKey key, std::uint64_t substream = 0) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; caches the second variate.
  double normal() noexcept;
  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t substream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  std::optional<double> spare_normal_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace pofmkl
