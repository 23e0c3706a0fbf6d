#pragma once

#include <cstddef>
#include <span>

namespace pofmkl {

/// Recursive pairwise sum. The split points depend only on the length, so the
/// result is reproducible for a fixed input order.
inline double pairwise_sum(std::span<const double> v) noexcept {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace pofmkl
