#pragma once

#include <array>
#include <cstdint>

#include "favscan/common.hpp"

namespace favscan {

using ByteHistogram = std::array<std::uint64_t, 256>;

// 256-bin chi-squared statistic against the byte-uniform model with expected
// count m/256 per bin. Low values mean near-uniform (ciphertext-like) data.
//
// Every caller that maintains counts incrementally must still score through
// this function so the floating-point summation order is identical to a
// from-scratch computation.
inline double chi2_from_counts(const ByteHistogram& counts, std::size_t m) {
  if (m == 0) throw ArgumentError("chi-squared of empty window");
  const double expected = static_cast<double>(m) / 256.0;
  double chi = 0.0;
  for (int b = 0; b < 256; ++b) {
    const double d = static_cast<double>(counts[b]) - expected;
    chi += d * d / expected;
  }
  return chi;
}

inline ByteHistogram histogram_of(ByteSpan data) {
  ByteHistogram counts{};
  for (std::uint8_t b : data) ++counts[b];
  return counts;
}

inline double chi_squared(ByteSpan window) {
  if (window.empty()) throw ArgumentError("chi-squared of empty window");
  return chi2_from_counts(histogram_of(window), window.size());
}

}  // namespace favscan
