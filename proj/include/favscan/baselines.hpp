#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "favscan/chi2.hpp"
#include "favscan/common.hpp"

namespace favscan::baselines {

inline double shannon_entropy(ByteSpan file) {
  if (file.empty()) return 0.0;
  const ByteHistogram counts = histogram_of(file);
  const double n = static_cast<double>(file.size());
  double h = 0.0;
  for (int b = 0; b < 256; ++b) {
    if (counts[b] == 0) continue;
    const double p = static_cast<double>(counts[b]) / n;
    h -= p * std::log2(p);
  }
  return h;
}

inline double chi2_whole_file(ByteSpan file) { return chi_squared(file); }

// Thresholds tuned on a clean corpus: the most sensitive values that still
// classify every clean file as benign. A file is flagged when its entropy
// exceeds the entropy threshold, or its chi-squared falls below the
// chi-squared threshold.
struct BaselineParams {
  double entropy_threshold = 0.0;
  double chi2_threshold = 0.0;
  std::string tuned_on;
};

inline BaselineParams tune(const std::vector<std::pair<std::string, Bytes>>& clean_corpus,
                           const std::string& corpus_id = {}) {
  if (clean_corpus.empty()) throw ArgumentError("tune: clean corpus is empty");
  double max_entropy = 0.0;
  double min_chi2 = std::numeric_limits<double>::infinity();
  for (const auto& [path, bytes] : clean_corpus) {
    if (bytes.empty()) continue;
    max_entropy = std::max(max_entropy, shannon_entropy(bytes));
    min_chi2 = std::min(min_chi2, chi2_whole_file(bytes));
  }
  BaselineParams params;
  // One-ulp nudges keep every clean file exactly on the benign side.
  params.entropy_threshold = std::nextafter(max_entropy, std::numeric_limits<double>::infinity());
  params.chi2_threshold = std::nextafter(min_chi2, -std::numeric_limits<double>::infinity());
  params.tuned_on = corpus_id;
  return params;
}

inline bool entropy_flags(const BaselineParams& params, ByteSpan file) {
  if (file.empty()) return false;
  return shannon_entropy(file) > params.entropy_threshold;
}

inline bool chi2_flags(const BaselineParams& params, ByteSpan file) {
  if (file.empty()) return false;
  return chi2_whole_file(file) < params.chi2_threshold;
}

}  // namespace favscan::baselines
