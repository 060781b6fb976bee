#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "favscan/chi2.hpp"
#include "favscan/common.hpp"
#include "favscan/delta.hpp"

namespace favscan::sawa {

struct SawaParams {
  std::size_t window = 16;
  std::size_t stride = 8;
  double tau = 350.0;

  void validate() const {
    if (window < 1) throw ArgumentError("sawa: window must be >= 1");
    if (stride < 1 || stride > window) throw ArgumentError("sawa: stride must be in [1, window]");
    if (!(tau > 0.0)) throw ArgumentError("sawa: tau must be positive");
  }
};

struct CoveredBlock {
  std::uint64_t block_id = 0;
  std::uint32_t begin = 0;  // intra-block byte range [begin, end)
  std::uint32_t end = 0;
};

// Near-uniform span with physical provenance back to device blocks.
struct SuspiciousRange {
  std::uint64_t device_offset = 0;
  std::uint64_t length = 0;
  std::vector<CoveredBlock> covered_blocks;
  double chi2_final = 0.0;

  std::uint64_t end() const { return device_offset + length; }
};

struct AnalysisResult {
  std::vector<SuspiciousRange> suspicious;       // sorted by device_offset
  std::vector<delta::DeltaBlock> forwarded_small;  // payloads shorter than the window
};

namespace detail {

struct LocalRange {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  double chi2 = 0.0;
};

// Histogram over x[p, p+len). Counts are exact integers, so scoring through
// chi2_from_counts is bit-identical to a from-scratch computation.
class WindowCounts {
 public:
  WindowCounts(ByteSpan x, std::uint64_t p, std::uint64_t len) : x_(x), p_(p), len_(len) {
    counts_.fill(0);
    for (std::uint64_t i = p; i < p + len; ++i) ++counts_[x_[i]];
  }

  void grow_to(std::uint64_t new_len) {
    for (std::uint64_t i = p_ + len_; i < p_ + new_len; ++i) ++counts_[x_[i]];
    len_ = new_len;
  }
  void shrink_to(std::uint64_t new_len) {
    for (std::uint64_t i = p_ + new_len; i < p_ + len_; ++i) --counts_[x_[i]];
    len_ = new_len;
  }
  void resize_to(std::uint64_t new_len) {
    if (new_len > len_) grow_to(new_len);
    else if (new_len < len_) shrink_to(new_len);
  }

  double chi2() const { return chi2_from_counts(counts_, len_); }

 private:
  ByteSpan x_;
  std::uint64_t p_;
  std::uint64_t len_;
  ByteHistogram counts_;
};

// Slide / expand / shrink over one payload. Positions are relative to x.
inline std::vector<LocalRange> scan_payload(ByteSpan x, const SawaParams& params) {
  std::vector<LocalRange> out;
  const std::uint64_t n = x.size();
  const std::uint64_t w = params.window;
  const std::uint64_t s = params.stride;

  std::uint64_t p = 0;
  ByteHistogram counts{};
  bool counts_valid = false;

  while (p + w <= n) {
    if (!counts_valid) {
      counts = histogram_of(x.subspan(p, w));
      counts_valid = true;
    }
    const double chi = chi2_from_counts(counts, w);
    if (chi <= params.tau) {
      // Geometric expansion: double while uniform and the doubled window fits.
      WindowCounts win(x, p, w);
      std::uint64_t len = w;
      double cur_chi = chi;
      while (cur_chi <= params.tau && p + 2 * len <= n) {
        win.grow_to(2 * len);
        len = 2 * len;
        cur_chi = win.chi2();
      }

      std::uint64_t good_len;
      double good_chi;
      if (cur_chi <= params.tau) {
        // Clamped by the payload end; try the full remainder, else bisect.
        good_len = len;
        good_chi = cur_chi;
        const std::uint64_t hi_len = n - p;
        if (hi_len > len) {
          win.grow_to(hi_len);
          const double hi_chi = win.chi2();
          if (hi_chi <= params.tau) {
            good_len = hi_len;
            good_chi = hi_chi;
          } else {
            std::uint64_t lo = len, hi = hi_len;
            while (hi - lo > 1) {
              const std::uint64_t mid = lo + (hi - lo + 1) / 2;
              win.resize_to(mid);
              const double mid_chi = win.chi2();
              if (mid_chi <= params.tau) {
                lo = mid;
                good_len = mid;
                good_chi = mid_chi;
              } else {
                hi = mid;
              }
            }
          }
        }
      } else {
        // The last doubling overshot: the maximum lies in (len/2, len].
        std::uint64_t lo = len / 2, hi = len;
        good_len = lo;
        good_chi = 0.0;
        win.resize_to(lo);
        good_chi = win.chi2();
        while (hi - lo > 1) {
          const std::uint64_t mid = lo + (hi - lo + 1) / 2;
          win.resize_to(mid);
          const double mid_chi = win.chi2();
          if (mid_chi <= params.tau) {
            lo = mid;
            good_len = mid;
            good_chi = mid_chi;
          } else {
            hi = mid;
          }
        }
      }

      out.push_back({p, good_len, good_chi});
      p = p + good_len;
      counts_valid = false;
    } else {
      // Advance by the stride, updating the base histogram incrementally.
      if (p + s + w <= n) {
        for (std::uint64_t i = p; i < p + s; ++i) --counts[x[i]];
        for (std::uint64_t i = p + w; i < p + s + w; ++i) ++counts[x[i]];
      } else {
        counts_valid = false;
      }
      p += s;
    }
  }
  return out;
}

inline std::vector<CoveredBlock> cover_blocks(std::uint64_t device_offset, std::uint64_t length) {
  std::vector<CoveredBlock> blocks;
  const std::uint64_t end = device_offset + length;
  for (std::uint64_t b = device_offset / kBlockSize; b * kBlockSize < end; ++b) {
    const std::uint64_t lo = std::max<std::uint64_t>(device_offset, b * kBlockSize);
    const std::uint64_t hi = std::min<std::uint64_t>(end, (b + 1) * kBlockSize);
    blocks.push_back({b, static_cast<std::uint32_t>(lo - b * kBlockSize),
                      static_cast<std::uint32_t>(hi - b * kBlockSize)});
  }
  return blocks;
}

}  // namespace detail

// Analysis of a single delta block; exposed so callers can order or
// parallelize blocks themselves. Payloads shorter than the window are not
// scored here.
inline std::vector<SuspiciousRange> analyze_block(const delta::DeltaBlock& block,
                                                  const SawaParams& params) {
  std::vector<SuspiciousRange> out;
  for (const auto& local : detail::scan_payload(block.new_bytes, params)) {
    SuspiciousRange range;
    range.device_offset = block.device_offset + local.offset;
    range.length = local.length;
    range.chi2_final = local.chi2;
    range.covered_blocks = detail::cover_blocks(range.device_offset, range.length);
    out.push_back(std::move(range));
  }
  return out;
}

// High-recall prefilter: flag near-uniform spans, forward payloads too small
// to score. Results are canonicalized by device offset, so per-block
// scheduling order cannot affect the output.
inline AnalysisResult analyze(const delta::DeltaSnapshot& snap, const SawaParams& params) {
  params.validate();
  AnalysisResult result;
  for (const delta::DeltaBlock& block : snap.deltas) {
    if (block.length() < params.window) {
      result.forwarded_small.push_back(block);
      continue;
    }
    auto ranges = analyze_block(block, params);
    result.suspicious.insert(result.suspicious.end(), std::make_move_iterator(ranges.begin()),
                             std::make_move_iterator(ranges.end()));
  }
  std::sort(result.suspicious.begin(), result.suspicious.end(),
            [](const SuspiciousRange& a, const SuspiciousRange& b) {
              return a.device_offset < b.device_offset;
            });
  std::sort(result.forwarded_small.begin(), result.forwarded_small.end(),
            [](const delta::DeltaBlock& a, const delta::DeltaBlock& b) {
              return a.device_offset < b.device_offset;
            });
  return result;
}

}  // namespace favscan::sawa
