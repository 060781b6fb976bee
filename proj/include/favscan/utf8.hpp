#pragma once

#include <cstdint>
#include <optional>

#include "favscan/common.hpp"

namespace favscan::utf8 {

// Strict UTF-8 validation: rejects overlong encodings, surrogates, and code
// points above U+10FFFF. Returns the offset of the first invalid byte, or
// nullopt when the whole span decodes.
inline std::optional<std::size_t> first_invalid(ByteSpan data) {
  std::size_t i = 0;
  const std::size_t n = data.size();
  while (i < n) {
    const std::uint8_t b0 = data[i];
    if (b0 < 0x80) {
      ++i;
      continue;
    }
    if (b0 < 0xC2) return i;  // continuation byte or overlong lead
    std::size_t len;
    std::uint32_t cp;
    if (b0 < 0xE0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if (b0 < 0xF0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if (b0 < 0xF5) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      return i;
    }
    if (i + len > n) return i;
    for (std::size_t k = 1; k < len; ++k) {
      const std::uint8_t bk = data[i + k];
      if ((bk & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (bk & 0x3F);
    }
    if (len == 3 && cp < 0x800) return i;
    if (len == 4 && cp < 0x10000) return i;
    if (cp >= 0xD800 && cp <= 0xDFFF) return i;
    if (cp > 0x10FFFF) return i;
    i += len;
  }
  return std::nullopt;
}

inline bool is_valid(ByteSpan data) { return !first_invalid(data).has_value(); }

// Fraction of bytes that belong to well-formed sequences, resynchronizing
// one byte at a time after each error. 1.0 for clean text, near 0.5 for
// uniformly random bytes.
inline double decodable_ratio(ByteSpan data) {
  if (data.empty()) return 1.0;
  std::size_t good = 0;
  std::size_t i = 0;
  while (i < data.size()) {
    const auto bad = first_invalid(data.subspan(i));
    if (!bad) {
      good += data.size() - i;
      break;
    }
    good += *bad;
    i += *bad + 1;  // skip the offending byte and resync
  }
  return static_cast<double>(good) / static_cast<double>(data.size());
}

inline bool is_continuation(std::uint8_t b) { return (b & 0xC0) == 0x80; }

// Widens [range) outward to the nearest plausible code-point boundaries,
// moving each edge at most 3 bytes. A span that still starts or ends
// mid-sequence after widening cannot have come from valid text.
inline ByteRange widen_to_code_points(ByteSpan file, ByteRange range) {
  std::uint64_t begin = range.offset;
  std::uint64_t end = range.end();
  for (int step = 0; step < 3 && begin > 0 && is_continuation(file[begin]); ++step) --begin;
  for (int step = 0; step < 3 && end < file.size() && is_continuation(file[end]); ++step) ++end;
  return {begin, end - begin};
}

}  // namespace favscan::utf8
