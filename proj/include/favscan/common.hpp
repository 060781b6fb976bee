#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace favscan {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

inline constexpr std::size_t kBlockSize = 512;
inline constexpr std::size_t kExtentSize = 4096;
inline constexpr std::size_t kBlocksPerExtent = kExtentSize / kBlockSize;

using EpochId = std::uint64_t;

// Error taxonomy. ArgumentError covers precondition violations by the caller,
// IntegrityError covers broken persisted state (missing epochs, bad magic).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Half-open byte interval [offset, offset + length).
struct ByteRange {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  std::uint64_t end() const { return offset + length; }
  bool empty() const { return length == 0; }
  bool contains(std::uint64_t pos) const { return pos >= offset && pos < end(); }
  bool overlaps(const ByteRange& other) const {
    return offset < other.end() && other.offset < end();
  }
  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

// Sorts and merges ranges that overlap or touch.
inline std::vector<ByteRange> coalesce_ranges(std::vector<ByteRange> ranges) {
  std::sort(ranges.begin(), ranges.end(),
            [](const ByteRange& a, const ByteRange& b) { return a.offset < b.offset; });
  std::vector<ByteRange> out;
  for (const auto& r : ranges) {
    if (r.empty()) continue;
    if (!out.empty() && r.offset <= out.back().end()) {
      out.back().length = std::max(out.back().end(), r.end()) - out.back().offset;
    } else {
      out.push_back(r);
    }
  }
  return out;
}

inline std::string to_hex(ByteSpan data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

inline Bytes from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) throw ArgumentError("hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ArgumentError("invalid hex digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open file: " + path.string());
  in.seekg(0, std::ios::end);
  Bytes data(static_cast<std::size_t>(in.tellg()));
  in.seekg(0, std::ios::beg);
  if (!data.empty()) in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!in) throw IntegrityError("short read: " + path.string());
  return data;
}

inline void write_file(const std::filesystem::path& path, ByteSpan data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot open file for writing: " + path.string());
  if (!data.empty()) out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IntegrityError("short write: " + path.string());
}

// Deterministic RNG. mt19937_64 output is pinned by the standard; the bounded
// draw uses rejection so results do not depend on the C++ library's
// distribution internals.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound).
  std::uint64_t bounded(std::uint64_t bound) {
    if (bound == 0) throw ArgumentError("bounded(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  std::uint8_t byte() { return static_cast<std::uint8_t>(engine_() & 0xFF); }

  void fill(Bytes& out) {
    for (auto& b : out) b = byte();
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  // k distinct values from [0, n), ascending.
  std::vector<std::uint64_t> sample(std::uint64_t n, std::uint64_t k) {
    if (k > n) throw ArgumentError("sample: k > n");
    std::vector<std::uint64_t> pool(n);
    for (std::uint64_t i = 0; i < n; ++i) pool[i] = i;
    for (std::uint64_t i = 0; i < k; ++i) {
      std::uint64_t j = i + bounded(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace favscan
