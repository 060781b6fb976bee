#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "favscan/common.hpp"
#include "favscan/hash.hpp"
#include "favscan/mapping.hpp"
#include "favscan/snapstore.hpp"

namespace favscan::peersim {

// Encrypts only the first n bytes of the file.
struct Fast {
  std::uint64_t n = 0;
};
// Repeats: encrypt n bytes, skip s bytes, until EOF.
struct SkipStep {
  std::uint64_t n = 0;
  std::uint64_t s = 0;
};
// Encrypts approximately percent% of 512-byte file blocks, chosen by seeded
// sampling without replacement; a trailing partial block counts as one block.
struct Animagus {
  std::uint32_t percent = 0;
};

using AttackPattern = std::variant<Fast, SkipStep, Animagus>;

struct ScheduledPattern {
  std::uint64_t start_offset = 0;
  AttackPattern pattern;
};
using AttackSchedule = std::vector<ScheduledPattern>;

inline void validate(const AttackPattern& pattern) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Fast>) {
          if (p.n < 1) throw ArgumentError("fast: n must be >= 1");
        } else if constexpr (std::is_same_v<T, SkipStep>) {
          if (p.n < 1) throw ArgumentError("skip-step: n must be >= 1");
        } else {
          if (p.percent < 1 || p.percent > 100) throw ArgumentError("animagus: percent in (0, 100]");
        }
      },
      pattern);
}

inline std::string pattern_name(const AttackPattern& pattern) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Fast>) {
          return "fast:" + std::to_string(p.n);
        } else if constexpr (std::is_same_v<T, SkipStep>) {
          return "skip:" + std::to_string(p.n) + "," + std::to_string(p.s);
        } else {
          return "animagus:" + std::to_string(p.percent);
        }
      },
      pattern);
}

struct CipherSpec {
  std::array<std::uint8_t, 32> key{};

  static CipherSpec from_hex(const std::string& hex) {
    const Bytes raw = favscan::from_hex(hex);
    if (raw.size() != 32) throw ArgumentError("cipher key must be 32 bytes of hex");
    CipherSpec spec;
    std::copy(raw.begin(), raw.end(), spec.key.begin());
    return spec;
  }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::array<std::uint8_t, 16> add_blocks(std::array<std::uint8_t, 16> counter,
                                               std::uint64_t blocks) {
  // 128-bit big-endian addition.
  for (int i = 15; i >= 0 && blocks != 0; --i) {
    const std::uint64_t sum = counter[i] + (blocks & 0xFF);
    counter[i] = static_cast<std::uint8_t>(sum);
    blocks = (blocks >> 8) + (sum >> 8);
  }
  return counter;
}

}  // namespace detail

// Per-file counter base. Distinct paths (and distinct seeds) give distinct
// keystreams, so keystream reuse across files cannot occur within a campaign.
inline std::array<std::uint8_t, 16> file_nonce(const CipherSpec& cipher, std::uint64_t seed,
                                               const std::string& path) {
  Bytes material(cipher.key.begin(), cipher.key.end());
  for (int i = 0; i < 8; ++i) material.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  material.insert(material.end(), path.begin(), path.end());
  const auto digest = sha256(material);
  std::array<std::uint8_t, 16> nonce{};
  std::copy(digest.begin(), digest.begin() + 16, nonce.begin());
  return nonce;
}

// XORs the AES-256-CTR keystream over data[range], with the keystream
// positioned by absolute file offset. Applying it twice restores the input.
inline void ctr_xor(const CipherSpec& cipher, const std::array<std::uint8_t, 16>& nonce,
                    Bytes& data, ByteRange range) {
  if (range.empty()) return;
  if (range.end() > data.size()) throw ArgumentError("ctr_xor: range beyond data");

  const auto iv = detail::add_blocks(nonce, range.offset / 16);
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  if (EVP_EncryptInit_ex(ctx, EVP_aes_256_ctr(), nullptr, cipher.key.data(), iv.data()) != 1) {
    EVP_CIPHER_CTX_free(ctx);
    throw std::runtime_error("EVP_EncryptInit_ex failed");
  }
  int out_len = 0;
  // Discard the intra-block keystream prefix.
  const std::size_t skip = range.offset % 16;
  if (skip > 0) {
    std::uint8_t zeros[16] = {};
    std::uint8_t sink[16];
    EVP_EncryptUpdate(ctx, sink, &out_len, zeros, static_cast<int>(skip));
  }
  std::vector<std::uint8_t> out(range.length);
  EVP_EncryptUpdate(ctx, out.data(), &out_len, data.data() + range.offset,
                    static_cast<int>(range.length));
  std::copy(out.begin(), out.end(), data.begin() + range.offset);
  EVP_CIPHER_CTX_free(ctx);
}

// Encrypted file ranges prescribed by a pattern over a file of the given size.
inline std::vector<ByteRange> pattern_ranges(const AttackPattern& pattern, std::uint64_t size,
                                             std::uint64_t sample_seed) {
  validate(pattern);
  std::vector<ByteRange> ranges;
  if (size == 0) return ranges;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Fast>) {
          ranges.push_back({0, std::min(p.n, size)});
        } else if constexpr (std::is_same_v<T, SkipStep>) {
          for (std::uint64_t offset = 0; offset < size; offset += p.n + p.s) {
            ranges.push_back({offset, std::min(p.n, size - offset)});
          }
        } else {
          const std::uint64_t blocks = (size + kBlockSize - 1) / kBlockSize;
          const std::uint64_t count = p.percent * blocks / 100;
          DetRng rng(sample_seed);
          for (std::uint64_t b : rng.sample(blocks, count)) {
            const std::uint64_t offset = b * kBlockSize;
            ranges.push_back({offset, std::min<std::uint64_t>(kBlockSize, size - offset)});
          }
        }
      },
      pattern);
  return coalesce_ranges(std::move(ranges));
}

inline std::vector<ByteRange> schedule_ranges(const AttackSchedule& schedule, std::uint64_t size,
                                              std::uint64_t sample_seed) {
  std::vector<ByteRange> ranges;
  for (const auto& item : schedule) {
    if (item.start_offset >= size) continue;
    for (ByteRange r : pattern_ranges(item.pattern, size - item.start_offset, sample_seed)) {
      ranges.push_back({r.offset + item.start_offset, r.length});
    }
  }
  return coalesce_ranges(std::move(ranges));
}

// Black Basta's size-tiered strategy: whole-file below 5000 B, 64/128 stripes
// up to 1 GB, and a 5000-byte prefix followed by 64/6336 stripes beyond that.
inline AttackSchedule black_basta_preset(std::uint64_t file_size) {
  constexpr std::uint64_t kSmall = 5000;
  constexpr std::uint64_t kLarge = 1000000000ull;  // 1 GB
  if (file_size < kSmall) {
    return {{0, Fast{file_size == 0 ? 1 : file_size}}};
  }
  if (file_size < kLarge) {
    return {{0, SkipStep{64, 128}}};
  }
  return {{0, Fast{kSmall}}, {kSmall, SkipStep{64, 6336}}};
}

struct AttackResult {
  Bytes mutated;
  std::vector<ByteRange> encrypted_ranges;
};

inline AttackResult apply_attack(ByteSpan file, const AttackPattern& pattern,
                                 const CipherSpec& cipher, std::uint64_t seed,
                                 const std::string& path = {}) {
  AttackResult result;
  result.mutated.assign(file.begin(), file.end());
  result.encrypted_ranges = pattern_ranges(pattern, file.size(), seed ^ detail::fnv1a(path));
  const auto nonce = file_nonce(cipher, seed, path);
  for (const ByteRange& r : result.encrypted_ranges) {
    ctr_xor(cipher, nonce, result.mutated, r);
  }
  return result;
}

inline AttackResult apply_schedule(ByteSpan file, const AttackSchedule& schedule,
                                   const CipherSpec& cipher, std::uint64_t seed,
                                   const std::string& path = {}) {
  AttackResult result;
  result.mutated.assign(file.begin(), file.end());
  result.encrypted_ranges = schedule_ranges(schedule, file.size(), seed ^ detail::fnv1a(path));
  const auto nonce = file_nonce(cipher, seed, path);
  for (const ByteRange& r : result.encrypted_ranges) {
    ctr_xor(cipher, nonce, result.mutated, r);
  }
  return result;
}

// Labels for detector evaluation: encrypted ranges per clone file, plus the
// device blocks those ranges occupy through the layout.
struct GroundTruth {
  struct FileTruth {
    std::string path;
    std::vector<ByteRange> ranges;
  };
  std::vector<FileTruth> files;
  std::vector<std::uint64_t> encrypted_blocks;  // sorted, unique

  std::uint64_t encrypted_bytes() const {
    std::uint64_t total = 0;
    for (const auto& f : files) {
      for (const auto& r : f.ranges) total += r.length;
    }
    return total;
  }

  nlohmann::json to_json() const {
    nlohmann::json files_json = nlohmann::json::array();
    for (const auto& f : files) {
      nlohmann::json ranges = nlohmann::json::array();
      for (const auto& r : f.ranges) ranges.push_back({r.offset, r.length});
      files_json.push_back({{"path", f.path}, {"ranges", ranges}});
    }
    return {{"files", files_json}, {"encrypted_blocks", encrypted_blocks}};
  }

  static GroundTruth from_json(const nlohmann::json& j) {
    GroundTruth truth;
    for (const auto& fj : j.at("files")) {
      FileTruth f;
      f.path = fj.at("path").get<std::string>();
      for (const auto& rj : fj.at("ranges")) {
        f.ranges.push_back({rj.at(0).get<std::uint64_t>(), rj.at(1).get<std::uint64_t>()});
      }
      truth.files.push_back(std::move(f));
    }
    truth.encrypted_blocks = j.at("encrypted_blocks").get<std::vector<std::uint64_t>>();
    return truth;
  }

  void save(const std::filesystem::path& path) const {
    const std::string text = to_json().dump(2);
    write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  static GroundTruth load(const std::filesystem::path& path) {
    const Bytes data = read_file(path);
    return from_json(nlohmann::json::parse(data.begin(), data.end()));
  }
};

struct CampaignResult {
  EpochId epoch = 0;
  GroundTruth truth;
};

namespace detail {

inline void truth_blocks_for(const mapping::FileLayout& layout, const std::vector<ByteRange>& ranges,
                             std::vector<std::uint64_t>& out) {
  for (const ByteRange& r : ranges) {
    for (const auto& extent : layout.extents) {
      const std::uint64_t ext_file_end = extent.file_offset + extent.length;
      const std::uint64_t lo = std::max(r.offset, extent.file_offset);
      const std::uint64_t hi = std::min(r.end(), ext_file_end);
      if (lo >= hi) continue;
      const std::uint64_t dev_lo = extent.device_offset + (lo - extent.file_offset);
      const std::uint64_t dev_hi = extent.device_offset + (hi - extent.file_offset);
      for (std::uint64_t b = dev_lo / kBlockSize; b * kBlockSize < dev_hi; ++b) out.push_back(b);
    }
  }
}

}  // namespace detail

using FileMutator = std::function<AttackResult(ByteSpan original, const std::string& path)>;

// Clones the given files, encrypts the clones per the mutator, and writes
// them through the layout as one epoch. Clone paths get an ".enc" suffix so
// file-level labels stay unambiguous.
inline CampaignResult run_campaign_with(snapstore::SnapshotStore& store,
                                        mapping::LayoutManifest& layout,
                                        const std::vector<std::string>& clone_sources,
                                        const FileMutator& mutate) {
  const snapstore::BlockImage image = store.reconstruct(store.last_epoch());
  mapping::EpochWriteCollector collector(store.block_count());
  std::uint64_t next_offset = layout.next_free_device_offset();

  GroundTruth truth;
  for (const std::string& source : clone_sources) {
    const mapping::FileLayout* src = layout.find(source);
    if (!src) throw ArgumentError("campaign clone source not in layout: " + source);
    const Bytes original = mapping::read_file_from_image(image, *src);
    AttackResult attack = mutate(original, source);

    const std::string clone_path = source + ".enc";
    mapping::FileLayout& clone = mapping::allocate_file(layout, clone_path, original.size(),
                                                        next_offset, store.block_count());
    mapping::write_through_extents(clone, attack.mutated, collector);
    detail::truth_blocks_for(clone, attack.encrypted_ranges, truth.encrypted_blocks);
    truth.files.push_back({clone_path, std::move(attack.encrypted_ranges)});
  }
  std::sort(truth.encrypted_blocks.begin(), truth.encrypted_blocks.end());
  truth.encrypted_blocks.erase(std::unique(truth.encrypted_blocks.begin(), truth.encrypted_blocks.end()),
                               truth.encrypted_blocks.end());

  auto [snapshot, bitmap] = store.record_epoch(collector.take());
  (void)bitmap;
  return {snapshot.epoch, std::move(truth)};
}

inline CampaignResult run_campaign(snapstore::SnapshotStore& store, mapping::LayoutManifest& layout,
                                   const std::vector<std::string>& clone_sources,
                                   const AttackPattern& pattern, const CipherSpec& cipher,
                                   std::uint64_t seed) {
  return run_campaign_with(store, layout, clone_sources,
                           [&](ByteSpan original, const std::string& path) {
                             return apply_attack(original, pattern, cipher, seed, path);
                           });
}

// Black Basta picks its pattern per file size, so the schedule is resolved
// inside the mutator.
inline CampaignResult run_campaign_blackbasta(snapstore::SnapshotStore& store,
                                              mapping::LayoutManifest& layout,
                                              const std::vector<std::string>& clone_sources,
                                              const CipherSpec& cipher, std::uint64_t seed) {
  return run_campaign_with(store, layout, clone_sources,
                           [&](ByteSpan original, const std::string& path) {
                             return apply_schedule(original, black_basta_preset(original.size()),
                                                   cipher, seed, path);
                           });
}

}  // namespace favscan::peersim
