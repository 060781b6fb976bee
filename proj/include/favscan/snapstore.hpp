#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "favscan/common.hpp"

namespace favscan::snapstore {

namespace fs = std::filesystem;

// Full device state: block_count fixed-size blocks of kBlockSize bytes.
struct BlockImage {
  std::size_t block_count = 0;
  Bytes payload;

  static BlockImage zeroed(std::size_t block_count) {
    BlockImage img;
    img.block_count = block_count;
    img.payload.assign(block_count * kBlockSize, 0);
    return img;
  }

  ByteSpan block(std::uint64_t id) const {
    return ByteSpan(payload).subspan(id * kBlockSize, kBlockSize);
  }
  std::span<std::uint8_t> block_mut(std::uint64_t id) {
    return std::span<std::uint8_t>(payload).subspan(id * kBlockSize, kBlockSize);
  }
  ByteSpan range(std::uint64_t offset, std::uint64_t length) const {
    return ByteSpan(payload).subspan(offset, length);
  }
};

// Which blocks were touched during one epoch. Packed LSB-first to match the
// on-disk encoding exactly.
class DirtyBitmap {
 public:
  DirtyBitmap() = default;
  DirtyBitmap(EpochId epoch, std::size_t block_count)
      : epoch_(epoch), block_count_(block_count), packed_((block_count + 7) / 8, 0) {}
  DirtyBitmap(EpochId epoch, std::size_t block_count, Bytes packed)
      : epoch_(epoch), block_count_(block_count), packed_(std::move(packed)) {
    if (packed_.size() != (block_count_ + 7) / 8) {
      throw IntegrityError("bitmap length does not match block count");
    }
  }

  EpochId epoch() const { return epoch_; }
  std::size_t block_count() const { return block_count_; }
  const Bytes& packed() const { return packed_; }

  bool test(std::uint64_t id) const {
    return (packed_[id / 8] >> (id % 8)) & 1;
  }
  void set(std::uint64_t id) { packed_[id / 8] |= static_cast<std::uint8_t>(1u << (id % 8)); }

  void merge(const DirtyBitmap& other) {
    if (other.block_count_ != block_count_) throw ArgumentError("bitmap size mismatch");
    for (std::size_t i = 0; i < packed_.size(); ++i) packed_[i] |= other.packed_[i];
  }

  std::vector<std::uint64_t> set_blocks() const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < block_count_; ++i) {
      if (test(i)) out.push_back(i);
    }
    return out;
  }

  std::uint64_t popcount() const {
    std::uint64_t n = 0;
    for (std::uint64_t i = 0; i < block_count_; ++i) n += test(i) ? 1 : 0;
    return n;
  }

 private:
  EpochId epoch_ = 0;
  std::size_t block_count_ = 0;
  Bytes packed_;
};

// Last-written version of each block touched during an epoch, sorted by id.
struct MutationSnapshot {
  EpochId epoch = 0;
  std::vector<std::pair<std::uint64_t, Bytes>> entries;
};

struct BlockWrite {
  std::uint64_t block_id = 0;
  Bytes payload;  // exactly kBlockSize bytes
};

namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline std::uint32_t get_u32(ByteSpan in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(ByteSpan in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  return v;
}

inline constexpr char kMagic[6] = {'R', 'S', 'N', 'A', 'P', '\0'};
inline constexpr std::uint8_t kVersion = 1;

}  // namespace detail

inline Bytes encode_snapshot(const MutationSnapshot& snap) {
  Bytes out;
  out.insert(out.end(), detail::kMagic, detail::kMagic + 6);
  out.push_back(detail::kVersion);
  detail::put_u64(out, snap.epoch);
  detail::put_u32(out, static_cast<std::uint32_t>(kBlockSize));
  detail::put_u64(out, snap.entries.size());
  for (const auto& [id, payload] : snap.entries) {
    detail::put_u64(out, id);
    out.insert(out.end(), payload.begin(), payload.end());
  }
  return out;
}

inline MutationSnapshot decode_snapshot(ByteSpan data) {
  constexpr std::size_t header = 6 + 1 + 8 + 4 + 8;
  if (data.size() < header || std::memcmp(data.data(), detail::kMagic, 6) != 0) {
    throw IntegrityError("bad snapshot magic");
  }
  if (data[6] != detail::kVersion) throw IntegrityError("unsupported snapshot version");
  MutationSnapshot snap;
  snap.epoch = detail::get_u64(data, 7);
  const std::uint32_t block_size = detail::get_u32(data, 15);
  if (block_size != kBlockSize) throw IntegrityError("unexpected block size");
  const std::uint64_t count = detail::get_u64(data, 19);
  if (data.size() != header + count * (8 + kBlockSize)) {
    throw IntegrityError("snapshot length mismatch");
  }
  std::size_t pos = header;
  snap.entries.reserve(count);
  std::uint64_t prev = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t id = detail::get_u64(data, pos);
    pos += 8;
    if (i > 0 && id <= prev) throw IntegrityError("snapshot entries not strictly ascending");
    prev = id;
    snap.entries.emplace_back(id, Bytes(data.begin() + pos, data.begin() + pos + kBlockSize));
    pos += kBlockSize;
  }
  return snap;
}

// Persistent store: a directory holding the raw baseline image plus one
// snapshot file and one bitmap file per epoch. Single writer; reads are pure.
class SnapshotStore {
 public:
  static SnapshotStore create(const fs::path& dir, std::size_t block_count) {
    return create(dir, BlockImage::zeroed(block_count));
  }

  static SnapshotStore create(const fs::path& dir, const BlockImage& baseline) {
    fs::create_directories(dir);
    write_file(dir / "baseline.img", baseline.payload);
    SnapshotStore store;
    store.dir_ = dir;
    store.block_count_ = baseline.block_count;
    store.last_epoch_ = 0;
    return store;
  }

  static SnapshotStore open(const fs::path& dir) {
    SnapshotStore store;
    store.dir_ = dir;
    const auto baseline = dir / "baseline.img";
    if (!fs::exists(baseline)) throw IntegrityError("store has no baseline image: " + dir.string());
    store.block_count_ = fs::file_size(baseline) / kBlockSize;
    store.last_epoch_ = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("epoch-") && name.ends_with(".rsnap")) {
        const EpochId e = std::stoull(name.substr(6, name.size() - 6 - 6));
        store.last_epoch_ = std::max(store.last_epoch_, e);
      }
    }
    return store;
  }

  const fs::path& dir() const { return dir_; }
  std::size_t block_count() const { return block_count_; }
  EpochId last_epoch() const { return last_epoch_; }

  std::pair<MutationSnapshot, DirtyBitmap> record_epoch(const std::vector<BlockWrite>& writes) {
    const EpochId epoch = last_epoch_ + 1;
    DirtyBitmap bitmap(epoch, block_count_);
    std::map<std::uint64_t, Bytes> last;  // last-writer-wins, in write order
    for (const auto& w : writes) {
      if (w.block_id >= block_count_) {
        throw RangeError("block id " + std::to_string(w.block_id) + " out of range");
      }
      if (w.payload.size() != kBlockSize) throw ArgumentError("block write must be 512 bytes");
      last[w.block_id] = w.payload;
      bitmap.set(w.block_id);
    }
    MutationSnapshot snap;
    snap.epoch = epoch;
    snap.entries.assign(last.begin(), last.end());
    write_file(snapshot_path(epoch), encode_snapshot(snap));
    write_file(bitmap_path(epoch), bitmap.packed());
    last_epoch_ = epoch;
    return {std::move(snap), std::move(bitmap)};
  }

  MutationSnapshot load_snapshot(EpochId epoch) const {
    const auto path = snapshot_path(epoch);
    if (!fs::exists(path)) throw IntegrityError("missing snapshot for epoch " + std::to_string(epoch));
    auto snap = decode_snapshot(read_file(path));
    if (snap.epoch != epoch) throw IntegrityError("snapshot epoch field mismatch");
    return snap;
  }

  DirtyBitmap load_bitmap(EpochId epoch) const {
    const auto path = bitmap_path(epoch);
    if (!fs::exists(path)) throw IntegrityError("missing bitmap for epoch " + std::to_string(epoch));
    return DirtyBitmap(epoch, block_count_, read_file(path));
  }

  BlockImage baseline() const {
    BlockImage img;
    img.payload = read_file(dir_ / "baseline.img");
    img.block_count = img.payload.size() / kBlockSize;
    return img;
  }

  // Baseline plus replay of snapshots 1..epoch, in order.
  BlockImage reconstruct(EpochId epoch) const {
    BlockImage img = baseline();
    for (EpochId e = 1; e <= epoch; ++e) {
      const MutationSnapshot snap = load_snapshot(e);
      for (const auto& [id, payload] : snap.entries) {
        if (id >= img.block_count) throw IntegrityError("snapshot write beyond image");
        std::memcpy(img.block_mut(id).data(), payload.data(), kBlockSize);
      }
    }
    return img;
  }

  // OR-reduction of the dirty bitmaps for epochs [e_i, e_j].
  DirtyBitmap union_bitmaps(EpochId e_i, EpochId e_j) const {
    if (e_i > e_j) throw ArgumentError("union_bitmaps: e_i > e_j");
    DirtyBitmap out(e_j, block_count_);
    for (EpochId e = e_i; e <= e_j; ++e) {
      out.merge(load_bitmap(e));
    }
    return out;
  }

 private:
  fs::path snapshot_path(EpochId e) const { return dir_ / ("epoch-" + std::to_string(e) + ".rsnap"); }
  fs::path bitmap_path(EpochId e) const { return dir_ / ("epoch-" + std::to_string(e) + ".bitmap"); }

  fs::path dir_;
  std::size_t block_count_ = 0;
  EpochId last_epoch_ = 0;
};

}  // namespace favscan::snapstore
