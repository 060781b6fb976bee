#pragma once

#include <cstdint>
#include <vector>

#include "favscan/common.hpp"
#include "favscan/snapstore.hpp"

namespace favscan::delta {

// Maximal run of contiguous dirty blocks inside one extent. Runs never cross
// extent boundaries; extents are the unit of independent processing.
struct AggregatedBlockRun {
  std::uint64_t start_block = 0;
  std::uint64_t length_blocks = 0;
};

struct Extent {
  std::uint64_t extent_id = 0;
  std::vector<AggregatedBlockRun> runs;
};

inline std::vector<Extent> group_by_extent(const snapstore::DirtyBitmap& dirty) {
  std::vector<Extent> extents;
  const std::uint64_t n = dirty.block_count();
  std::uint64_t i = 0;
  while (i < n) {
    if (!dirty.test(i)) {
      ++i;
      continue;
    }
    const std::uint64_t extent_id = i / kBlocksPerExtent;
    const std::uint64_t extent_end = (extent_id + 1) * kBlocksPerExtent;
    std::uint64_t j = i + 1;
    while (j < n && j < extent_end && dirty.test(j)) ++j;
    if (extents.empty() || extents.back().extent_id != extent_id) {
      extents.push_back({extent_id, {}});
    }
    extents.back().runs.push_back({i, j - i});
    i = j;
  }
  return extents;
}

// One contiguous region of modified bytes: exact forward difference between
// the pre-window and post-window device states. Both sides are carried so the
// change is fully reconstructible in either direction.
struct DeltaBlock {
  std::uint64_t device_offset = 0;
  Bytes new_bytes;
  Bytes old_bytes;

  std::uint64_t length() const { return new_bytes.size(); }
};

struct DeltaSnapshot {
  EpochId e_i = 0;
  EpochId e_j = 0;
  std::vector<DeltaBlock> deltas;  // sorted by device_offset, non-overlapping
};

namespace detail {

// Byte-wise diff of one aggregated run. Equal runs shorter than min_gap
// between two differing regions are absorbed into the surrounding diff;
// emitted diffs start and end on a differing byte.
inline void diff_run(ByteSpan old_bytes, ByteSpan new_bytes, std::uint64_t base_offset,
                     std::uint64_t min_gap, std::vector<DeltaBlock>& out) {
  const std::uint64_t n = new_bytes.size();
  std::uint64_t i = 0;
  while (i < n) {
    if (old_bytes[i] == new_bytes[i]) {
      ++i;
      continue;
    }
    const std::uint64_t start = i;
    std::uint64_t last_diff = i;
    std::uint64_t j = i + 1;
    while (j < n) {
      if (old_bytes[j] != new_bytes[j]) {
        last_diff = j;
        ++j;
        continue;
      }
      std::uint64_t k = j;
      while (k < n && old_bytes[k] == new_bytes[k]) ++k;
      if (k == n || k - j >= min_gap) break;  // equal run splits (or trailing)
      j = k;
    }
    DeltaBlock d;
    d.device_offset = base_offset + start;
    d.new_bytes.assign(new_bytes.begin() + start, new_bytes.begin() + last_diff + 1);
    d.old_bytes.assign(old_bytes.begin() + start, old_bytes.begin() + last_diff + 1);
    out.push_back(std::move(d));
    i = last_diff + 1;
  }
}

}  // namespace detail

// Forward differences for the epoch window [e_i, e_j], computed against the
// device state just before e_i. Pure over the persisted store state.
inline DeltaSnapshot extract_delta(const snapstore::SnapshotStore& store, EpochId e_i, EpochId e_j,
                                   std::uint64_t min_gap_length = 16) {
  if (e_i == 0) throw ArgumentError("extract_delta: e_i must be >= 1 (epoch 0 has no pre-image)");
  if (e_i > e_j) throw ArgumentError("extract_delta: e_i > e_j");
  if (e_j > store.last_epoch()) throw IntegrityError("extract_delta: epoch not in store");

  const snapstore::BlockImage before = store.reconstruct(e_i - 1);
  const snapstore::BlockImage after = store.reconstruct(e_j);
  const snapstore::DirtyBitmap dirty = store.union_bitmaps(e_i, e_j);

  DeltaSnapshot snap;
  snap.e_i = e_i;
  snap.e_j = e_j;
  for (const Extent& extent : group_by_extent(dirty)) {
    for (const AggregatedBlockRun& run : extent.runs) {
      const std::uint64_t offset = run.start_block * kBlockSize;
      const std::uint64_t length = run.length_blocks * kBlockSize;
      detail::diff_run(before.range(offset, length), after.range(offset, length), offset,
                       min_gap_length, snap.deltas);
    }
  }
  return snap;
}

}  // namespace favscan::delta
