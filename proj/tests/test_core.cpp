#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>

#include "favscan/chi2.hpp"
#include "favscan/common.hpp"
#include "favscan/delta.hpp"
#include "favscan/snapstore.hpp"

using namespace favscan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("favscan_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Bytes block_of(std::uint8_t fill) { return Bytes(kBlockSize, fill); }

}  // namespace

// ---------------------------------------------------------------------------
// chi-squared
// ---------------------------------------------------------------------------

TEST_CASE("chi2: each byte value exactly once scores zero") {
  Bytes window(256);
  for (int i = 0; i < 256; ++i) window[i] = static_cast<std::uint8_t>(i);
  REQUIRE(chi_squared(window) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("chi2: constant window matches the 255*m closed form") {
  // One bin holds all m observations: (m - m/256)^2/(m/256) + 255*(m/256) = 255*m.
  for (std::size_t m : {std::size_t(1), std::size_t(16), std::size_t(100), std::size_t(4096)}) {
    Bytes window(m, 0x00);
    REQUIRE(chi_squared(window) == Catch::Approx(255.0 * m).epsilon(1e-9));
  }
}

TEST_CASE("chi2: sixteen distinct values score 240") {
  Bytes window(16);
  for (int i = 0; i < 16; ++i) window[i] = static_cast<std::uint8_t>(i * 7);
  REQUIRE(chi_squared(window) == Catch::Approx(240.0).epsilon(1e-9));
}

TEST_CASE("chi2: matches a literal 256-term summation on random windows") {
  DetRng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Bytes window = rng.bytes(1 + rng.bounded(700));
    double expected = 0.0;
    const double e = static_cast<double>(window.size()) / 256.0;
    std::array<std::uint64_t, 256> counts{};
    for (std::uint8_t b : window) ++counts[b];
    for (int b = 0; b < 256; ++b) {
      expected += (counts[b] - e) * (counts[b] - e) / e;
    }
    REQUIRE(chi_squared(window) == Catch::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("chi2: empty window is rejected") {
  REQUIRE_THROWS_AS(chi_squared(Bytes{}), ArgumentError);
}

// ---------------------------------------------------------------------------
// snapstore
// ---------------------------------------------------------------------------

TEST_CASE("snapstore: empty epoch yields zero entries and an all-zero bitmap") {
  auto store = snapstore::SnapshotStore::create(temp_dir("empty_epoch"), 64);
  auto [snap, bitmap] = store.record_epoch({});
  REQUIRE(snap.epoch == 1);
  REQUIRE(snap.entries.empty());
  REQUIRE(bitmap.popcount() == 0);
}

TEST_CASE("snapstore: last writer wins within an epoch") {
  auto store = snapstore::SnapshotStore::create(temp_dir("lww"), 64);
  auto [snap, bitmap] = store.record_epoch({{5, block_of(0xAA)}, {5, block_of(0xBB)}});
  REQUIRE(snap.entries.size() == 1);
  REQUIRE(snap.entries[0].first == 5);
  REQUIRE(snap.entries[0].second == block_of(0xBB));
  REQUIRE(bitmap.popcount() == 1);
  REQUIRE(bitmap.test(5));
}

TEST_CASE("snapstore: ten files times eight blocks gives eighty entries") {
  auto store = snapstore::SnapshotStore::create(temp_dir("eighty"), 4096);
  std::vector<snapstore::BlockWrite> writes;
  for (int file = 0; file < 10; ++file) {
    for (int b = 0; b < 8; ++b) {
      writes.push_back({static_cast<std::uint64_t>(file * 64 + b), block_of(0xC0)});
    }
  }
  auto [snap, bitmap] = store.record_epoch(writes);
  REQUIRE(snap.entries.size() == 80);
  REQUIRE(bitmap.popcount() == 80);
}

TEST_CASE("snapstore: out-of-range block id is rejected") {
  auto store = snapstore::SnapshotStore::create(temp_dir("range"), 16);
  REQUIRE_THROWS_AS(store.record_epoch({{16, block_of(0)}}), RangeError);
}

TEST_CASE("snapstore: reconstruct(0) returns the baseline verbatim") {
  snapstore::BlockImage baseline = snapstore::BlockImage::zeroed(32);
  DetRng rng(7);
  rng.fill(baseline.payload);
  auto store = snapstore::SnapshotStore::create(temp_dir("recon0"), baseline);
  store.record_epoch({{3, block_of(0x11)}});
  REQUIRE(store.reconstruct(0).payload == baseline.payload);
}

TEST_CASE("snapstore: single write lands on the right block only") {
  auto store = snapstore::SnapshotStore::create(temp_dir("single"), 32);
  store.record_epoch({{3, block_of(0x42)}});
  const auto image = store.reconstruct(1);
  for (std::uint64_t b = 0; b < 32; ++b) {
    const Bytes expected = b == 3 ? block_of(0x42) : block_of(0x00);
    REQUIRE(Bytes(image.block(b).begin(), image.block(b).end()) == expected);
  }
}

TEST_CASE("snapstore: replay equals a naive sequential application") {
  // Oracle: apply the same write stream to an in-memory image directly.
  DetRng rng(1234);
  const std::size_t block_count = 128;
  auto store = snapstore::SnapshotStore::create(temp_dir("replay"), block_count);
  snapstore::BlockImage oracle = snapstore::BlockImage::zeroed(block_count);

  for (int epoch = 0; epoch < 3; ++epoch) {
    std::vector<snapstore::BlockWrite> writes;
    const std::size_t n = 5 + rng.bounded(40);
    for (std::size_t i = 0; i < n; ++i) {
      snapstore::BlockWrite w{rng.bounded(block_count), rng.bytes(kBlockSize)};
      std::memcpy(oracle.block_mut(w.block_id).data(), w.payload.data(), kBlockSize);
      writes.push_back(std::move(w));
    }
    store.record_epoch(writes);
  }
  REQUIRE(store.reconstruct(3).payload == oracle.payload);
  // Determinism: a second reconstruction is byte-identical.
  REQUIRE(store.reconstruct(3).payload == oracle.payload);
}

TEST_CASE("snapstore: bitmap and snapshot stay coherent") {
  DetRng rng(99);
  auto store = snapstore::SnapshotStore::create(temp_dir("coherent"), 64);
  for (EpochId epoch = 1; epoch <= 4; ++epoch) {
    std::vector<snapstore::BlockWrite> writes;
    const std::size_t n = rng.bounded(20);
    for (std::size_t i = 0; i < n; ++i) {
      writes.push_back({rng.bounded(64), rng.bytes(kBlockSize)});
    }
    auto [snap, bitmap] = store.record_epoch(writes);
    std::vector<std::uint64_t> snapshot_ids;
    for (const auto& [id, payload] : snap.entries) snapshot_ids.push_back(id);
    REQUIRE(bitmap.set_blocks() == snapshot_ids);
    // The persisted pair must round-trip identically.
    const auto loaded_snap = store.load_snapshot(epoch);
    const auto loaded_bitmap = store.load_bitmap(epoch);
    REQUIRE(loaded_snap.entries == snap.entries);
    REQUIRE(loaded_bitmap.packed() == bitmap.packed());
  }
}

TEST_CASE("snapstore: snapshot encoding round-trips arbitrary snapshots") {
  DetRng rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    snapstore::MutationSnapshot snap;
    snap.epoch = rng.bounded(1000);
    std::uint64_t id = 0;
    const std::size_t n = rng.bounded(30);
    for (std::size_t i = 0; i < n; ++i) {
      id += 1 + rng.bounded(50);
      snap.entries.emplace_back(id, rng.bytes(kBlockSize));
    }
    const auto decoded = snapstore::decode_snapshot(snapstore::encode_snapshot(snap));
    REQUIRE(decoded.epoch == snap.epoch);
    REQUIRE(decoded.entries == snap.entries);
  }
}

TEST_CASE("snapstore: missing intermediate epoch breaks the replay chain") {
  const auto dir = temp_dir("missing");
  auto store = snapstore::SnapshotStore::create(dir, 16);
  store.record_epoch({{1, block_of(0x01)}});
  store.record_epoch({{2, block_of(0x02)}});
  fs::remove(dir / "epoch-1.rsnap");
  REQUIRE_THROWS_AS(store.reconstruct(2), IntegrityError);
}

TEST_CASE("snapstore: union_bitmaps") {
  DetRng rng(31);
  auto store = snapstore::SnapshotStore::create(temp_dir("union"), 64);
  std::vector<snapstore::DirtyBitmap> bitmaps;
  for (int epoch = 0; epoch < 5; ++epoch) {
    std::vector<snapstore::BlockWrite> writes;
    const std::size_t n = rng.bounded(12);
    for (std::size_t i = 0; i < n; ++i) {
      writes.push_back({rng.bounded(64), block_of(0xEE)});
    }
    bitmaps.push_back(store.record_epoch(writes).second);
  }

  SECTION("single epoch returns that bitmap verbatim") {
    REQUIRE(store.union_bitmaps(2, 2).packed() == bitmaps[1].packed());
  }
  SECTION("disjoint epochs accumulate") {
    auto s = snapstore::SnapshotStore::create(temp_dir("union2"), 16);
    s.record_epoch({{1, block_of(1)}});
    s.record_epoch({{2, block_of(2)}});
    const auto u = s.union_bitmaps(1, 2);
    REQUIRE(u.set_blocks() == std::vector<std::uint64_t>{1, 2});
  }
  SECTION("five epochs match a naive per-bit OR") {
    const auto u = store.union_bitmaps(1, 5);
    for (std::uint64_t b = 0; b < 64; ++b) {
      bool expected = false;
      for (const auto& bm : bitmaps) expected = expected || bm.test(b);
      REQUIRE(u.test(b) == expected);
    }
  }
  SECTION("reversed window is rejected") {
    REQUIRE_THROWS_AS(store.union_bitmaps(3, 2), ArgumentError);
  }
}

// ---------------------------------------------------------------------------
// delta extraction
// ---------------------------------------------------------------------------

TEST_CASE("group_by_extent: full extent coalesces into one run") {
  snapstore::DirtyBitmap bitmap(1, 64);
  for (std::uint64_t b = 0; b < 8; ++b) bitmap.set(b);
  const auto extents = delta::group_by_extent(bitmap);
  REQUIRE(extents.size() == 1);
  REQUIRE(extents[0].extent_id == 0);
  REQUIRE(extents[0].runs.size() == 1);
  REQUIRE(extents[0].runs[0].start_block == 0);
  REQUIRE(extents[0].runs[0].length_blocks == 8);
}

TEST_CASE("group_by_extent: non-contiguous dirty blocks stay separate runs") {
  snapstore::DirtyBitmap bitmap(1, 64);
  bitmap.set(0);
  bitmap.set(2);
  const auto extents = delta::group_by_extent(bitmap);
  REQUIRE(extents.size() == 1);
  REQUIRE(extents[0].runs.size() == 2);
  REQUIRE(extents[0].runs[0].length_blocks == 1);
  REQUIRE(extents[0].runs[1].length_blocks == 1);
}

TEST_CASE("group_by_extent: runs never cross the extent boundary") {
  snapstore::DirtyBitmap bitmap(1, 64);
  bitmap.set(7);
  bitmap.set(8);
  const auto extents = delta::group_by_extent(bitmap);
  REQUIRE(extents.size() == 2);
  REQUIRE(extents[0].extent_id == 0);
  REQUIRE(extents[0].runs[0].start_block == 7);
  REQUIRE(extents[1].extent_id == 1);
  REQUIRE(extents[1].runs[0].start_block == 8);
}

namespace {

snapstore::SnapshotStore store_with_block(const std::string& tag, const Bytes& new_block) {
  auto store = snapstore::SnapshotStore::create(temp_dir(tag), 16);
  store.record_epoch({{0, new_block}});
  return store;
}

}  // namespace

TEST_CASE("delta: rewriting identical content emits nothing") {
  auto store = snapstore::SnapshotStore::create(temp_dir("same"), 16);
  store.record_epoch({{4, block_of(0x77)}});
  store.record_epoch({{4, block_of(0x77)}});  // same bytes again
  const auto snap = delta::extract_delta(store, 2, 2);
  REQUIRE(snap.deltas.empty());
}

TEST_CASE("delta: an equal run at least min_gap long splits the diff") {
  Bytes block(kBlockSize, 0x00);
  for (std::size_t i = 100; i < 120; ++i) block[i] = 0xAB;
  for (std::size_t i = 140; i < 150; ++i) block[i] = 0xCD;  // gap of 20 >= 16
  auto store = store_with_block("split", block);
  const auto snap = delta::extract_delta(store, 1, 1, 16);
  REQUIRE(snap.deltas.size() == 2);
  REQUIRE(snap.deltas[0].device_offset == 100);
  REQUIRE(snap.deltas[0].length() == 20);
  REQUIRE(snap.deltas[1].device_offset == 140);
  REQUIRE(snap.deltas[1].length() == 10);
}

TEST_CASE("delta: a short equal run is absorbed into one diff") {
  Bytes block(kBlockSize, 0x00);
  for (std::size_t i = 100; i < 120; ++i) block[i] = 0xAB;
  for (std::size_t i = 130; i < 150; ++i) block[i] = 0xCD;  // gap of 10 < 16
  auto store = store_with_block("absorb", block);
  const auto snap = delta::extract_delta(store, 1, 1, 16);
  REQUIRE(snap.deltas.size() == 1);
  REQUIRE(snap.deltas[0].device_offset == 100);
  REQUIRE(snap.deltas[0].length() == 50);
}

TEST_CASE("delta: epoch zero has no pre-image and reversed windows fail") {
  auto store = snapstore::SnapshotStore::create(temp_dir("nopre"), 16);
  store.record_epoch({{0, block_of(1)}});
  REQUIRE_THROWS_AS(delta::extract_delta(store, 0, 1), ArgumentError);
  REQUIRE_THROWS_AS(delta::extract_delta(store, 2, 1), ArgumentError);
}

TEST_CASE("delta: round-trip over randomized epoch histories") {
  DetRng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t block_count = 64;
    auto store =
        snapstore::SnapshotStore::create(temp_dir("rt" + std::to_string(trial)), block_count);
    const int epochs = 1 + static_cast<int>(rng.bounded(4));
    for (int e = 0; e < epochs; ++e) {
      std::vector<snapstore::BlockWrite> writes;
      const std::size_t n = rng.bounded(24);
      for (std::size_t i = 0; i < n; ++i) {
        // Mix fresh random blocks with sparse edits so equal runs occur.
        Bytes payload = rng.bounded(2) ? rng.bytes(kBlockSize) : block_of(0x00);
        if (rng.bounded(2)) {
          for (int k = 0; k < 3; ++k) payload[rng.bounded(kBlockSize)] = rng.byte();
        }
        writes.push_back({rng.bounded(block_count), std::move(payload)});
      }
      store.record_epoch(writes);
    }
    const EpochId e_j = store.last_epoch();
    const EpochId e_i = 1 + rng.bounded(e_j);
    const auto snap = delta::extract_delta(store, e_i, e_j);

    // Applying new_bytes onto the pre-window image must reproduce the
    // post-window image; old_bytes must match the pre-window image.
    snapstore::BlockImage patched = store.reconstruct(e_i - 1);
    const snapstore::BlockImage after = store.reconstruct(e_j);
    for (const auto& d : snap.deltas) {
      REQUIRE(Bytes(patched.payload.begin() + d.device_offset,
                    patched.payload.begin() + d.device_offset + d.length()) == d.old_bytes);
      std::copy(d.new_bytes.begin(), d.new_bytes.end(), patched.payload.begin() + d.device_offset);
    }
    REQUIRE(patched.payload == after.payload);
  }
}

TEST_CASE("delta: diffs are minimal modulo gap suppression") {
  DetRng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t min_gap = 4 + rng.bounded(24);
    auto store = snapstore::SnapshotStore::create(temp_dir("minimal" + std::to_string(trial)), 16);
    Bytes payload(kBlockSize, 0x00);
    for (std::size_t i = 0; i < 10; ++i) payload[rng.bounded(kBlockSize)] = rng.byte();
    store.record_epoch({{0, payload}});
    const auto snap = delta::extract_delta(store, 1, 1, min_gap);
    for (const auto& d : snap.deltas) {
      REQUIRE(d.length() >= 1);
      REQUIRE(d.new_bytes.front() != d.old_bytes.front());
      REQUIRE(d.new_bytes.back() != d.old_bytes.back());
      // No interior equal run may reach min_gap.
      std::uint64_t equal_run = 0;
      for (std::size_t i = 0; i < d.length(); ++i) {
        equal_run = d.new_bytes[i] == d.old_bytes[i] ? equal_run + 1 : 0;
        REQUIRE(equal_run < min_gap);
      }
    }
  }
}

TEST_CASE("delta: output is canonical and non-overlapping") {
  DetRng rng(3131);
  auto store = snapstore::SnapshotStore::create(temp_dir("order"), 256);
  std::vector<snapstore::BlockWrite> writes;
  for (std::size_t i = 0; i < 60; ++i) writes.push_back({rng.bounded(256), rng.bytes(kBlockSize)});
  store.record_epoch(writes);

  const auto first = delta::extract_delta(store, 1, 1);
  const auto second = delta::extract_delta(store, 1, 1);
  REQUIRE(first.deltas.size() == second.deltas.size());
  for (std::size_t i = 0; i < first.deltas.size(); ++i) {
    REQUIRE(first.deltas[i].device_offset == second.deltas[i].device_offset);
    REQUIRE(first.deltas[i].new_bytes == second.deltas[i].new_bytes);
    if (i > 0) {
      REQUIRE(first.deltas[i - 1].device_offset + first.deltas[i - 1].length() <=
              first.deltas[i].device_offset);
    }
  }
}
