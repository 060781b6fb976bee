#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "favscan/baselines.hpp"
#include "favscan/common.hpp"
#include "favscan/corpusgen.hpp"
#include "favscan/delta.hpp"
#include "favscan/mapping.hpp"
#include "favscan/peersim.hpp"
#include "favscan/snapstore.hpp"

using namespace favscan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("favscan_sim_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

peersim::CipherSpec test_cipher() {
  return peersim::CipherSpec::from_hex(
      "202122232425262728292a2b2c2d2e2f303132333435363738393a3b3c3d3e3f");
}

}  // namespace

// ---------------------------------------------------------------------------
// attack patterns
// ---------------------------------------------------------------------------

TEST_CASE("fast: encrypts exactly the prefix") {
  DetRng rng(1);
  const Bytes file = rng.bytes(105116);
  const auto result = peersim::apply_attack(file, peersim::Fast{4096}, test_cipher(), 9, "a.pdf");
  REQUIRE(result.encrypted_ranges == std::vector<ByteRange>{{0, 4096}});
  REQUIRE(!std::equal(result.mutated.begin(), result.mutated.begin() + 4096, file.begin()));
  REQUIRE(std::equal(result.mutated.begin() + 4096, result.mutated.end(), file.begin() + 4096));
}

TEST_CASE("skip-step: stripes tile the file to EOF") {
  DetRng rng(2);
  const Bytes file = rng.bytes(320);
  const auto result = peersim::apply_attack(file, peersim::SkipStep{64, 128}, test_cipher(), 9, "f");
  REQUIRE(result.encrypted_ranges == std::vector<ByteRange>{{0, 64}, {192, 64}});
  std::uint64_t total = 0;
  for (const auto& r : result.encrypted_ranges) total += r.length;
  REQUIRE(total == 128);
}

TEST_CASE("skip-step: byte accounting matches a per-byte simulation") {
  DetRng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::uint64_t n = 1 + rng.bounded(512);
    const std::uint64_t s = rng.bounded(512);
    const std::uint64_t size = rng.bounded(20000);
    const Bytes file = rng.bytes(size);
    const auto result =
        peersim::apply_attack(file, peersim::SkipStep{n, s}, test_cipher(), trial, "f");

    // Oracle: simulate the stripe pattern byte by byte.
    std::uint64_t expected = 0;
    for (std::uint64_t i = 0; i < size; ++i) {
      const std::uint64_t phase = (n + s) == 0 ? 0 : i % (n + s);
      if (phase < n) ++expected;
    }
    std::uint64_t got = 0;
    for (const auto& r : result.encrypted_ranges) got += r.length;
    REQUIRE(got == expected);
  }
}

TEST_CASE("animagus: exactly floor(F*blocks/100) distinct blocks") {
  DetRng rng(4);
  const Bytes file = rng.bytes(40 * kBlockSize);
  const auto result = peersim::apply_attack(file, peersim::Animagus{25}, test_cipher(), 11, "f");
  std::set<std::uint64_t> blocks;
  for (const auto& r : result.encrypted_ranges) {
    for (std::uint64_t b = r.offset / kBlockSize; b * kBlockSize < r.end(); ++b) blocks.insert(b);
  }
  REQUIRE(blocks.size() == 10);  // floor(25 * 40 / 100)
}

TEST_CASE("animagus: a trailing partial block counts as one block") {
  DetRng rng(5);
  const Bytes file = rng.bytes(3 * kBlockSize + 100);  // 4 blocks
  const auto result = peersim::apply_attack(file, peersim::Animagus{100}, test_cipher(), 3, "f");
  std::uint64_t total = 0;
  for (const auto& r : result.encrypted_ranges) total += r.length;
  REQUIRE(total == file.size());  // all blocks chosen, partial clipped to EOF
}

TEST_CASE("patterns: empty file yields no ranges") {
  const Bytes empty;
  REQUIRE(peersim::apply_attack(empty, peersim::Fast{100}, test_cipher(), 1, "f")
              .encrypted_ranges.empty());
  REQUIRE(peersim::apply_attack(empty, peersim::SkipStep{64, 128}, test_cipher(), 1, "f")
              .encrypted_ranges.empty());
}

TEST_CASE("ctr: encrypting twice restores the original") {
  DetRng rng(6);
  for (const auto& pattern :
       {peersim::AttackPattern(peersim::Fast{1000}), peersim::AttackPattern(peersim::SkipStep{7, 13}),
        peersim::AttackPattern(peersim::Animagus{50})}) {
    const Bytes file = rng.bytes(5000);
    const auto once = peersim::apply_attack(file, pattern, test_cipher(), 21, "x");
    const auto twice = peersim::apply_attack(once.mutated, pattern, test_cipher(), 21, "x");
    REQUIRE(twice.mutated == file);
  }
}

TEST_CASE("ctr: keystream is positioned by absolute file offset") {
  // Encrypting a sub-range in isolation must agree with encrypting a larger
  // range that covers it.
  DetRng rng(7);
  Bytes a = rng.bytes(1000);
  Bytes b = a;
  const auto cipher = test_cipher();
  const auto nonce = peersim::file_nonce(cipher, 5, "f");
  peersim::ctr_xor(cipher, nonce, a, {0, 1000});
  peersim::ctr_xor(cipher, nonce, b, {333, 200});
  REQUIRE(Bytes(a.begin() + 333, a.begin() + 533) == Bytes(b.begin() + 333, b.begin() + 533));
}

TEST_CASE("seed determinism: identical inputs give identical campaigns") {
  DetRng rng(8);
  const Bytes file = rng.bytes(9000);
  const auto a = peersim::apply_attack(file, peersim::Animagus{40}, test_cipher(), 99, "p");
  const auto b = peersim::apply_attack(file, peersim::Animagus{40}, test_cipher(), 99, "p");
  REQUIRE(a.mutated == b.mutated);
  REQUIRE(a.encrypted_ranges == b.encrypted_ranges);
  const auto c = peersim::apply_attack(file, peersim::Animagus{40}, test_cipher(), 100, "p");
  REQUIRE(a.mutated != c.mutated);
}

TEST_CASE("black basta preset: size tiers") {
  const auto small = peersim::black_basta_preset(4000);
  REQUIRE(small.size() == 1);
  REQUIRE(std::get<peersim::Fast>(small[0].pattern).n == 4000);

  const auto mid = peersim::black_basta_preset(1000000);
  REQUIRE(mid.size() == 1);
  const auto mid_pattern = std::get<peersim::SkipStep>(mid[0].pattern);
  REQUIRE(mid_pattern.n == 64);
  REQUIRE(mid_pattern.s == 128);

  const auto large = peersim::black_basta_preset(2000000000ull);
  REQUIRE(large.size() == 2);
  REQUIRE(std::get<peersim::Fast>(large[0].pattern).n == 5000);
  REQUIRE(large[1].start_offset == 5000);
  const auto tail = std::get<peersim::SkipStep>(large[1].pattern);
  REQUIRE(tail.n == 64);
  REQUIRE(tail.s == 6336);
}

TEST_CASE("black basta schedule: whole-file coverage below 5000 bytes") {
  DetRng rng(9);
  const Bytes file = rng.bytes(4000);
  const auto result =
      peersim::apply_schedule(file, peersim::black_basta_preset(file.size()), test_cipher(), 1, "f");
  REQUIRE(result.encrypted_ranges == std::vector<ByteRange>{{0, 4000}});
}

// ---------------------------------------------------------------------------
// campaigns
// ---------------------------------------------------------------------------

TEST_CASE("campaign: labels equal the blocks whose content changed") {
  const auto dir = temp_dir("labels");
  const auto files = corpus::text_corpus(123, 4, 4096, 16384);
  auto store = snapstore::SnapshotStore::create(dir, 4096);
  mapping::EpochWriteCollector collector(store.block_count());
  std::vector<std::pair<std::string, Bytes>> pairs;
  for (const auto& f : files) pairs.emplace_back(f.path, f.data);
  auto layout = mapping::layout_from_files(pairs, collector);
  store.record_epoch(collector.take());

  std::vector<std::string> sources;
  for (const auto& f : files) sources.push_back(f.path);
  const auto result =
      peersim::run_campaign(store, layout, sources, peersim::SkipStep{4096, 4096}, test_cipher(), 5);
  REQUIRE(result.epoch == 2);
  REQUIRE(result.truth.files.size() == 4);

  // Cross-check: ground-truth blocks must be exactly the clone blocks whose
  // bytes differ between the two epochs.
  const auto before = store.reconstruct(1);
  const auto after = store.reconstruct(2);
  std::set<std::uint64_t> changed;
  for (std::uint64_t b = 0; b < store.block_count(); ++b) {
    if (!std::equal(before.block(b).begin(), before.block(b).end(), after.block(b).begin())) {
      changed.insert(b);
    }
  }
  // Every labeled block changed...
  std::set<std::uint64_t> labeled(result.truth.encrypted_blocks.begin(),
                                  result.truth.encrypted_blocks.end());
  for (std::uint64_t b : labeled) REQUIRE(changed.count(b) == 1);
  // ...and the dirty bitmap covers the labels.
  const auto dirty = store.load_bitmap(2);
  for (std::uint64_t b : labeled) REQUIRE(dirty.test(b));
}

TEST_CASE("campaign: zero-length clone sources produce empty truth") {
  const auto dir = temp_dir("zero");
  auto store = snapstore::SnapshotStore::create(dir, 64);
  mapping::EpochWriteCollector collector(store.block_count());
  auto layout =
      mapping::layout_from_files({{"empty.txt", Bytes{}}}, collector);
  store.record_epoch(collector.take());
  auto result = peersim::run_campaign(store, layout, {"empty.txt"}, peersim::Fast{4096},
                                      test_cipher(), 1);
  REQUIRE(result.truth.encrypted_blocks.empty());
  REQUIRE(result.truth.files.size() == 1);
  REQUIRE(result.truth.files[0].ranges.empty());
}

TEST_CASE("ground truth: JSON round-trip") {
  peersim::GroundTruth truth;
  truth.files.push_back({"a.txt.enc", {{0, 64}, {192, 64}}});
  truth.encrypted_blocks = {10, 11, 12};
  const auto dir = temp_dir("gt");
  truth.save(dir / "truth.json");
  const auto loaded = peersim::GroundTruth::load(dir / "truth.json");
  REQUIRE(loaded.files.size() == 1);
  REQUIRE(loaded.files[0].ranges == truth.files[0].ranges);
  REQUIRE(loaded.encrypted_blocks == truth.encrypted_blocks);
  REQUIRE(loaded.encrypted_bytes() == 128);
}

// ---------------------------------------------------------------------------
// baselines
// ---------------------------------------------------------------------------

TEST_CASE("entropy: closed-form cases") {
  REQUIRE(baselines::shannon_entropy(Bytes(1000, 0x00)) == Catch::Approx(0.0).margin(1e-12));
  Bytes all(256);
  for (int i = 0; i < 256; ++i) all[i] = static_cast<std::uint8_t>(i);
  REQUIRE(baselines::shannon_entropy(all) == Catch::Approx(8.0).epsilon(1e-12));
  REQUIRE(baselines::shannon_entropy(Bytes{}) == 0.0);
}

TEST_CASE("entropy: matches an independent histogram computation") {
  DetRng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    Bytes data(500 + rng.bounded(5000));
    for (auto& b : data) b = static_cast<std::uint8_t>(rng.bounded(40));  // skewed
    std::array<std::uint64_t, 256> counts{};
    for (auto b : data) ++counts[b];
    double expected = 0.0;
    for (int i = 0; i < 256; ++i) {
      if (counts[i] == 0) continue;
      const double p = static_cast<double>(counts[i]) / data.size();
      expected -= p * std::log2(p);
    }
    REQUIRE(baselines::shannon_entropy(data) == Catch::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("chi2 whole file: closed forms and separation") {
  REQUIRE(baselines::chi2_whole_file(Bytes(1000, 0x42)) == Catch::Approx(255.0 * 1000).epsilon(1e-9));
  Bytes cycle(4096);
  for (std::size_t i = 0; i < cycle.size(); ++i) cycle[i] = static_cast<std::uint8_t>(i % 256);
  REQUIRE(baselines::chi2_whole_file(cycle) == Catch::Approx(0.0).margin(1e-9));

  DetRng rng(11);
  const Bytes uniform = rng.bytes(1 << 20);
  REQUIRE(baselines::chi2_whole_file(uniform) < 255.0 * (1 << 20) / 1000.0);
}

TEST_CASE("tune: zero false positives by construction, deterministic") {
  DetRng rng(12);
  std::vector<std::pair<std::string, Bytes>> clean;
  clean.emplace_back("a.txt", corpus::gen_text(rng, 4000));
  clean.emplace_back("b.txt", corpus::gen_text(rng, 6000, corpus::TextStyle::Dense));
  clean.emplace_back("c.bin", rng.bytes(4096));

  const auto params = baselines::tune(clean, "unit");
  for (const auto& [path, bytes] : clean) {
    REQUIRE(!baselines::entropy_flags(params, bytes));
    REQUIRE(!baselines::chi2_flags(params, bytes));
  }
  const auto again = baselines::tune(clean, "unit");
  REQUIRE(params.entropy_threshold == again.entropy_threshold);
  REQUIRE(params.chi2_threshold == again.chi2_threshold);
}

TEST_CASE("tune: single constant file leaves everything benign") {
  const std::vector<std::pair<std::string, Bytes>> clean{{"c.bin", Bytes(2048, 0x00)}};
  const auto params = baselines::tune(clean);
  REQUIRE(!baselines::entropy_flags(params, clean[0].second));
  REQUIRE(!baselines::chi2_flags(params, clean[0].second));
}

TEST_CASE("tune: empty corpus is rejected") {
  REQUIRE_THROWS_AS(baselines::tune({}), ArgumentError);
}
