#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <optional>

#include "favscan/common.hpp"
#include "favscan/corpusgen.hpp"
#include "favscan/manifest.hpp"
#include "favscan/mapping.hpp"

using namespace favscan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("favscan_map_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

sawa::SuspiciousRange device_range(std::uint64_t offset, std::uint64_t length) {
  sawa::SuspiciousRange r;
  r.device_offset = offset;
  r.length = length;
  return r;
}

}  // namespace

TEST_CASE("index: empty manifest answers no-file everywhere") {
  mapping::LayoutManifest manifest;
  const auto index = mapping::IntervalIndex::build(manifest);
  REQUIRE(!index.stab(0).has_value());
  REQUIRE(!index.stab(123456).has_value());
}

TEST_CASE("index: stab arithmetic inside a single extent") {
  mapping::LayoutManifest manifest;
  manifest.files.push_back({"a.txt", 4096, {{4096, 4096, 0}}});
  const auto index = mapping::IntervalIndex::build(manifest);
  const auto hit = index.stab(5000);
  REQUIRE(hit.has_value());
  REQUIRE(hit->file->path == "a.txt");
  REQUIRE(hit->file_offset == 904);
  REQUIRE(!index.stab(4095).has_value());
  REQUIRE(!index.stab(8192).has_value());
}

TEST_CASE("index: overlapping device extents are rejected") {
  mapping::LayoutManifest manifest;
  manifest.files.push_back({"a", 4096, {{0, 4096, 0}}});
  manifest.files.push_back({"b", 4096, {{2048, 4096, 0}}});
  REQUIRE_THROWS_AS(mapping::IntervalIndex::build(manifest), ManifestError);
}

TEST_CASE("index: a thousand random extents agree with a linear-scan oracle") {
  DetRng rng(808);
  mapping::LayoutManifest manifest;
  std::uint64_t device = 0;
  for (int i = 0; i < 1000; ++i) {
    device += kExtentSize * (1 + rng.bounded(3));  // random gaps
    const std::uint64_t length = kExtentSize * (1 + rng.bounded(4));
    mapping::FileLayout file;
    file.path = "f" + std::to_string(i);
    file.size = length;
    file.extents.push_back({device, length, 0});
    manifest.files.push_back(std::move(file));
    device += length;
  }
  const auto index = mapping::IntervalIndex::build(manifest);

  auto oracle = [&](std::uint64_t pos) -> std::optional<std::pair<std::string, std::uint64_t>> {
    for (const auto& f : manifest.files) {
      for (const auto& e : f.extents) {
        if (pos >= e.device_offset && pos < e.device_offset + e.length) {
          return std::make_pair(f.path, e.file_offset + (pos - e.device_offset));
        }
      }
    }
    return std::nullopt;
  };

  for (int q = 0; q < 1000; ++q) {
    const std::uint64_t pos = rng.bounded(device + kExtentSize);
    const auto expected = oracle(pos);
    const auto got = index.stab(pos);
    REQUIRE(got.has_value() == expected.has_value());
    if (expected) {
      REQUIRE(got->file->path == expected->first);
      REQUIRE(got->file_offset == expected->second);
    }
  }
}

TEST_CASE("map_ranges: free-space hits are reported unmapped, not attributed") {
  mapping::LayoutManifest manifest;
  manifest.files.push_back({"a.txt", 4096, {{0, 4096, 0}}});
  const auto index = mapping::IntervalIndex::build(manifest);
  const auto mapped = mapping::map_ranges(index, {device_range(8192, 512)}, {});
  REQUIRE(mapped.regions.empty());
  REQUIRE(mapped.unmapped.size() == 1);
  REQUIRE(mapped.unmapped[0] == ByteRange{8192, 512});
}

TEST_CASE("map_ranges: adjacent ranges in one file coalesce") {
  mapping::LayoutManifest manifest;
  manifest.files.push_back({"a.txt", 4096, {{0, 4096, 0}}});
  const auto index = mapping::IntervalIndex::build(manifest);
  const auto mapped = mapping::map_ranges(index, {device_range(0, 64), device_range(64, 64)}, {});
  REQUIRE(mapped.regions.size() == 1);
  REQUIRE(mapped.regions[0].path == "a.txt");
  REQUIRE(mapped.regions[0].ranges.size() == 1);
  REQUIRE(mapped.regions[0].ranges[0] == ByteRange{0, 128});
}

TEST_CASE("map_ranges: a span across a fragmented file excludes the device gap") {
  // Fragmented file stored out of order on the device, with a hole between
  // the extents; a device span covering the hole must map to two separate
  // file ranges and one unmapped range.
  mapping::LayoutManifest manifest;
  manifest.files.push_back({"frag.bin", 8192, {{0, 4096, 4096}, {8192, 4096, 0}}});
  const auto index = mapping::IntervalIndex::build(manifest);
  const auto mapped = mapping::map_ranges(index, {device_range(2048, 8192)}, {});
  REQUIRE(mapped.regions.size() == 1);
  REQUIRE(mapped.regions[0].ranges.size() == 2);
  REQUIRE(mapped.regions[0].ranges[0] == ByteRange{0, 2048});
  REQUIRE(mapped.regions[0].ranges[1] == ByteRange{6144, 2048});
  REQUIRE(mapped.unmapped.size() == 1);
  REQUIRE(mapped.unmapped[0] == ByteRange{4096, 4096});

  // Per-byte oracle across the same span.
  for (std::uint64_t pos = 2048; pos < 2048 + 8192; ++pos) {
    const auto hit = index.stab(pos);
    bool in_region = false;
    if (hit) {
      for (const auto& r : mapped.regions[0].ranges) in_region |= r.contains(hit->file_offset);
    }
    bool in_unmapped = false;
    for (const auto& r : mapped.unmapped) in_unmapped |= r.contains(pos);
    REQUIRE((hit.has_value() ? in_region : in_unmapped));
  }
}

TEST_CASE("map_ranges: forwarded small blocks map like suspicious ranges") {
  mapping::LayoutManifest manifest;
  manifest.files.push_back({"a.txt", 4096, {{0, 4096, 0}}});
  const auto index = mapping::IntervalIndex::build(manifest);
  delta::DeltaBlock small;
  small.device_offset = 10;
  small.new_bytes = Bytes(8, 0xFF);
  small.old_bytes = Bytes(8, 0x00);
  const auto mapped = mapping::map_ranges(index, {}, {small});
  REQUIRE(mapped.regions.size() == 1);
  REQUIRE(mapped.regions[0].ranges[0] == ByteRange{10, 8});
}

TEST_CASE("map_ranges: no path appears twice") {
  mapping::LayoutManifest manifest;
  manifest.files.push_back({"a.txt", 8192, {{0, 8192, 0}}});
  manifest.files.push_back({"b.txt", 4096, {{8192, 4096, 0}}});
  const auto index = mapping::IntervalIndex::build(manifest);
  const auto mapped = mapping::map_ranges(
      index, {device_range(0, 64), device_range(4096, 64), device_range(8192, 64)}, {});
  REQUIRE(mapped.regions.size() == 2);
  REQUIRE(mapped.regions[0].path == "a.txt");
  REQUIRE(mapped.regions[0].ranges.size() == 2);
  REQUIRE(mapped.regions[1].path == "b.txt");
}

TEST_CASE("layout_from_corpus: a 512-byte file gets one padded extent") {
  const auto dir = temp_dir("pad");
  write_file(dir / "small.bin", Bytes(512, 0x5A));
  snapstore::BlockImage image = snapstore::BlockImage::zeroed(64);
  mapping::MemoryImageWriter writer(image);
  const auto manifest = mapping::layout_from_corpus(dir, writer);
  REQUIRE(manifest.files.size() == 1);
  REQUIRE(manifest.files[0].size == 512);
  REQUIRE(manifest.files[0].extents.size() == 1);
  REQUIRE(manifest.files[0].extents[0].length == kExtentSize);
}

TEST_CASE("layout_from_corpus: zero-length file carries no extents") {
  const auto dir = temp_dir("zero");
  write_file(dir / "empty.txt", Bytes{});
  snapstore::BlockImage image = snapstore::BlockImage::zeroed(8);
  mapping::MemoryImageWriter writer(image);
  const auto manifest = mapping::layout_from_corpus(dir, writer);
  REQUIRE(manifest.files.size() == 1);
  REQUIRE(manifest.files[0].extents.empty());
}

TEST_CASE("layout_from_corpus: every corpus file round-trips byte-identically") {
  const auto dir = temp_dir("roundtrip");
  DetRng rng(606);
  const auto files = corpus::media_files(1);
  corpus::write_corpus(dir, files);
  write_file(dir / "notes.txt", corpus::gen_text(rng, 3000));

  snapstore::BlockImage image = snapstore::BlockImage::zeroed(4096);
  mapping::MemoryImageWriter writer(image);
  const auto manifest = mapping::layout_from_corpus(dir, writer);
  REQUIRE(manifest.files.size() == 5);
  for (const auto& layout : manifest.files) {
    const Bytes original = read_file(dir / layout.path);
    REQUIRE(mapping::read_file_from_image(image, layout) == original);
  }
}

TEST_CASE("layout_from_corpus: capacity errors are detected") {
  const auto dir = temp_dir("capacity");
  write_file(dir / "big.bin", Bytes(16384, 0x01));
  snapstore::BlockImage image = snapstore::BlockImage::zeroed(8);  // 4 KiB device
  mapping::MemoryImageWriter writer(image);
  REQUIRE_THROWS_AS(mapping::layout_from_corpus(dir, writer), CapacityError);
}

TEST_CASE("layout manifest: JSON round-trip") {
  mapping::LayoutManifest manifest;
  manifest.files.push_back({"dir/a.txt", 5000, {{0, 8192, 0}}});
  manifest.files.push_back({"b.bin", 0, {}});
  const auto dir = temp_dir("json");
  manifest.save(dir / "layout.json");
  const auto loaded = mapping::LayoutManifest::load(dir / "layout.json");
  REQUIRE(loaded.files.size() == 2);
  REQUIRE(loaded.files[0].path == "dir/a.txt");
  REQUIRE(loaded.files[0].size == 5000);
  REQUIRE(loaded.files[0].extents[0].length == 8192);
  REQUIRE(loaded.files[1].extents.empty());
}

TEST_CASE("translation soundness on random manifests") {
  DetRng rng(404);
  mapping::LayoutManifest manifest;
  std::uint64_t device = 0;
  for (int i = 0; i < 50; ++i) {
    mapping::FileLayout file;
    file.path = "f" + std::to_string(i);
    std::uint64_t file_offset = 0;
    const int extent_count = 1 + static_cast<int>(rng.bounded(3));
    for (int e = 0; e < extent_count; ++e) {
      device += kExtentSize * rng.bounded(2);
      const std::uint64_t length = kExtentSize * (1 + rng.bounded(3));
      file.extents.push_back({device, length, file_offset});
      device += length;
      file_offset += length;
    }
    file.size = file_offset;
    manifest.files.push_back(std::move(file));
  }
  const auto index = mapping::IntervalIndex::build(manifest);
  for (int q = 0; q < 2000; ++q) {
    const std::uint64_t pos = rng.bounded(device);
    const auto hit = index.stab(pos);
    if (!hit) continue;
    bool sound = false;
    for (const auto& e : hit->file->extents) {
      if (pos >= e.device_offset && pos < e.device_offset + e.length) {
        sound = e.file_offset + (pos - e.device_offset) == hit->file_offset;
      }
    }
    REQUIRE(sound);
  }
}

// ---------------------------------------------------------------------------
// trusted manifest
// ---------------------------------------------------------------------------

TEST_CASE("manifest: empty corpus produces an empty manifest") {
  const auto dir = temp_dir("mf_empty");
  const auto m = manifest::build_manifest(dir);
  REQUIRE(m.file_count() == 0);
  REQUIRE(m.component_count() == 0);
}

TEST_CASE("manifest: known SHA-256 test vector") {
  const Bytes abc{'a', 'b', 'c'};
  REQUIRE(sha256_hex(abc) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest: media files get whole-file entries") {
  const auto dir = temp_dir("mf_media");
  corpus::write_corpus(dir, corpus::media_files(3));
  DetRng rng(1);
  write_file(dir / "readme.txt", corpus::gen_text(rng, 500));
  const auto m = manifest::build_manifest(dir);
  REQUIRE(m.file_count() == 4);  // jpg, png, mp3, mp4 but not txt
}

TEST_CASE("manifest: check statuses") {
  const auto dir = temp_dir("mf_check");
  DetRng rng(17);
  const Bytes photo = corpus::gen_jpeg_like(rng, 4096);
  write_file(dir / "photo.jpg", photo);
  const auto m = manifest::build_manifest(dir);

  SECTION("absent identifier is Unknown") {
    REQUIRE(m.check_file("other.jpg", photo) == manifest::WhitelistStatus::Unknown);
  }
  SECTION("unmodified file is Verified") {
    REQUIRE(m.check_file("photo.jpg", photo) == manifest::WhitelistStatus::Verified);
  }
  SECTION("single flipped byte is a Mismatch") {
    Bytes tampered = photo;
    tampered[100] ^= 0x01;
    REQUIRE(m.check_file("photo.jpg", tampered) == manifest::WhitelistStatus::Mismatch);
    // Oracle: recompute the digest and compare directly.
    REQUIRE(sha256_hex(tampered) != sha256_hex(photo));
  }
}

TEST_CASE("manifest: container components are hashed over the stored payload") {
  const auto dir = temp_dir("mf_zip");
  DetRng rng(88);
  corpus::ZipOptions opts;
  opts.approx_size = 4096;
  opts.with_media = true;
  opts.with_encrypted_stub = true;
  const Bytes archive = corpus::gen_zip(rng, opts);
  write_file(dir / "arch.zip", archive);
  const auto m = manifest::build_manifest(dir);
  REQUIRE(m.component_count() == 2);  // the media member and the encrypted stub

  const auto map = zip::parse(archive);
  REQUIRE(map.has_value());
  for (const auto& member : map->members) {
    const bool opaque = member.encrypted() ||
                        manifest::is_media_name(member.name, manifest::default_media_extensions());
    if (!opaque) continue;
    const ByteSpan payload =
        ByteSpan(archive).subspan(member.payload_range.offset, member.payload_range.length);
    REQUIRE(m.check_component("arch.zip", member.name, payload) ==
            manifest::WhitelistStatus::Verified);
  }
}

TEST_CASE("manifest: pdf image streams recorded with decoded canonical form") {
  const auto dir = temp_dir("mf_pdf");
  DetRng rng(5);
  const Bytes doc = corpus::gen_pdf(rng, {6000, true, true});
  write_file(dir / "doc.pdf", doc);
  const auto m = manifest::build_manifest(dir);
  REQUIRE(m.component_count() == 1);

  const auto map = pdf::parse(doc);
  REQUIRE(map.has_value());
  for (const auto& obj : map->objects) {
    if (!obj.has_stream || obj.cls != pdf::StreamClass::Image) continue;
    const std::string member = "obj:" + std::to_string(obj.num);
    REQUIRE(m.component_form("doc.pdf", member) == manifest::PayloadForm::Decoded);
    const auto decoded = pdf::decode_stream(doc, obj, 1 << 20);
    REQUIRE(decoded.has_value());
    REQUIRE(m.check_component("doc.pdf", member, *decoded) == manifest::WhitelistStatus::Verified);
  }
}

TEST_CASE("manifest: JSON round-trip") {
  manifest::TrustedManifest m;
  m.add_file("a.jpg", std::string(64, 'a'));
  m.add_component("b.zip", "media/x.png", std::string(64, 'b'), manifest::PayloadForm::Raw);
  m.add_component("c.pdf", "obj:7", std::string(64, 'c'), manifest::PayloadForm::Decoded);
  const auto dir = temp_dir("mf_json");
  m.save(dir / "manifest.json");
  const auto loaded = manifest::TrustedManifest::load(dir / "manifest.json");
  REQUIRE(loaded.file_count() == 1);
  REQUIRE(loaded.component_count() == 2);
  REQUIRE(loaded.component_form("c.pdf", "obj:7") == manifest::PayloadForm::Decoded);
  REQUIRE(loaded.component_form("b.zip", "media/x.png") == manifest::PayloadForm::Raw);
}
