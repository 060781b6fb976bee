#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "favscan/common.hpp"
#include "favscan/delta.hpp"
#include "favscan/sawa.hpp"
#include "favscan/snapstore.hpp"

namespace favscan::mapping {

namespace fs = std::filesystem;

struct FileExtent {
  std::uint64_t device_offset = 0;
  std::uint64_t length = 0;
  std::uint64_t file_offset = 0;
};

struct FileLayout {
  std::string path;  // canonical, '/'-separated, relative to the corpus root
  std::uint64_t size = 0;
  std::vector<FileExtent> extents;
};

struct LayoutManifest {
  std::vector<FileLayout> files;

  const FileLayout* find(const std::string& path) const {
    for (const auto& f : files) {
      if (f.path == path) return &f;
    }
    return nullptr;
  }

  // First device offset beyond every allocation, rounded up to an extent.
  std::uint64_t next_free_device_offset() const {
    std::uint64_t end = 0;
    for (const auto& f : files) {
      for (const auto& e : f.extents) end = std::max(end, e.device_offset + e.length);
    }
    return (end + kExtentSize - 1) / kExtentSize * kExtentSize;
  }

  nlohmann::json to_json() const {
    nlohmann::json files_json = nlohmann::json::array();
    for (const auto& f : files) {
      nlohmann::json extents = nlohmann::json::array();
      for (const auto& e : f.extents) {
        extents.push_back({{"device_offset", e.device_offset},
                           {"length", e.length},
                           {"file_offset", e.file_offset}});
      }
      files_json.push_back({{"path", f.path}, {"size", f.size}, {"extents", extents}});
    }
    return {{"block_size", kBlockSize}, {"extent_size", kExtentSize}, {"files", files_json}};
  }

  static LayoutManifest from_json(const nlohmann::json& j) {
    if (j.at("block_size").get<std::uint64_t>() != kBlockSize ||
        j.at("extent_size").get<std::uint64_t>() != kExtentSize) {
      throw ManifestError("layout manifest has unexpected geometry");
    }
    LayoutManifest m;
    for (const auto& fj : j.at("files")) {
      FileLayout f;
      f.path = fj.at("path").get<std::string>();
      f.size = fj.at("size").get<std::uint64_t>();
      for (const auto& ej : fj.at("extents")) {
        f.extents.push_back({ej.at("device_offset").get<std::uint64_t>(),
                             ej.at("length").get<std::uint64_t>(),
                             ej.at("file_offset").get<std::uint64_t>()});
      }
      m.files.push_back(std::move(f));
    }
    return m;
  }

  void save(const fs::path& path) const {
    const std::string text = to_json().dump(2);
    write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  static LayoutManifest load(const fs::path& path) {
    const Bytes data = read_file(path);
    return from_json(nlohmann::json::parse(data.begin(), data.end()));
  }
};

// Stabbing/overlap queries over non-overlapping device intervals. Built once,
// immutable afterwards; queries are const.
class IntervalIndex {
 public:
  struct Node {
    std::uint64_t dev_begin = 0;
    std::uint64_t dev_end = 0;
    std::uint32_t file_index = 0;
    std::uint64_t file_offset = 0;  // file offset of dev_begin
  };

  struct Hit {
    const FileLayout* file = nullptr;
    std::uint64_t file_offset = 0;
  };

  static IntervalIndex build(const LayoutManifest& manifest) {
    IntervalIndex index;
    index.manifest_ = &manifest;
    for (std::uint32_t fi = 0; fi < manifest.files.size(); ++fi) {
      std::vector<ByteRange> file_ranges;
      for (const auto& e : manifest.files[fi].extents) {
        if (e.length == 0) continue;
        index.nodes_.push_back({e.device_offset, e.device_offset + e.length, fi, e.file_offset});
        file_ranges.push_back({e.file_offset, e.length});
      }
      std::sort(file_ranges.begin(), file_ranges.end(),
                [](const ByteRange& a, const ByteRange& b) { return a.offset < b.offset; });
      for (std::size_t i = 1; i < file_ranges.size(); ++i) {
        if (file_ranges[i].offset < file_ranges[i - 1].end()) {
          throw ManifestError("file extents overlap in file-offset space: " + manifest.files[fi].path);
        }
      }
    }
    std::sort(index.nodes_.begin(), index.nodes_.end(),
              [](const Node& a, const Node& b) { return a.dev_begin < b.dev_begin; });
    for (std::size_t i = 1; i < index.nodes_.size(); ++i) {
      if (index.nodes_[i].dev_begin < index.nodes_[i - 1].dev_end) {
        throw ManifestError("device extents overlap across files");
      }
    }
    return index;
  }

  std::optional<Hit> stab(std::uint64_t device_byte) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), device_byte,
                               [](std::uint64_t v, const Node& n) { return v < n.dev_begin; });
    if (it == nodes_.begin()) return std::nullopt;
    --it;
    if (device_byte >= it->dev_end) return std::nullopt;
    return Hit{&manifest_->files[it->file_index], it->file_offset + (device_byte - it->dev_begin)};
  }

  // Nodes overlapping [begin, end), in device order.
  std::vector<const Node*> overlapping(std::uint64_t begin, std::uint64_t end) const {
    std::vector<const Node*> out;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), begin,
                               [](std::uint64_t v, const Node& n) { return v < n.dev_begin; });
    if (it != nodes_.begin()) --it;
    for (; it != nodes_.end() && it->dev_begin < end; ++it) {
      if (it->dev_end > begin) out.push_back(&*it);
    }
    return out;
  }

  const LayoutManifest& manifest() const { return *manifest_; }

 private:
  std::vector<Node> nodes_;
  const LayoutManifest* manifest_ = nullptr;
};

// Suspicious spans of one file, translated into file-offset coordinates.
struct FileRegion {
  std::string path;
  std::vector<ByteRange> ranges;  // sorted, non-overlapping, coalesced
};

struct MappedRegions {
  std::vector<FileRegion> regions;   // sorted by path, one entry per path
  std::vector<ByteRange> unmapped;   // device ranges hitting no file content
};

namespace detail {

inline void map_device_range(const IntervalIndex& index, ByteRange dev,
                             std::vector<std::pair<std::string, ByteRange>>& file_hits,
                             std::vector<ByteRange>& unmapped) {
  std::uint64_t cursor = dev.offset;
  for (const auto* node : index.overlapping(dev.offset, dev.end())) {
    const std::uint64_t lo = std::max(cursor, node->dev_begin);
    const std::uint64_t hi = std::min(dev.end(), node->dev_end);
    if (lo > cursor) unmapped.push_back({cursor, lo - cursor});
    const FileLayout& file = index.manifest().files[node->file_index];
    std::uint64_t fo = node->file_offset + (lo - node->dev_begin);
    std::uint64_t len = hi - lo;
    // Allocation slack beyond the logical file size maps to no content.
    if (fo < file.size) {
      const std::uint64_t usable = std::min(len, file.size - fo);
      file_hits.emplace_back(file.path, ByteRange{fo, usable});
      if (usable < len) unmapped.push_back({lo + usable, len - usable});
    } else {
      unmapped.push_back({lo, len});
    }
    cursor = hi;
  }
  if (cursor < dev.end()) unmapped.push_back({cursor, dev.end() - cursor});
}

}  // namespace detail

// Translate flagged device spans into per-file offset ranges. Device bytes
// covered by no file (free space, slack) are reported separately and never
// reach the validators.
inline MappedRegions map_ranges(const IntervalIndex& index,
                                const std::vector<sawa::SuspiciousRange>& suspicious,
                                const std::vector<delta::DeltaBlock>& forwarded_small) {
  std::vector<std::pair<std::string, ByteRange>> file_hits;
  std::vector<ByteRange> unmapped;
  for (const auto& r : suspicious) {
    detail::map_device_range(index, {r.device_offset, r.length}, file_hits, unmapped);
  }
  for (const auto& d : forwarded_small) {
    detail::map_device_range(index, {d.device_offset, d.length()}, file_hits, unmapped);
  }

  std::sort(file_hits.begin(), file_hits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second.offset < b.second.offset;
  });

  MappedRegions out;
  for (auto it = file_hits.begin(); it != file_hits.end();) {
    auto end = it;
    std::vector<ByteRange> ranges;
    while (end != file_hits.end() && end->first == it->first) {
      ranges.push_back(end->second);
      ++end;
    }
    out.regions.push_back({it->first, coalesce_ranges(std::move(ranges))});
    it = end;
  }
  out.unmapped = coalesce_ranges(std::move(unmapped));
  return out;
}

// Destination for corpus writes: either a live image or an epoch collector.
class ImageWriter {
 public:
  virtual ~ImageWriter() = default;
  virtual std::uint64_t capacity_blocks() const = 0;
  virtual void write_block(std::uint64_t block_id, ByteSpan payload) = 0;
};

class MemoryImageWriter final : public ImageWriter {
 public:
  explicit MemoryImageWriter(snapstore::BlockImage& image) : image_(image) {}
  std::uint64_t capacity_blocks() const override { return image_.block_count; }
  void write_block(std::uint64_t block_id, ByteSpan payload) override {
    std::memcpy(image_.block_mut(block_id).data(), payload.data(), kBlockSize);
  }

 private:
  snapstore::BlockImage& image_;
};

// Collects block writes for snapstore::record_epoch.
class EpochWriteCollector final : public ImageWriter {
 public:
  explicit EpochWriteCollector(std::uint64_t capacity_blocks) : capacity_(capacity_blocks) {}
  std::uint64_t capacity_blocks() const override { return capacity_; }
  void write_block(std::uint64_t block_id, ByteSpan payload) override {
    writes_.push_back({block_id, Bytes(payload.begin(), payload.end())});
  }
  std::vector<snapstore::BlockWrite> take() { return std::move(writes_); }
  const std::vector<snapstore::BlockWrite>& writes() const { return writes_; }

 private:
  std::uint64_t capacity_;
  std::vector<snapstore::BlockWrite> writes_;
};

// Writes file content through one allocated extent, padding the final partial
// block with zeros.
inline void write_through_extents(const FileLayout& file, ByteSpan content, ImageWriter& writer) {
  for (const auto& extent : file.extents) {
    if (extent.file_offset >= content.size()) continue;
    const std::uint64_t usable = std::min<std::uint64_t>(extent.length, content.size() - extent.file_offset);
    for (std::uint64_t off = 0; off < usable; off += kBlockSize) {
      Bytes block(kBlockSize, 0);
      const std::uint64_t n = std::min<std::uint64_t>(kBlockSize, usable - off);
      std::memcpy(block.data(), content.data() + extent.file_offset + off, n);
      writer.write_block((extent.device_offset + off) / kBlockSize, block);
    }
  }
}

// Allocates extent-aligned space and appends a layout entry. First-fit over a
// bump allocator: nothing is ever freed.
inline FileLayout& allocate_file(LayoutManifest& manifest, const std::string& path,
                                 std::uint64_t size, std::uint64_t& next_device_offset,
                                 std::uint64_t capacity_blocks) {
  FileLayout layout;
  layout.path = path;
  layout.size = size;
  if (size > 0) {
    const std::uint64_t alloc = (size + kExtentSize - 1) / kExtentSize * kExtentSize;
    if ((next_device_offset + alloc) / kBlockSize > capacity_blocks) {
      throw CapacityError("image too small for corpus file: " + path);
    }
    layout.extents.push_back({next_device_offset, alloc, 0});
    next_device_offset += alloc;
  }
  manifest.files.push_back(std::move(layout));
  return manifest.files.back();
}

// Lays a directory tree out onto the block device and emits the manifest.
// Replaces a filesystem metadata scan: the layout is recorded at write time.
inline LayoutManifest layout_from_corpus(const fs::path& corpus_dir, ImageWriter& writer) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(corpus_dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());

  LayoutManifest manifest;
  std::uint64_t next_offset = 0;
  for (const auto& path : paths) {
    const Bytes content = read_file(path);
    std::string rel = fs::relative(path, corpus_dir).generic_string();
    FileLayout& layout =
        allocate_file(manifest, rel, content.size(), next_offset, writer.capacity_blocks());
    write_through_extents(layout, content, writer);
  }
  return manifest;
}

// In-memory variant for generated corpora.
inline LayoutManifest layout_from_files(const std::vector<std::pair<std::string, Bytes>>& files,
                                        ImageWriter& writer) {
  LayoutManifest manifest;
  std::uint64_t next_offset = 0;
  for (const auto& [path, content] : files) {
    FileLayout& layout =
        allocate_file(manifest, path, content.size(), next_offset, writer.capacity_blocks());
    write_through_extents(layout, content, writer);
  }
  return manifest;
}

// Zero-copy view of a file that occupies one contiguous extent; files with
// holes or fragmentation fall back to read_file_from_image.
inline std::optional<ByteSpan> file_view_from_image(const snapstore::BlockImage& image,
                                                    const FileLayout& file) {
  if (file.size == 0) return ByteSpan{};
  if (file.extents.size() != 1 || file.extents[0].file_offset != 0 ||
      file.extents[0].length < file.size) {
    return std::nullopt;
  }
  return ByteSpan(image.payload).subspan(file.extents[0].device_offset, file.size);
}

// Reconstructs one file's bytes from a device image via its layout entry.
inline Bytes read_file_from_image(const snapstore::BlockImage& image, const FileLayout& file) {
  Bytes out(file.size, 0);
  for (const auto& extent : file.extents) {
    if (extent.file_offset >= file.size) continue;
    const std::uint64_t usable = std::min<std::uint64_t>(extent.length, file.size - extent.file_offset);
    std::memcpy(out.data() + extent.file_offset, image.payload.data() + extent.device_offset, usable);
  }
  return out;
}

}  // namespace favscan::mapping
