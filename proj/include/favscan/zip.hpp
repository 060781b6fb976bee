#pragma once

#include <zlib.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "favscan/common.hpp"
#include "favscan/hash.hpp"

namespace favscan::zip {

inline constexpr std::uint32_t kLfhSig = 0x04034b50;
inline constexpr std::uint32_t kCdSig = 0x02014b50;
inline constexpr std::uint32_t kEocdSig = 0x06054b50;
inline constexpr std::uint32_t kDescSig = 0x08074b50;

inline constexpr std::uint16_t kMethodStore = 0;
inline constexpr std::uint16_t kMethodDeflate = 8;

struct MemberInfo {
  std::string name;
  std::uint16_t flags = 0;
  std::uint16_t method = 0;
  std::uint32_t crc32 = 0;
  std::uint64_t comp_size = 0;
  std::uint64_t uncomp_size = 0;
  ByteRange lfh_range;
  ByteRange payload_range;
  ByteRange descriptor_range;  // empty unless flag bit 3 is set

  bool encrypted() const { return flags & 0x1; }
};

// Structural decomposition of a ZIP container: metadata, member payloads, and
// unclaimed gaps. Field inconsistencies found while walking the structures
// are collected rather than thrown; the validator decides what they mean.
struct ContainerMap {
  ByteRange eocd;
  ByteRange central_directory;
  std::vector<MemberInfo> members;
  std::vector<ByteRange> gaps;
  std::vector<std::string> violations;
};

namespace detail {

inline std::uint16_t rd16(ByteSpan d, std::size_t pos) {
  return static_cast<std::uint16_t>(d[pos] | (d[pos + 1] << 8));
}
inline std::uint32_t rd32(ByteSpan d, std::size_t pos) {
  return static_cast<std::uint32_t>(d[pos]) | (static_cast<std::uint32_t>(d[pos + 1]) << 8) |
         (static_cast<std::uint32_t>(d[pos + 2]) << 16) | (static_cast<std::uint32_t>(d[pos + 3]) << 24);
}

inline std::optional<std::size_t> find_eocd(ByteSpan file) {
  if (file.size() < 22) return std::nullopt;
  const std::size_t lowest = file.size() >= 22 + 65535 ? file.size() - 22 - 65535 : 0;
  for (std::size_t pos = file.size() - 22; ; --pos) {
    if (rd32(file, pos) == kEocdSig) {
      const std::uint16_t comment_len = rd16(file, pos + 20);
      if (pos + 22 + comment_len == file.size()) return pos;
    }
    if (pos == lowest) break;
  }
  return std::nullopt;
}

}  // namespace detail

inline std::optional<ContainerMap> parse(ByteSpan file) {
  const auto eocd_pos = detail::find_eocd(file);
  if (!eocd_pos) return std::nullopt;

  ContainerMap map;
  map.eocd = {*eocd_pos, file.size() - *eocd_pos};

  const std::uint16_t total_entries = detail::rd16(file, *eocd_pos + 10);
  const std::uint32_t cd_size = detail::rd32(file, *eocd_pos + 12);
  const std::uint32_t cd_offset = detail::rd32(file, *eocd_pos + 16);
  map.central_directory = {cd_offset, cd_size};

  if (static_cast<std::uint64_t>(cd_offset) + cd_size > *eocd_pos) {
    map.violations.push_back("central directory extends past EOCD");
    return map;
  }

  std::size_t pos = cd_offset;
  const std::size_t cd_end = cd_offset + cd_size;
  for (std::uint32_t i = 0; i < total_entries; ++i) {
    if (pos + 46 > cd_end || detail::rd32(file, pos) != kCdSig) {
      map.violations.push_back("central directory entry " + std::to_string(i) + " malformed");
      return map;
    }
    MemberInfo m;
    m.flags = detail::rd16(file, pos + 8);
    m.method = detail::rd16(file, pos + 10);
    m.crc32 = detail::rd32(file, pos + 16);
    m.comp_size = detail::rd32(file, pos + 20);
    m.uncomp_size = detail::rd32(file, pos + 24);
    const std::uint16_t name_len = detail::rd16(file, pos + 28);
    const std::uint16_t extra_len = detail::rd16(file, pos + 30);
    const std::uint16_t comment_len = detail::rd16(file, pos + 32);
    const std::uint32_t lfh_offset = detail::rd32(file, pos + 42);
    if (pos + 46 + name_len > cd_end) {
      map.violations.push_back("central directory name overruns");
      return map;
    }
    m.name.assign(reinterpret_cast<const char*>(file.data() + pos + 46), name_len);
    pos += 46 + name_len + extra_len + comment_len;

    // Cross-check the local header against the directory entry.
    if (static_cast<std::uint64_t>(lfh_offset) + 30 > file.size() ||
        detail::rd32(file, lfh_offset) != kLfhSig) {
      map.violations.push_back("local header signature missing for " + m.name);
      map.members.push_back(std::move(m));
      continue;
    }
    const std::uint16_t lfh_flags = detail::rd16(file, lfh_offset + 6);
    const std::uint16_t lfh_method = detail::rd16(file, lfh_offset + 8);
    const std::uint32_t lfh_crc = detail::rd32(file, lfh_offset + 14);
    const std::uint32_t lfh_comp = detail::rd32(file, lfh_offset + 18);
    const std::uint32_t lfh_uncomp = detail::rd32(file, lfh_offset + 22);
    const std::uint16_t lfh_name_len = detail::rd16(file, lfh_offset + 26);
    const std::uint16_t lfh_extra_len = detail::rd16(file, lfh_offset + 28);
    const std::size_t header_end = lfh_offset + 30 + lfh_name_len + lfh_extra_len;
    if (header_end > file.size()) {
      map.violations.push_back("local header overruns file for " + m.name);
      map.members.push_back(std::move(m));
      continue;
    }
    const std::string lfh_name(reinterpret_cast<const char*>(file.data() + lfh_offset + 30), lfh_name_len);
    if (lfh_name != m.name) map.violations.push_back("local/central name mismatch for " + m.name);
    if (lfh_method != m.method) map.violations.push_back("local/central method mismatch for " + m.name);
    const bool has_descriptor = (lfh_flags & 0x8) != 0;
    if (!has_descriptor) {
      if (lfh_crc != m.crc32 || lfh_comp != m.comp_size || lfh_uncomp != m.uncomp_size) {
        map.violations.push_back("local/central field mismatch for " + m.name);
      }
    }

    m.lfh_range = {lfh_offset, 30ull + lfh_name_len + lfh_extra_len};
    m.payload_range = {header_end, m.comp_size};
    if (m.payload_range.end() > file.size()) {
      map.violations.push_back("member payload overruns file for " + m.name);
      m.payload_range.length = 0;
      map.members.push_back(std::move(m));
      continue;
    }
    if (has_descriptor) {
      std::size_t desc_pos = m.payload_range.end();
      std::size_t desc_len = 0;
      if (desc_pos + 16 <= file.size() && detail::rd32(file, desc_pos) == kDescSig) {
        desc_len = 16;
        if (detail::rd32(file, desc_pos + 4) != m.crc32) {
          map.violations.push_back("data descriptor mismatch for " + m.name);
        }
      } else if (desc_pos + 12 <= file.size()) {
        desc_len = 12;
        if (detail::rd32(file, desc_pos) != m.crc32) {
          map.violations.push_back("data descriptor mismatch for " + m.name);
        }
      }
      m.descriptor_range = {desc_pos, desc_len};
    }
    map.members.push_back(std::move(m));
  }

  // Claimed coverage: metadata, headers, payloads. Anything else is a gap.
  std::vector<ByteRange> claimed{map.eocd, map.central_directory};
  for (const auto& m : map.members) {
    claimed.push_back(m.lfh_range);
    claimed.push_back(m.payload_range);
    if (!m.descriptor_range.empty()) claimed.push_back(m.descriptor_range);
  }
  std::vector<ByteRange> payloads;
  for (const auto& m : map.members) {
    if (!m.payload_range.empty()) payloads.push_back(m.payload_range);
  }
  std::sort(payloads.begin(), payloads.end(),
            [](const ByteRange& a, const ByteRange& b) { return a.offset < b.offset; });
  for (std::size_t i = 1; i < payloads.size(); ++i) {
    if (payloads[i].offset < payloads[i - 1].end()) {
      map.violations.push_back("member payloads overlap");
      break;
    }
  }
  const auto merged = coalesce_ranges(std::move(claimed));
  std::uint64_t cursor = 0;
  for (const auto& r : merged) {
    if (r.offset > cursor) map.gaps.push_back({cursor, r.offset - cursor});
    cursor = std::max(cursor, r.end());
  }
  if (cursor < file.size()) map.gaps.push_back({cursor, file.size() - cursor});

  return map;
}

// Raw DEFLATE inflation with an output cap. Returns nullopt on any stream
// error or when the cap would be exceeded.
inline std::optional<Bytes> inflate_raw(ByteSpan comp, std::uint64_t max_out) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) return std::nullopt;
  Bytes out;
  out.reserve(std::min<std::uint64_t>(max_out, comp.size() * 4 + 64));
  std::uint8_t buffer[16384];
  zs.next_in = const_cast<Bytef*>(comp.data());
  zs.avail_in = static_cast<uInt>(comp.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buffer;
    zs.avail_out = sizeof(buffer);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      return std::nullopt;
    }
    const std::size_t produced = sizeof(buffer) - zs.avail_out;
    if (out.size() + produced > max_out) {
      inflateEnd(&zs);
      return std::nullopt;
    }
    out.insert(out.end(), buffer, buffer + produced);
    if (rc == Z_OK && zs.avail_in == 0 && produced == 0) {
      inflateEnd(&zs);
      return std::nullopt;  // truncated stream
    }
  }
  inflateEnd(&zs);
  if (zs.avail_in != 0) return std::nullopt;  // trailing junk in the member
  return out;
}

// Decodes a member to its stored content. nullopt means the payload cannot
// be the bytes the directory promised.
inline std::optional<Bytes> decode_member(ByteSpan file, const MemberInfo& m, std::uint64_t max_out) {
  const ByteSpan payload = file.subspan(m.payload_range.offset, m.payload_range.length);
  if (m.method == kMethodStore) {
    if (m.comp_size != m.uncomp_size) return std::nullopt;
    if (payload.size() > max_out) return std::nullopt;
    return Bytes(payload.begin(), payload.end());
  }
  if (m.method == kMethodDeflate) {
    auto inflated = inflate_raw(payload, max_out);
    if (!inflated || inflated->size() != m.uncomp_size) return std::nullopt;
    return inflated;
  }
  return std::nullopt;  // unsupported method
}

}  // namespace favscan::zip
