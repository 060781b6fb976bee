#pragma once

#include <zlib.h>

#include <cstdint>
#include <string>
#include <vector>

#include "favscan/common.hpp"
#include "favscan/hash.hpp"
#include "favscan/zip.hpp"

namespace favscan::zipwrite {

// Minimal ZIP packager. Emits LFH+payload sequences, then the central
// directory, then EOCD, leaving no unclaimed gaps and no data descriptors.
// Encrypted members carry the general-purpose encryption flag and an opaque
// payload that is stored as-is.

struct MemberSpec {
  std::string name;
  Bytes data;
  bool store = false;           // STORE instead of DEFLATE
  bool encrypted_stub = false;  // flag bit 0, payload kept verbatim
};

namespace detail {

inline void put16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline Bytes deflate_raw(ByteSpan data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflateInit2 failed");
  }
  Bytes out(deflateBound(&zs, static_cast<uLong>(data.size())));
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  if (deflate(&zs, Z_FINISH) != Z_STREAM_END) {
    deflateEnd(&zs);
    throw std::runtime_error("deflate failed");
  }
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

// Fixed timestamp so archives are byte-reproducible.
inline constexpr std::uint16_t kDosTime = 0;
inline constexpr std::uint16_t kDosDate = ((2024 - 1980) << 9) | (1 << 5) | 1;

}  // namespace detail

inline Bytes write_zip(const std::vector<MemberSpec>& members) {
  Bytes out;
  struct CdRecord {
    std::string name;
    std::uint16_t flags;
    std::uint16_t method;
    std::uint32_t crc;
    std::uint32_t comp_size;
    std::uint32_t uncomp_size;
    std::uint32_t lfh_offset;
  };
  std::vector<CdRecord> records;

  for (const auto& m : members) {
    CdRecord rec;
    rec.name = m.name;
    rec.lfh_offset = static_cast<std::uint32_t>(out.size());
    rec.crc = crc32_of(m.data);
    rec.uncomp_size = static_cast<std::uint32_t>(m.data.size());

    Bytes payload;
    if (m.encrypted_stub) {
      rec.flags = 0x1;
      rec.method = zip::kMethodStore;
      payload = m.data;
      rec.comp_size = static_cast<std::uint32_t>(payload.size());
      rec.uncomp_size = rec.comp_size;
    } else if (m.store) {
      rec.flags = 0;
      rec.method = zip::kMethodStore;
      payload = m.data;
      rec.comp_size = rec.uncomp_size;
    } else {
      rec.flags = 0;
      rec.method = zip::kMethodDeflate;
      payload = detail::deflate_raw(m.data);
      rec.comp_size = static_cast<std::uint32_t>(payload.size());
    }

    detail::put32(out, zip::kLfhSig);
    detail::put16(out, 20);  // version needed
    detail::put16(out, rec.flags);
    detail::put16(out, rec.method);
    detail::put16(out, detail::kDosTime);
    detail::put16(out, detail::kDosDate);
    detail::put32(out, rec.crc);
    detail::put32(out, rec.comp_size);
    detail::put32(out, rec.uncomp_size);
    detail::put16(out, static_cast<std::uint16_t>(rec.name.size()));
    detail::put16(out, 0);  // extra length
    out.insert(out.end(), rec.name.begin(), rec.name.end());
    out.insert(out.end(), payload.begin(), payload.end());

    records.push_back(std::move(rec));
  }

  const std::uint32_t cd_offset = static_cast<std::uint32_t>(out.size());
  for (const auto& rec : records) {
    detail::put32(out, zip::kCdSig);
    detail::put16(out, 20);  // version made by
    detail::put16(out, 20);  // version needed
    detail::put16(out, rec.flags);
    detail::put16(out, rec.method);
    detail::put16(out, detail::kDosTime);
    detail::put16(out, detail::kDosDate);
    detail::put32(out, rec.crc);
    detail::put32(out, rec.comp_size);
    detail::put32(out, rec.uncomp_size);
    detail::put16(out, static_cast<std::uint16_t>(rec.name.size()));
    detail::put16(out, 0);  // extra length
    detail::put16(out, 0);  // comment length
    detail::put16(out, 0);  // disk number start
    detail::put16(out, 0);  // internal attributes
    detail::put32(out, 0);  // external attributes
    detail::put32(out, rec.lfh_offset);
    out.insert(out.end(), rec.name.begin(), rec.name.end());
  }
  const std::uint32_t cd_size = static_cast<std::uint32_t>(out.size()) - cd_offset;

  detail::put32(out, zip::kEocdSig);
  detail::put16(out, 0);  // disk number
  detail::put16(out, 0);  // cd start disk
  detail::put16(out, static_cast<std::uint16_t>(records.size()));
  detail::put16(out, static_cast<std::uint16_t>(records.size()));
  detail::put32(out, cd_size);
  detail::put32(out, cd_offset);
  detail::put16(out, 0);  // comment length

  return out;
}

}  // namespace favscan::zipwrite
