#pragma once

#include <zlib.h>

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "favscan/common.hpp"

namespace favscan::pdf {

enum class StreamClass { Image, Font, Metadata, ObjectStream, EmbeddedFile, Generic };

struct PredictorParms {
  int predictor = 1;
  int columns = 1;
  int colors = 1;
  int bits_per_component = 8;
};

struct PdfObject {
  int num = 0;
  int gen = 0;
  ByteRange full;          // "N G obj" through "endobj"
  ByteRange dict;          // << ... >>, empty when the object has none
  bool has_stream = false;
  ByteRange stream_payload;
  std::vector<std::string> filters;           // in application order
  std::vector<PredictorParms> decode_parms;   // parallel to filters (defaulted)
  StreamClass cls = StreamClass::Generic;
  std::optional<std::uint64_t> declared_length;
};

// Byte-accurate decomposition of a PDF file: header, objects with stream
// payload ranges, xref/trailer machinery, whitespace/comments, and gaps that
// none of those claim. Inconsistencies are collected as violations.
struct PdfMap {
  ByteRange header;
  std::vector<PdfObject> objects;
  std::vector<ByteRange> structural;  // xref, trailer, startxref, %%EOF, filler
  std::vector<ByteRange> gaps;
  std::vector<std::string> violations;
  std::optional<std::uint64_t> startxref_value;
  std::optional<std::uint64_t> xref_offset;

  const PdfObject* object_at(std::uint64_t pos) const {
    for (const auto& o : objects) {
      if (o.full.contains(pos)) return &o;
    }
    return nullptr;
  }
};

namespace detail {

inline bool is_ws(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\0';
}
inline bool is_digit(std::uint8_t c) { return c >= '0' && c <= '9'; }
inline bool is_delim(std::uint8_t c) {
  return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' ||
         c == '}' || c == '/' || c == '%';
}

inline bool starts_with(ByteSpan d, std::size_t pos, const char* lit) {
  std::size_t len = 0;
  while (lit[len] != '\0') ++len;
  if (pos + len > d.size()) return false;
  for (std::size_t i = 0; i < len; ++i) {
    if (d[pos + i] != static_cast<std::uint8_t>(lit[i])) return false;
  }
  return true;
}

inline std::optional<std::size_t> find_before(ByteSpan d, std::size_t pos, std::size_t end,
                                              const char* lit) {
  std::size_t len = 0;
  while (lit[len] != '\0') ++len;
  end = std::min(end, d.size());
  if (len == 0 || end < len) return std::nullopt;
  for (std::size_t i = pos; i + len <= end; ++i) {
    if (starts_with(d, i, lit)) return i;
  }
  return std::nullopt;
}

inline std::optional<std::size_t> find(ByteSpan d, std::size_t pos, const char* lit) {
  return find_before(d, pos, d.size(), lit);
}

// Well-formed dictionary scans may run this far (large /Kids arrays and the
// like); a malformed key aborts after the much shorter bail window.
inline constexpr std::size_t kMaxDictScan = 262144;
inline constexpr std::size_t kDictBailWindow = 4096;

// Past this many inconsistencies the file is conclusively invalid and the
// remainder is treated as one unclaimed region; deeper structure recovery
// would not change any verdict.
inline constexpr std::size_t kMaxViolations = 8;

// Skips one object-syntax value: number, name, string, hex string, array,
// dictionary, keyword, or "N G R" reference. Returns the end offset.
inline std::size_t skip_value(ByteSpan d, std::size_t pos);

inline std::size_t skip_ws_only(ByteSpan d, std::size_t pos) {
  while (pos < d.size() && is_ws(d[pos])) ++pos;
  return pos;
}

inline std::size_t skip_dict(ByteSpan d, std::size_t pos) {  // at "<<"
  const std::size_t limit = std::min(d.size(), pos + kMaxDictScan);
  pos += 2;
  while (pos < limit) {
    pos = skip_ws_only(d, pos);
    if (pos + 1 < d.size() && d[pos] == '>' && d[pos + 1] == '>') return pos + 2;
    if (pos >= limit) break;
    if (d[pos] == '/') {
      ++pos;
      while (pos < d.size() && !is_ws(d[pos]) && !is_delim(d[pos])) ++pos;
      pos = skip_value(d, skip_ws_only(d, pos));
    } else {
      // Malformed key; bail to the enclosing terminator within a short window.
      auto end = find_before(d, pos, pos + kDictBailWindow, ">>");
      return end ? *end + 2 : std::min(pos + kDictBailWindow, d.size());
    }
  }
  return std::min(limit, d.size());
}

inline std::size_t skip_value(ByteSpan d, std::size_t pos) {
  if (pos >= d.size()) return pos;
  const std::uint8_t c = d[pos];
  if (c == '<' && pos + 1 < d.size() && d[pos + 1] == '<') return skip_dict(d, pos);
  if (c == '<') {
    ++pos;
    while (pos < d.size() && d[pos] != '>') ++pos;
    return pos < d.size() ? pos + 1 : pos;
  }
  if (c == '(') {
    int depth = 1;
    ++pos;
    while (pos < d.size() && depth > 0) {
      if (d[pos] == '\\') {
        pos += 2;
        continue;
      }
      if (d[pos] == '(') ++depth;
      if (d[pos] == ')') --depth;
      ++pos;
    }
    return pos;
  }
  if (c == '[') {
    ++pos;
    while (pos < d.size() && d[pos] != ']') {
      pos = skip_value(d, skip_ws_only(d, pos));
    }
    return pos < d.size() ? pos + 1 : pos;
  }
  if (c == '/') {
    ++pos;
    while (pos < d.size() && !is_ws(d[pos]) && !is_delim(d[pos])) ++pos;
    return pos;
  }
  // Number, keyword, or "N G R" reference.
  std::size_t start = pos;
  while (pos < d.size() && !is_ws(d[pos]) && !is_delim(d[pos])) ++pos;
  if (pos == start) return pos + 1;  // stray delimiter: consume it
  // Lookahead for a reference: integer integer R.
  bool numeric = pos > start;
  for (std::size_t i = start; i < pos && numeric; ++i) {
    if (!is_digit(d[i]) && d[i] != '+' && d[i] != '-' && d[i] != '.') numeric = false;
  }
  if (numeric) {
    std::size_t p2 = skip_ws_only(d, pos);
    std::size_t gen_start = p2;
    while (p2 < d.size() && is_digit(d[p2])) ++p2;
    if (p2 > gen_start) {
      std::size_t p3 = skip_ws_only(d, p2);
      if (p3 < d.size() && d[p3] == 'R' &&
          (p3 + 1 == d.size() || is_ws(d[p3 + 1]) || is_delim(d[p3 + 1]))) {
        return p3 + 1;
      }
    }
  }
  return pos;
}

struct DictView {
  ByteSpan file;
  ByteRange range;

  // Offset of the value for /key, or nullopt. Scans only the top level.
  std::optional<std::size_t> value_of(const std::string& key) const {
    std::size_t pos = range.offset + 2;
    const std::size_t end = range.end();
    while (pos < end) {
      pos = skip_ws_only(file, pos);
      if (pos + 1 < end && file[pos] == '>' && file[pos + 1] == '>') break;
      if (pos >= end || file[pos] != '/') break;
      std::size_t name_start = ++pos;
      while (pos < end && !is_ws(file[pos]) && !is_delim(file[pos])) ++pos;
      const std::string name(reinterpret_cast<const char*>(file.data() + name_start), pos - name_start);
      pos = skip_ws_only(file, pos);
      if (name == key) return pos;
      pos = skip_value(file, pos);
    }
    return std::nullopt;
  }

  std::optional<std::int64_t> integer(const std::string& key) const {
    auto pos = value_of(key);
    if (!pos) return std::nullopt;
    std::size_t p = *pos;
    bool neg = false;
    if (p < range.end() && (file[p] == '+' || file[p] == '-')) neg = file[p++] == '-';
    if (p >= range.end() || !is_digit(file[p])) return std::nullopt;
    std::int64_t v = 0;
    while (p < range.end() && is_digit(file[p])) v = v * 10 + (file[p++] - '0');
    // A following "G R" pattern means this was an indirect reference.
    std::size_t q = skip_ws_only(file, p);
    std::size_t g = q;
    while (q < range.end() && is_digit(file[q])) ++q;
    if (q > g) {
      std::size_t r = skip_ws_only(file, q);
      if (r < range.end() && file[r] == 'R') return std::nullopt;
    }
    return neg ? -v : v;
  }

  std::optional<std::string> name(const std::string& key) const {
    auto pos = value_of(key);
    if (!pos || *pos >= range.end() || file[*pos] != '/') return std::nullopt;
    std::size_t p = *pos + 1;
    std::size_t start = p;
    while (p < range.end() && !is_ws(file[p]) && !is_delim(file[p])) ++p;
    return std::string(reinterpret_cast<const char*>(file.data() + start), p - start);
  }

  std::vector<std::string> name_array(const std::string& key) const {
    std::vector<std::string> out;
    auto pos = value_of(key);
    if (!pos) return out;
    std::size_t p = *pos;
    if (p < range.end() && file[p] == '/') {
      std::size_t start = ++p;
      while (p < range.end() && !is_ws(file[p]) && !is_delim(file[p])) ++p;
      out.emplace_back(reinterpret_cast<const char*>(file.data() + start), p - start);
      return out;
    }
    if (p < range.end() && file[p] == '[') {
      ++p;
      while (p < range.end()) {
        p = skip_ws_only(file, p);
        if (p >= range.end() || file[p] == ']') break;
        if (file[p] != '/') {
          p = skip_value(file, p);
          continue;
        }
        std::size_t start = ++p;
        while (p < range.end() && !is_ws(file[p]) && !is_delim(file[p])) ++p;
        out.emplace_back(reinterpret_cast<const char*>(file.data() + start), p - start);
      }
    }
    return out;
  }

  bool has(const std::string& key) const { return value_of(key).has_value(); }

  std::optional<ByteRange> sub_dict(const std::string& key) const {
    auto pos = value_of(key);
    if (!pos || *pos + 1 >= range.end() || file[*pos] != '<' || file[*pos + 1] != '<') return std::nullopt;
    const std::size_t end = skip_dict(file, *pos);
    return ByteRange{*pos, end - *pos};
  }
};

inline std::vector<PredictorParms> parse_decode_parms(const DictView& dict, std::size_t filter_count,
                                                      ByteSpan file) {
  std::vector<PredictorParms> out(filter_count);
  auto read_one = [&](ByteRange sub) {
    DictView v{file, sub};
    PredictorParms p;
    if (auto x = v.integer("Predictor")) p.predictor = static_cast<int>(*x);
    if (auto x = v.integer("Columns")) p.columns = static_cast<int>(*x);
    if (auto x = v.integer("Colors")) p.colors = static_cast<int>(*x);
    if (auto x = v.integer("BitsPerComponent")) p.bits_per_component = static_cast<int>(*x);
    return p;
  };
  auto parms_key = dict.has("DecodeParms") ? std::string("DecodeParms") : std::string("DP");
  auto pos = dict.value_of(parms_key);
  if (!pos || filter_count == 0) return out;
  std::size_t p = *pos;
  if (file[p] == '<' && p + 1 < dict.range.end() && file[p + 1] == '<') {
    const std::size_t end = skip_dict(file, p);
    out[0] = read_one({p, end - p});
    return out;
  }
  if (file[p] == '[') {
    ++p;
    std::size_t idx = 0;
    while (p < dict.range.end() && idx < filter_count) {
      p = skip_ws_only(file, p);
      if (p >= dict.range.end() || file[p] == ']') break;
      if (file[p] == '<' && p + 1 < dict.range.end() && file[p + 1] == '<') {
        const std::size_t end = skip_dict(file, p);
        out[idx++] = read_one({p, end - p});
        p = end;
      } else {
        p = skip_value(file, p);  // null placeholder
        ++idx;
      }
    }
  }
  return out;
}

inline StreamClass classify_stream(const DictView& dict) {
  if (auto sub = dict.name("Subtype")) {
    if (*sub == "Image") return StreamClass::Image;
    if (*sub == "Type1C" || *sub == "CIDFontType0C" || *sub == "OpenType") return StreamClass::Font;
    if (*sub == "XML") return StreamClass::Metadata;
  }
  if (auto type = dict.name("Type")) {
    if (*type == "Metadata") return StreamClass::Metadata;
    if (*type == "ObjStm") return StreamClass::ObjectStream;
    if (*type == "EmbeddedFile") return StreamClass::EmbeddedFile;
    if (*type == "XObject") return StreamClass::Generic;
  }
  if (dict.has("Length1") || dict.has("FontFile")) return StreamClass::Font;
  return StreamClass::Generic;
}

}  // namespace detail

inline std::optional<PdfMap> parse(ByteSpan file) {
  if (file.empty()) return std::nullopt;
  PdfMap map;

  // Header line.
  std::size_t pos = 0;
  if (detail::starts_with(file, 0, "%PDF-1.")) {
    std::size_t eol = 0;
    while (eol < file.size() && file[eol] != '\n' && file[eol] != '\r') ++eol;
    while (eol < file.size() && (file[eol] == '\n' || file[eol] == '\r')) ++eol;
    map.header = {0, eol};
    pos = eol;
  } else {
    map.violations.push_back("missing %PDF-1.x header");
    map.header = {0, 0};
  }

  auto push_structural = [&](std::uint64_t begin, std::uint64_t end) {
    if (end > begin) map.structural.push_back({begin, end - begin});
  };

  while (pos < file.size()) {
    if (map.violations.size() >= detail::kMaxViolations) {
      map.violations.push_back("analysis stopped: structure conclusively invalid");
      map.gaps.push_back({pos, file.size() - pos});
      return map;
    }
    // Whitespace and comments between top-level constructs are structural.
    const std::size_t filler_start = pos;
    while (pos < file.size()) {
      if (detail::is_ws(file[pos])) {
        ++pos;
        continue;
      }
      if (file[pos] == '%' && !detail::starts_with(file, pos, "%%EOF")) {
        while (pos < file.size() && file[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    push_structural(filler_start, pos);
    if (pos >= file.size()) break;

    if (detail::starts_with(file, pos, "%%EOF")) {
      std::size_t end = pos + 5;
      while (end < file.size() && (file[end] == '\r' || file[end] == '\n')) ++end;
      push_structural(pos, end);
      pos = end;
      continue;
    }

    if (detail::starts_with(file, pos, "xref")) {
      const std::size_t section_start = pos;
      map.xref_offset = pos;
      pos += 4;
      while (pos < file.size() && (file[pos] == '\r' || file[pos] == '\n')) ++pos;
      // Subsections: "start count" then fixed 20-byte entries.
      bool ok = true;
      while (pos < file.size() && detail::is_digit(file[pos])) {
        std::uint64_t first = 0, count = 0;
        while (pos < file.size() && detail::is_digit(file[pos])) first = first * 10 + (file[pos++] - '0');
        if (pos >= file.size() || file[pos] != ' ') {
          ok = false;
          break;
        }
        ++pos;
        while (pos < file.size() && detail::is_digit(file[pos])) count = count * 10 + (file[pos++] - '0');
        while (pos < file.size() && (file[pos] == '\r' || file[pos] == '\n' || file[pos] == ' ')) ++pos;
        if (pos + count * 20 > file.size()) {
          ok = false;
          break;
        }
        for (std::uint64_t i = 0; i < count; ++i) {
          const std::size_t e = pos + i * 20;
          bool entry_ok = true;
          for (int k = 0; k < 10; ++k) entry_ok &= detail::is_digit(file[e + k]);
          entry_ok &= file[e + 10] == ' ';
          for (int k = 11; k < 16; ++k) entry_ok &= detail::is_digit(file[e + k]);
          entry_ok &= file[e + 16] == ' ';
          entry_ok &= file[e + 17] == 'n' || file[e + 17] == 'f';
          if (!entry_ok) {
            map.violations.push_back("malformed xref entry " + std::to_string(first + i));
            ok = false;
            continue;
          }
          if (file[e + 17] == 'n') {
            std::uint64_t off = 0;
            for (int k = 0; k < 10; ++k) off = off * 10 + (file[e + k] - '0');
            // Offsets must land on the matching object header.
            char expect[32];
            const int len = std::snprintf(expect, sizeof(expect), "%llu",
                                          static_cast<unsigned long long>(first + i));
            bool points_ok = off < file.size() && detail::starts_with(file, off, expect) &&
                             off + len < file.size() && file[off + len] == ' ';
            if (!points_ok) {
              map.violations.push_back("xref offset does not reach object " +
                                       std::to_string(first + i));
            }
          }
        }
        pos += count * 20;
      }
      if (!ok) map.violations.push_back("malformed xref table");
      push_structural(section_start, pos);
      continue;
    }

    if (detail::starts_with(file, pos, "trailer")) {
      const std::size_t start = pos;
      pos = detail::skip_ws_only(file, pos + 7);
      if (pos + 1 < file.size() && file[pos] == '<' && file[pos + 1] == '<') {
        pos = detail::skip_dict(file, pos);
      } else {
        map.violations.push_back("trailer without dictionary");
      }
      push_structural(start, pos);
      continue;
    }

    if (detail::starts_with(file, pos, "startxref")) {
      const std::size_t start = pos;
      pos = detail::skip_ws_only(file, pos + 9);
      std::uint64_t v = 0;
      bool any = false;
      while (pos < file.size() && detail::is_digit(file[pos])) {
        v = v * 10 + (file[pos++] - '0');
        any = true;
      }
      if (any) {
        map.startxref_value = v;
      } else {
        map.violations.push_back("startxref without offset");
      }
      push_structural(start, pos);
      continue;
    }

    // Object header: "N G obj".
    std::size_t p = pos;
    std::uint64_t num = 0, gen = 0;
    bool is_obj = detail::is_digit(file[p]);
    while (p < file.size() && detail::is_digit(file[p])) num = num * 10 + (file[p++] - '0');
    if (is_obj && p < file.size() && file[p] == ' ') {
      ++p;
      const std::size_t gstart = p;
      while (p < file.size() && detail::is_digit(file[p])) gen = gen * 10 + (file[p++] - '0');
      is_obj = p > gstart && detail::starts_with(file, p, " obj");
      if (is_obj) p += 4;
    } else {
      is_obj = false;
    }

    if (!is_obj) {
      // Unparseable content: resynchronize at the next plausible construct,
      // searching in bounded windows so corrupted files stay linear to scan.
      map.violations.push_back("unparseable content at offset " + std::to_string(pos));
      std::size_t next = file.size();
      std::size_t cursor = pos + 1;
      while (cursor < file.size()) {
        const std::size_t window_end = std::min(file.size(), cursor + 65536);
        std::size_t best = file.size();
        for (const char* marker : {" obj", "xref", "trailer", "startxref", "%%EOF"}) {
          if (auto hit = detail::find_before(file, cursor, window_end + 12, marker)) {
            best = std::min(best, *hit);
          }
        }
        if (best != file.size()) {
          next = best;
          break;
        }
        if (window_end == file.size()) break;
        cursor = window_end - 12;
      }
      if (next != file.size()) {
        // Back up to the start of the line containing the marker.
        while (next > pos + 1 && file[next - 1] != '\n' && file[next - 1] != '\r') --next;
      }
      map.gaps.push_back({pos, next - pos});
      pos = next;
      if (pos == file.size()) break;
      continue;
    }

    PdfObject obj;
    obj.num = static_cast<int>(num);
    obj.gen = static_cast<int>(gen);
    obj.full.offset = pos;
    pos = detail::skip_ws_only(file, p);

    if (pos + 1 < file.size() && file[pos] == '<' && file[pos + 1] == '<') {
      const std::size_t dict_end = detail::skip_dict(file, pos);
      obj.dict = {pos, dict_end - pos};
      pos = dict_end;
    }

    // Optional stream payload.
    std::size_t after_dict = detail::skip_ws_only(file, pos);
    if (detail::starts_with(file, after_dict, "stream")) {
      std::size_t s = after_dict + 6;
      if (s < file.size() && file[s] == '\r') ++s;
      if (s < file.size() && file[s] == '\n') ++s;
      obj.has_stream = true;
      detail::DictView dict{file, obj.dict};
      obj.declared_length = std::nullopt;
      if (auto len = dict.integer("Length"); len && *len >= 0) {
        obj.declared_length = static_cast<std::uint64_t>(*len);
      }
      std::size_t payload_end;
      if (obj.declared_length && s + *obj.declared_length <= file.size()) {
        payload_end = s + *obj.declared_length;
        std::size_t q = payload_end;
        while (q < file.size() && (file[q] == '\r' || file[q] == '\n')) ++q;
        if (!detail::starts_with(file, q, "endstream")) {
          map.violations.push_back("stream length does not reach endstream in object " +
                                   std::to_string(obj.num));
          // Fall back to marker search so the payload range stays usable.
          if (auto e = detail::find(file, s, "endstream")) {
            payload_end = *e;
            while (payload_end > s && (file[payload_end - 1] == '\n' || file[payload_end - 1] == '\r')) {
              --payload_end;
            }
          }
        }
      } else {
        if (obj.declared_length) {
          map.violations.push_back("stream length overruns file in object " + std::to_string(obj.num));
        }
        auto e = detail::find(file, s, "endstream");
        if (!e) {
          map.violations.push_back("unterminated stream in object " + std::to_string(obj.num));
          obj.full.length = file.size() - obj.full.offset;
          map.objects.push_back(std::move(obj));
          break;
        }
        payload_end = *e;
        while (payload_end > s && (file[payload_end - 1] == '\n' || file[payload_end - 1] == '\r')) {
          --payload_end;
        }
      }
      obj.stream_payload = {s, payload_end - s};
      obj.filters = dict.name_array("Filter");
      if (obj.filters.empty()) obj.filters = dict.name_array("F");
      obj.decode_parms = detail::parse_decode_parms(dict, obj.filters.size(), file);
      obj.cls = detail::classify_stream(dict);
      auto es = detail::find(file, payload_end, "endstream");
      pos = es ? *es + 9 : file.size();
    } else if (!obj.dict.empty()) {
      detail::DictView dict{file, obj.dict};
      obj.cls = detail::classify_stream(dict);
    } else {
      // Value-only object body.
      pos = detail::skip_value(file, detail::skip_ws_only(file, pos));
    }

    std::size_t q = detail::skip_ws_only(file, pos);
    if (detail::starts_with(file, q, "endobj")) {
      pos = q + 6;
    } else {
      map.violations.push_back("missing endobj for object " + std::to_string(obj.num));
    }
    obj.full.length = pos - obj.full.offset;
    map.objects.push_back(std::move(obj));
  }

  if (map.startxref_value && map.xref_offset && *map.startxref_value != *map.xref_offset) {
    map.violations.push_back("startxref does not point at the xref table");
  }
  if (!map.startxref_value && map.xref_offset) {
    map.violations.push_back("missing startxref");
  }

  return map;
}

namespace detail {

inline std::optional<Bytes> inflate_zlib(ByteSpan comp, std::uint64_t max_out) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) return std::nullopt;
  Bytes out;
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
      return std::nullopt;
    }
  }
  inflateEnd(&zs);
  if (zs.avail_in != 0) return std::nullopt;
  return out;
}

inline std::optional<Bytes> undo_png_predictor(const Bytes& data, const PredictorParms& parms) {
  const int bpp = std::max(1, parms.colors * parms.bits_per_component / 8);
  const std::size_t row_bytes =
      (static_cast<std::size_t>(parms.columns) * parms.colors * parms.bits_per_component + 7) / 8;
  const std::size_t stride = row_bytes + 1;
  if (row_bytes == 0 || data.size() % stride != 0) return std::nullopt;
  const std::size_t rows = data.size() / stride;
  Bytes out(rows * row_bytes, 0);
  std::vector<std::uint8_t> prev(row_bytes, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t type = data[r * stride];
    const std::uint8_t* src = data.data() + r * stride + 1;
    std::uint8_t* dst = out.data() + r * row_bytes;
    for (std::size_t i = 0; i < row_bytes; ++i) {
      const int left = i >= static_cast<std::size_t>(bpp) ? dst[i - bpp] : 0;
      const int up = prev[i];
      const int upper_left = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      int value;
      switch (type) {
        case 0: value = src[i]; break;
        case 1: value = src[i] + left; break;
        case 2: value = src[i] + up; break;
        case 3: value = src[i] + (left + up) / 2; break;
        case 4: {
          const int p = left + up - upper_left;
          const int pa = std::abs(p - left), pb = std::abs(p - up), pc = std::abs(p - upper_left);
          const int pred = (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : upper_left);
          value = src[i] + pred;
          break;
        }
        default: return std::nullopt;
      }
      dst[i] = static_cast<std::uint8_t>(value);
    }
    std::copy(dst, dst + row_bytes, prev.begin());
  }
  return out;
}

inline std::optional<Bytes> ascii_hex_decode(ByteSpan data) {
  Bytes out;
  int hi = -1;
  for (std::uint8_t c : data) {
    if (is_ws(c)) continue;
    if (c == '>') break;
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else return std::nullopt;
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<std::uint8_t>((hi << 4) | v));
      hi = -1;
    }
  }
  if (hi >= 0) out.push_back(static_cast<std::uint8_t>(hi << 4));
  return out;
}

inline std::optional<Bytes> ascii85_decode(ByteSpan data) {
  Bytes out;
  std::uint32_t group = 0;
  int count = 0;
  std::size_t i = 0;
  while (i < data.size()) {
    const std::uint8_t c = data[i];
    if (is_ws(c)) {
      ++i;
      continue;
    }
    if (c == '~') break;
    if (c == 'z' && count == 0) {
      out.insert(out.end(), {0, 0, 0, 0});
      ++i;
      continue;
    }
    if (c < '!' || c > 'u') return std::nullopt;
    group = group * 85 + (c - '!');
    if (++count == 5) {
      for (int k = 3; k >= 0; --k) out.push_back(static_cast<std::uint8_t>(group >> (8 * k)));
      group = 0;
      count = 0;
    }
    ++i;
  }
  if (count == 1) return std::nullopt;
  if (count > 1) {
    for (int k = count; k < 5; ++k) group = group * 85 + 84;
    for (int k = 3; k >= 5 - count; --k) out.push_back(static_cast<std::uint8_t>(group >> (8 * k)));
  }
  return out;
}

inline std::optional<Bytes> run_length_decode(ByteSpan data, std::uint64_t max_out) {
  Bytes out;
  std::size_t i = 0;
  while (i < data.size()) {
    const std::uint8_t len = data[i++];
    if (len == 128) return out;
    if (len < 128) {
      if (i + len + 1 > data.size()) return std::nullopt;
      out.insert(out.end(), data.begin() + i, data.begin() + i + len + 1);
      i += len + 1;
    } else {
      if (i >= data.size()) return std::nullopt;
      out.insert(out.end(), 257 - len, data[i++]);
    }
    if (out.size() > max_out) return std::nullopt;
  }
  return std::nullopt;  // missing EOD marker
}

}  // namespace detail

inline bool filter_supported(const std::string& f) {
  return f == "FlateDecode" || f == "Fl" || f == "ASCIIHexDecode" || f == "AHx" ||
         f == "ASCII85Decode" || f == "A85" || f == "RunLengthDecode" || f == "RL";
}

inline bool filters_supported(const std::vector<std::string>& filters) {
  for (const auto& f : filters) {
    if (!filter_supported(f)) return false;
  }
  return true;
}

// Applies the declared filter chain in order. nullopt on any decode failure.
inline std::optional<Bytes> decode_stream(ByteSpan file, const PdfObject& obj, std::uint64_t max_out) {
  Bytes current(file.begin() + obj.stream_payload.offset,
                file.begin() + obj.stream_payload.end());
  for (std::size_t i = 0; i < obj.filters.size(); ++i) {
    const std::string& f = obj.filters[i];
    std::optional<Bytes> next;
    if (f == "FlateDecode" || f == "Fl") {
      next = detail::inflate_zlib(current, max_out);
      if (next && i < obj.decode_parms.size() && obj.decode_parms[i].predictor >= 10) {
        next = detail::undo_png_predictor(*next, obj.decode_parms[i]);
      } else if (next && i < obj.decode_parms.size() && obj.decode_parms[i].predictor != 1) {
        return std::nullopt;  // TIFF predictor unsupported
      }
    } else if (f == "ASCIIHexDecode" || f == "AHx") {
      next = detail::ascii_hex_decode(current);
    } else if (f == "ASCII85Decode" || f == "A85") {
      next = detail::ascii85_decode(current);
    } else if (f == "RunLengthDecode" || f == "RL") {
      next = detail::run_length_decode(current, max_out);
    } else {
      return std::nullopt;
    }
    if (!next || next->size() > max_out) return std::nullopt;
    current = std::move(*next);
  }
  return current;
}

}  // namespace favscan::pdf
