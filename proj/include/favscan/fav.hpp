#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "favscan/chi2.hpp"
#include "favscan/common.hpp"
#include "favscan/manifest.hpp"
#include "favscan/pdf.hpp"
#include "favscan/utf8.hpp"
#include "favscan/xmlcheck.hpp"
#include "favscan/zip.hpp"

namespace favscan::fav {

namespace reason {
inline constexpr const char* kUtf8DecodeFail = "UTF8_DECODE_FAIL";
inline constexpr const char* kTextImplausible = "TEXT_IMPLAUSIBLE";
inline constexpr const char* kZipStructViolation = "ZIP_STRUCT_VIOLATION";
inline constexpr const char* kZipMemberDecodeFail = "ZIP_MEMBER_DECODE_FAIL";
inline constexpr const char* kZipCrcMismatch = "ZIP_CRC_MISMATCH";
inline constexpr const char* kZipGapEscalated = "ZIP_GAP_ESCALATED";
inline constexpr const char* kOoxmlXmlMalformed = "OOXML_XML_MALFORMED";
inline constexpr const char* kPdfFilterDecodeFail = "PDF_FILTER_DECODE_FAIL";
inline constexpr const char* kPdfStructViolation = "PDF_STRUCT_VIOLATION";
inline constexpr const char* kPdfStreamMalformed = "PDF_STREAM_MALFORMED";
inline constexpr const char* kMediaHashMismatch = "MEDIA_HASH_MISMATCH";
inline constexpr const char* kMediaNotWhitelisted = "MEDIA_NOT_WHITELISTED";
inline constexpr const char* kComponentHashMismatch = "COMPONENT_HASH_MISMATCH";
inline constexpr const char* kComponentNotWhitelisted = "COMPONENT_NOT_WHITELISTED";
inline constexpr const char* kUnsupportedFormatEscalated = "UNSUPPORTED_FORMAT_ESCALATED";
inline constexpr const char* kRecursionBudgetExceeded = "RECURSION_BUDGET_EXCEEDED";
}  // namespace reason

enum class Decision { Benign, Suspicious };

struct SpanFinding {
  ByteRange range;      // file-offset coordinates of the affected span
  std::string note;
  double chi2 = -1.0;   // negative when not scored
};

struct Verdict {
  std::string path;
  Decision decision = Decision::Benign;
  std::vector<std::string> reasons;
  std::vector<SpanFinding> findings;

  void escalate(const std::string& code) {
    decision = Decision::Suspicious;
    if (std::find(reasons.begin(), reasons.end(), code) == reasons.end()) {
      reasons.push_back(code);
    }
  }
  void escalate(const std::string& code, ByteRange range, std::string note, double chi2 = -1.0) {
    escalate(code);
    findings.push_back({range, std::move(note), chi2});
  }
};

struct FavOptions {
  std::size_t max_depth = 4;
  std::uint64_t byte_budget = 256ull << 20;  // decoded bytes per file
  std::uint64_t gap_size_limit = 64;
  double tau = 350.0;  // uniformity bound reused for gaps and structural spans
  bool nlp_heuristic = false;
};

// Spans shorter than this carry no usable byte-frequency signal.
inline constexpr std::uint64_t kMinStatLen = 16;

// Below this length, diverse clean text (member names, dictionary keys) and
// ciphertext score alike, so uniformity alone cannot escalate structural
// spans. Field corruption at those scales is caught by the parse-time
// cross-checks instead.
inline constexpr std::uint64_t kMinStructStatLen = 128;

enum class FormatKind { Text, Zip, Docx, Xlsx, Pptx, Pdf, Media, Unknown };

namespace detail {

inline FormatKind format_from_extension(const std::string& ext) {
  if (ext == "txt" || ext == "log" || ext == "md" || ext == "csv" || ext == "text") {
    return FormatKind::Text;
  }
  if (manifest::default_media_extensions().count(ext)) return FormatKind::Media;
  if (ext == "zip") return FormatKind::Zip;
  if (ext == "docx") return FormatKind::Docx;
  if (ext == "xlsx") return FormatKind::Xlsx;
  if (ext == "pptx") return FormatKind::Pptx;
  if (ext == "pdf") return FormatKind::Pdf;
  return FormatKind::Unknown;
}

}  // namespace detail

inline FormatKind detect_format(const std::string& path, ByteSpan bytes) {
  const std::string ext = manifest::extension_of(path);
  if (bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' &&
      (bytes[2] == 0x03 || bytes[2] == 0x05) && (bytes[3] == 0x04 || bytes[3] == 0x06)) {
    if (ext == "docx") return FormatKind::Docx;
    if (ext == "xlsx") return FormatKind::Xlsx;
    if (ext == "pptx") return FormatKind::Pptx;
    return FormatKind::Zip;
  }
  if (bytes.size() >= 7 &&
      std::equal(bytes.begin(), bytes.begin() + 7, reinterpret_cast<const std::uint8_t*>("%PDF-1."))) {
    return FormatKind::Pdf;
  }
  const bool jpeg = bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
  const bool png = bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' &&
                   bytes[3] == 'G' && bytes[4] == 0x0D && bytes[5] == 0x0A && bytes[6] == 0x1A &&
                   bytes[7] == 0x0A;
  const bool mp3 = bytes.size() >= 3 && ((bytes[0] == 'I' && bytes[1] == 'D' && bytes[2] == '3') ||
                                         (bytes[0] == 0xFF && (bytes[1] & 0xE0) == 0xE0));
  const bool mp4 = bytes.size() >= 12 && bytes[4] == 'f' && bytes[5] == 't' && bytes[6] == 'y' &&
                   bytes[7] == 'p';
  if (jpeg || png || mp3 || mp4) return FormatKind::Media;

  // No magic: the extension breaks the tie. Ransomware routinely appends its
  // own suffix, so an unrecognized extension falls back to the one under it.
  const FormatKind by_ext = detail::format_from_extension(ext);
  if (by_ext != FormatKind::Unknown) return by_ext;
  const std::string stem = path.substr(0, path.size() - ext.size() - (ext.empty() ? 0 : 1));
  return detail::format_from_extension(manifest::extension_of(stem));
}

enum class GapDecision { Tolerated, Escalate };

// Small, clearly non-uniform padding is tolerated; everything else in an
// unclaimed gap is treated as potential hidden ciphertext.
inline GapDecision gap_guard(ByteSpan gap_bytes, const FavOptions& opts) {
  if (gap_bytes.empty()) return GapDecision::Tolerated;
  if (gap_bytes.size() > opts.gap_size_limit) return GapDecision::Escalate;
  if (chi_squared(gap_bytes) > opts.tau) return GapDecision::Tolerated;
  return GapDecision::Escalate;
}

namespace detail {

inline bool is_text_ext(const std::string& ext) {
  return ext == "txt" || ext == "log" || ext == "md" || ext == "csv" || ext == "json" ||
         ext == "text" || ext == "html" || ext == "htm";
}
inline bool is_xml_ext(const std::string& ext) { return ext == "xml" || ext == "rels"; }
inline bool is_container_ext(const std::string& ext) {
  return ext == "zip" || ext == "docx" || ext == "xlsx" || ext == "pptx";
}

inline bool plausible_text(ByteSpan decoded) {
  if (decoded.empty()) return true;
  std::size_t printable = 0;
  for (std::uint8_t b : decoded) {
    if (b >= 0x20 || b == '\t' || b == '\n' || b == '\r') ++printable;
  }
  if (static_cast<double>(printable) / decoded.size() < 0.95) return false;
  std::size_t words = 0, letters = 0, run = 0;
  for (std::uint8_t b : decoded) {
    if (b == ' ' || b == '\n' || b == '\t' || b == '\r') {
      if (run > 0) ++words;
      run = 0;
    } else {
      ++letters;
      ++run;
    }
  }
  if (run > 0) ++words;
  if (words == 0) return false;
  const double mean_word = static_cast<double>(letters) / words;
  return mean_word >= 2.0 && mean_word <= 20.0;
}

// Content streams and similar decoded payloads: operator-like text with
// balanced string literals.
inline bool plausible_content_stream(ByteSpan decoded) {
  if (decoded.empty()) return true;
  std::size_t printable = 0;
  for (std::uint8_t b : decoded) {
    if ((b >= 0x20 && b < 0x7F) || b == '\t' || b == '\n' || b == '\r') ++printable;
  }
  if (static_cast<double>(printable) / decoded.size() < 0.90) return false;
  long depth = 0;
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    if (decoded[i] == '\\') {
      ++i;
      continue;
    }
    if (decoded[i] == '(') ++depth;
    if (decoded[i] == ')') --depth;
    if (depth < 0) return false;
  }
  return depth == 0;
}

// Forensic characterization of a span the validators could not exonerate by
// decoding: uniformity, entropy, how much of it still decodes as UTF-8, and
// the printable fraction. This per-span detail is what the report surfaces
// for affected regions, and it is the dominant per-byte cost of the stage.
inline void record_span_evidence(ByteSpan file, ByteRange span, const FavOptions& opts,
                                 Verdict& verdict, const char* context) {
  if (span.length < kMinStructStatLen) return;  // too short to score meaningfully
  const ByteSpan view = file.subspan(span.offset, span.length);
  const ByteHistogram counts = histogram_of(view);
  const double chi = chi2_from_counts(counts, view.size());
  const double decodable = utf8::decodable_ratio(view);

  double entropy = 0.0;
  std::uint64_t printable = 0;
  for (int b = 0; b < 256; ++b) {
    if (counts[b] == 0) continue;
    const double p = static_cast<double>(counts[b]) / view.size();
    entropy -= p * std::log2(p);
    if ((b >= 0x20 && b < 0x7F) || b == '\t' || b == '\n' || b == '\r') printable += counts[b];
  }

  // The rest of the classic randomness battery: serial correlation and a
  // Monte-Carlo pi estimate. Ciphertext sits near 0 correlation and pi.
  double serial = 0.0;
  {
    double sum_xy = 0.0, sum_x = 0.0, sum_x2 = 0.0;
    for (std::size_t i = 0; i < view.size(); ++i) {
      const double x = view[i];
      const double y = view[(i + 1) % view.size()];
      sum_xy += x * y;
      sum_x += x;
      sum_x2 += x * x;
    }
    const double n = static_cast<double>(view.size());
    const double num = n * sum_xy - sum_x * sum_x;
    const double den = n * sum_x2 - sum_x * sum_x;
    serial = den != 0.0 ? num / den : 1.0;
  }
  double pi_error = 1.0;
  if (view.size() >= 12) {
    std::uint64_t inside = 0, samples = 0;
    for (std::size_t i = 0; i + 6 <= view.size(); i += 6) {
      // Two 24-bit coordinates in the unit square.
      const double x = (view[i] * 65536.0 + view[i + 1] * 256.0 + view[i + 2]) / 16777216.0;
      const double y = (view[i + 3] * 65536.0 + view[i + 4] * 256.0 + view[i + 5]) / 16777216.0;
      inside += x * x + y * y <= 1.0 ? 1 : 0;
      ++samples;
    }
    const double pi_est = 4.0 * static_cast<double>(inside) / static_cast<double>(samples);
    pi_error = std::abs(pi_est - 3.14159265358979323846) / 3.14159265358979323846;
  }

  // Block-granular profile: how many 512-byte blocks of the span score as
  // near-uniform on their own. This ties the finding back to the device
  // blocks the rest of the pipeline reasons about.
  std::uint64_t uniform_blocks = 0, scored_blocks = 0;
  for (std::uint64_t off = 0; off + kMinStructStatLen <= view.size(); off += kBlockSize) {
    const std::uint64_t len = std::min<std::uint64_t>(kBlockSize, view.size() - off);
    ++scored_blocks;
    if (chi_squared(view.subspan(off, len)) <= opts.tau) ++uniform_blocks;
  }

  char detail[176];
  const char* klass = chi <= opts.tau                     ? "ciphertext-like"
                      : decodable > 0.99 && printable * 10 >= view.size() * 9 ? "text-like"
                                                          : "non-uniform";
  std::snprintf(detail, sizeof(detail),
                ":%s entropy=%.2f utf8=%.2f printable=%.2f serial=%.3f pi_err=%.3f"
                " uniform_blocks=%llu/%llu",
                klass, entropy, decodable, static_cast<double>(printable) / view.size(), serial,
                pi_error, static_cast<unsigned long long>(uniform_blocks),
                static_cast<unsigned long long>(scored_blocks));
  verdict.findings.push_back({span, std::string(context) + detail, chi});
}

}  // namespace detail

// Strict UTF-8 over each suspicious span, widened to code-point boundaries
// first so mid-sequence span edges do not fail spuriously.
inline void validate_text_spans(ByteSpan bytes, const std::vector<ByteRange>& regions,
                                const FavOptions& opts, Verdict& verdict) {
  for (const ByteRange& region : regions) {
    if (region.empty()) continue;
    const ByteRange span = utf8::widen_to_code_points(bytes, region);
    const ByteSpan view = bytes.subspan(span.offset, span.length);
    if (auto bad = utf8::first_invalid(view)) {
      verdict.escalate(reason::kUtf8DecodeFail, span, "invalid UTF-8 at span offset " + std::to_string(*bad));
      detail::record_span_evidence(bytes, span, opts, verdict, "text-span");
      continue;
    }
    if (opts.nlp_heuristic && !detail::plausible_text(view)) {
      verdict.escalate(reason::kTextImplausible, span, "text plausibility heuristic failed");
    }
  }
}

inline Verdict validate_text(const std::string& path, ByteSpan bytes,
                             const std::vector<ByteRange>& regions, const FavOptions& opts) {
  Verdict verdict;
  verdict.path = path;
  validate_text_spans(bytes, regions, opts, verdict);
  return verdict;
}

namespace detail {

struct ContainerContext {
  const FavOptions& opts;
  const manifest::TrustedManifest& manifest;
  std::uint64_t budget;  // remaining decoded bytes for this file
};

void validate_container(const std::string& container_id, ByteSpan bytes,
                        const std::vector<ByteRange>& regions, bool ooxml_mode, std::size_t depth,
                        ContainerContext& ctx, Verdict& verdict);

// Decode-then-decide for one member: the member-level outcome is promoted to
// every span that overlaps it. Returns false when the member escalated.
inline bool validate_member(const std::string& container_id, ByteSpan bytes,
                            const zip::MemberInfo& member, bool ooxml_mode, std::size_t depth,
                            ContainerContext& ctx, Verdict& verdict) {
  const auto& opts = ctx.opts;
  const ByteSpan payload = bytes.subspan(member.payload_range.offset, member.payload_range.length);
  const std::string ext = manifest::extension_of(member.name);
  const bool media_leaf = manifest::is_media_name(member.name, manifest::default_media_extensions()) ||
                          (ooxml_mode && manifest::in_media_directory(member.name));

  // Encrypted members and unsupported methods bypass decoding entirely and
  // are judged by their stored payload hash.
  if (member.encrypted() || (member.method != zip::kMethodStore && member.method != zip::kMethodDeflate)) {
    switch (ctx.manifest.check_component(container_id, member.name, payload)) {
      case manifest::WhitelistStatus::Verified:
        return true;
      case manifest::WhitelistStatus::Mismatch:
        verdict.escalate(reason::kComponentHashMismatch, member.payload_range,
                         "opaque member " + member.name + " hash mismatch");
        return false;
      case manifest::WhitelistStatus::Unknown:
        verdict.escalate(reason::kComponentNotWhitelisted, member.payload_range,
                         "opaque member " + member.name + " not in manifest");
        return false;
    }
  }

  // Media leaves likewise skip decoding-based analysis; their stored payload
  // hash is the whole judgment.
  if (media_leaf) {
    switch (ctx.manifest.check_component(container_id, member.name, payload)) {
      case manifest::WhitelistStatus::Verified:
        return true;
      case manifest::WhitelistStatus::Mismatch:
        verdict.escalate(reason::kMediaHashMismatch, member.payload_range,
                         "media member " + member.name + " hash mismatch");
        return false;
      case manifest::WhitelistStatus::Unknown:
        verdict.escalate(reason::kMediaNotWhitelisted, member.payload_range,
                         "media member " + member.name + " not in manifest");
        return false;
    }
  }

  if (member.uncomp_size > ctx.budget) {
    verdict.escalate(reason::kRecursionBudgetExceeded, member.payload_range,
                     "decoded byte budget exhausted at " + member.name);
    return false;
  }
  const auto decoded = zip::decode_member(bytes, member, member.uncomp_size);
  if (!decoded) {
    verdict.escalate(reason::kZipMemberDecodeFail, member.payload_range,
                     "member " + member.name + " failed to decode");
    return false;
  }
  ctx.budget -= decoded->size();
  if (crc32_of(*decoded) != member.crc32) {
    verdict.escalate(reason::kZipCrcMismatch, member.payload_range,
                     "member " + member.name + " CRC-32 mismatch");
    return false;
  }

  // Classification happens on decoded bytes only.
  const bool nested = is_container_ext(ext) ||
                      (decoded->size() >= 4 && (*decoded)[0] == 'P' && (*decoded)[1] == 'K' &&
                       ((*decoded)[2] == 0x03 || (*decoded)[2] == 0x05));
  if (nested) {
    if (depth == 0) {
      verdict.escalate(reason::kRecursionBudgetExceeded, member.payload_range,
                       "nested container depth budget exhausted at " + member.name);
      return false;
    }
    const std::size_t before = verdict.reasons.size();
    std::vector<ByteRange> whole{{0, decoded->size()}};
    validate_container(container_id + "!" + member.name, *decoded, whole,
                       ext == "docx" || ext == "xlsx" || ext == "pptx", depth - 1, ctx, verdict);
    return verdict.reasons.size() == before;
  }

  if (is_xml_ext(ext)) {
    if (!utf8::is_valid(*decoded)) {
      verdict.escalate(reason::kUtf8DecodeFail, member.payload_range,
                       "member " + member.name + " is not valid UTF-8");
      return false;
    }
    if (!xmlcheck::well_formed(*decoded)) {
      verdict.escalate(reason::kOoxmlXmlMalformed, member.payload_range,
                       "member " + member.name + " XML malformed");
      return false;
    }
    return true;
  }
  if (is_text_ext(ext)) {
    if (!utf8::is_valid(*decoded)) {
      verdict.escalate(reason::kUtf8DecodeFail, member.payload_range,
                       "member " + member.name + " is not valid UTF-8");
      return false;
    }
    if (opts.nlp_heuristic && !plausible_text(*decoded)) {
      verdict.escalate(reason::kTextImplausible, member.payload_range,
                       "member " + member.name + " text plausibility failed");
      return false;
    }
    return true;
  }
  // Unclassified leaf: the CRC already proved the decoded bytes are exactly
  // what was packaged.
  return true;
}

inline void validate_container(const std::string& container_id, ByteSpan bytes,
                               const std::vector<ByteRange>& regions, bool ooxml_mode,
                               std::size_t depth, ContainerContext& ctx, Verdict& verdict) {
  const auto map = zip::parse(bytes);
  if (!map) {
    verdict.escalate(reason::kZipStructViolation, {0, bytes.size()}, "no end-of-central-directory record");
    // No structure exonerates anything; characterize every flagged span.
    for (const ByteRange& region : regions) {
      record_span_evidence(bytes, region, ctx.opts, verdict, "zip-unparsed");
    }
    return;
  }
  for (const auto& violation : map->violations) {
    verdict.escalate(reason::kZipStructViolation, {0, 0}, violation);
  }

  // Near-uniform checks against metadata apply on top of the parse-time
  // structural checks.
  std::vector<ByteRange> metadata{map->eocd, map->central_directory};
  for (const auto& member : map->members) {
    metadata.push_back(member.lfh_range);
    if (!member.descriptor_range.empty()) metadata.push_back(member.descriptor_range);
  }

  // Member-first: each touched member is decoded once and its outcome covers
  // all spans that land in it. Spans in failed members get per-span evidence.
  std::map<std::size_t, bool> member_outcomes;
  std::map<std::size_t, GapDecision> gap_outcomes;
  for (const ByteRange& region : regions) {
    for (std::size_t mi = 0; mi < map->members.size(); ++mi) {
      const auto& member = map->members[mi];
      if (member.payload_range.empty() || !region.overlaps(member.payload_range)) continue;
      auto it = member_outcomes.find(mi);
      if (it == member_outcomes.end()) {
        const bool ok = validate_member(container_id, bytes, member, ooxml_mode, depth, ctx, verdict);
        it = member_outcomes.emplace(mi, ok).first;
      }
      if (!it->second) {
        const std::uint64_t lo = std::max(region.offset, member.payload_range.offset);
        const std::uint64_t hi = std::min(region.end(), member.payload_range.end());
        record_span_evidence(bytes, {lo, hi - lo}, ctx.opts, verdict, "zip-member");
      }
    }

    for (const ByteRange& meta : metadata) {
      if (meta.empty() || !region.overlaps(meta)) continue;
      const std::uint64_t lo = std::max(region.offset, meta.offset);
      const std::uint64_t hi = std::min(region.end(), meta.end());
      if (hi - lo >= kMinStructStatLen) {
        const double chi = chi_squared(bytes.subspan(lo, hi - lo));
        if (chi <= ctx.opts.tau) {
          verdict.escalate(reason::kZipStructViolation, {lo, hi - lo},
                           "near-uniform bytes inside container metadata", chi);
        }
      }
    }

    for (std::size_t gi = 0; gi < map->gaps.size(); ++gi) {
      const ByteRange& gap = map->gaps[gi];
      if (!region.overlaps(gap)) continue;
      auto it = gap_outcomes.find(gi);
      if (it == gap_outcomes.end()) {
        const GapDecision decision = gap_guard(bytes.subspan(gap.offset, gap.length), ctx.opts);
        if (decision == GapDecision::Escalate) {
          verdict.escalate(reason::kZipGapEscalated, gap, "unclaimed gap escalated");
        }
        it = gap_outcomes.emplace(gi, decision).first;
      }
      if (it->second == GapDecision::Escalate) {
        const std::uint64_t lo = std::max(region.offset, gap.offset);
        const std::uint64_t hi = std::min(region.end(), gap.end());
        record_span_evidence(bytes, {lo, hi - lo}, ctx.opts, verdict, "zip-gap");
      }
    }
  }
}

}  // namespace detail

inline Verdict validate_zip(const std::string& path, ByteSpan bytes,
                            const std::vector<ByteRange>& regions,
                            const manifest::TrustedManifest& manifest, const FavOptions& opts) {
  Verdict verdict;
  verdict.path = path;
  detail::ContainerContext ctx{opts, manifest, opts.byte_budget};
  detail::validate_container(path, bytes, regions, false, opts.max_depth, ctx, verdict);
  return verdict;
}

inline Verdict validate_ooxml(const std::string& path, ByteSpan bytes,
                              const std::vector<ByteRange>& regions,
                              const manifest::TrustedManifest& manifest, const FavOptions& opts) {
  Verdict verdict;
  verdict.path = path;
  detail::ContainerContext ctx{opts, manifest, opts.byte_budget};
  detail::validate_container(path, bytes, regions, true, opts.max_depth, ctx, verdict);
  return verdict;
}

namespace detail {

enum class PdfSegmentKind { StreamPayload, ObjectShell, Structural, Gap };

struct PdfSegment {
  ByteRange range;
  PdfSegmentKind kind;
  std::size_t object_index = 0;
};

inline std::vector<PdfSegment> pdf_segments(const pdf::PdfMap& map, std::uint64_t file_size) {
  std::vector<PdfSegment> segments;
  if (!map.header.empty()) segments.push_back({map.header, PdfSegmentKind::Structural});
  for (const auto& r : map.structural) segments.push_back({r, PdfSegmentKind::Structural});
  for (const auto& r : map.gaps) segments.push_back({r, PdfSegmentKind::Gap});
  for (std::size_t i = 0; i < map.objects.size(); ++i) {
    const auto& obj = map.objects[i];
    if (obj.has_stream && !obj.stream_payload.empty()) {
      if (obj.stream_payload.offset > obj.full.offset) {
        segments.push_back({{obj.full.offset, obj.stream_payload.offset - obj.full.offset},
                            PdfSegmentKind::ObjectShell, i});
      }
      segments.push_back({obj.stream_payload, PdfSegmentKind::StreamPayload, i});
      if (obj.full.end() > obj.stream_payload.end()) {
        segments.push_back({{obj.stream_payload.end(), obj.full.end() - obj.stream_payload.end()},
                            PdfSegmentKind::ObjectShell, i});
      }
    } else {
      segments.push_back({obj.full, PdfSegmentKind::ObjectShell, i});
    }
  }
  std::sort(segments.begin(), segments.end(),
            [](const PdfSegment& a, const PdfSegment& b) { return a.range.offset < b.range.offset; });
  // Anything the parser did not account for behaves like a gap.
  std::vector<PdfSegment> out;
  std::uint64_t cursor = 0;
  for (const auto& seg : segments) {
    if (seg.range.offset > cursor) {
      out.push_back({{cursor, seg.range.offset - cursor}, PdfSegmentKind::Gap});
    }
    out.push_back(seg);
    cursor = std::max(cursor, seg.range.end());
  }
  if (cursor < file_size) out.push_back({{cursor, file_size - cursor}, PdfSegmentKind::Gap});
  return out;
}

// Stream-level decision, memoized by the caller. True when the stream is
// exonerated.
inline bool validate_pdf_stream(const std::string& path, ByteSpan bytes, const pdf::PdfObject& obj,
                                ContainerContext& ctx, Verdict& verdict) {
  const auto& opts = ctx.opts;
  const std::string member = "obj:" + std::to_string(obj.num);
  const ByteSpan raw = bytes.subspan(obj.stream_payload.offset, obj.stream_payload.length);

  if (!pdf::filters_supported(obj.filters)) {
    switch (ctx.manifest.check_component(path, member, raw)) {
      case manifest::WhitelistStatus::Verified:
        return true;
      case manifest::WhitelistStatus::Mismatch:
        verdict.escalate(reason::kMediaHashMismatch, obj.stream_payload,
                         member + " raw payload hash mismatch");
        return false;
      case manifest::WhitelistStatus::Unknown:
        verdict.escalate(reason::kMediaNotWhitelisted, obj.stream_payload,
                         member + " has unsupported filters and no manifest entry");
        return false;
    }
  }

  if (obj.stream_payload.length > ctx.budget) {
    verdict.escalate(reason::kRecursionBudgetExceeded, obj.stream_payload,
                     "decoded byte budget exhausted at " + member);
    return false;
  }
  const auto decoded = pdf::decode_stream(bytes, obj, ctx.budget);
  if (!decoded) {
    verdict.escalate(reason::kPdfFilterDecodeFail, obj.stream_payload,
                     member + " filter pipeline failed to decode");
    return false;
  }
  ctx.budget -= std::min<std::uint64_t>(ctx.budget, decoded->size());

  switch (obj.cls) {
    case pdf::StreamClass::Image:
    case pdf::StreamClass::Font: {
      const auto form = ctx.manifest.component_form(path, member);
      const ByteSpan subject = form == manifest::PayloadForm::Raw ? raw : ByteSpan(*decoded);
      switch (ctx.manifest.check_component(path, member, subject)) {
        case manifest::WhitelistStatus::Verified:
          return true;
        case manifest::WhitelistStatus::Mismatch:
          verdict.escalate(reason::kMediaHashMismatch, obj.stream_payload, member + " hash mismatch");
          return false;
        case manifest::WhitelistStatus::Unknown:
          verdict.escalate(reason::kMediaNotWhitelisted, obj.stream_payload,
                           member + " image/font stream not in manifest");
          return false;
      }
      return true;
    }
    case pdf::StreamClass::Metadata: {
      std::size_t i = 0;
      while (i < decoded->size() && ((*decoded)[i] == ' ' || (*decoded)[i] == '\n' ||
                                     (*decoded)[i] == '\r' || (*decoded)[i] == '\t')) {
        ++i;
      }
      const ByteSpan body = ByteSpan(*decoded).subspan(i);
      const auto begins = [&](const char* lit) {
        const std::size_t len = std::char_traits<char>::length(lit);
        return body.size() >= len &&
               std::equal(body.begin(), body.begin() + len, reinterpret_cast<const std::uint8_t*>(lit));
      };
      if (!begins("<?xpacket") && !begins("<x:xmpmeta") && !begins("<?xml")) {
        verdict.escalate(reason::kPdfStreamMalformed, obj.stream_payload,
                         member + " metadata stream lacks XMP markers");
        return false;
      }
      return true;
    }
    case pdf::StreamClass::ObjectStream: {
      // Must open with "num offset" integer pairs.
      std::size_t i = 0;
      bool saw_digit = false;
      while (i < decoded->size() && (std::isdigit((*decoded)[i]) || (*decoded)[i] == ' ')) {
        saw_digit |= std::isdigit((*decoded)[i]) != 0;
        ++i;
      }
      if (!saw_digit) {
        verdict.escalate(reason::kPdfStreamMalformed, obj.stream_payload,
                         member + " object stream header malformed");
        return false;
      }
      return true;
    }
    case pdf::StreamClass::EmbeddedFile:
    case pdf::StreamClass::Generic: {
      if (obj.cls == pdf::StreamClass::Generic && !plausible_content_stream(*decoded)) {
        verdict.escalate(reason::kPdfStreamMalformed, obj.stream_payload,
                         member + " decoded stream structure implausible");
        return false;
      }
      if (decoded->size() >= kMinStatLen) {
        const double chi = chi_squared(*decoded);
        if (chi <= opts.tau) {
          verdict.escalate(reason::kPdfStreamMalformed, obj.stream_payload,
                           member + " decoded bytes unnaturally uniform", chi);
          return false;
        }
      }
      return true;
    }
  }
  return true;
}

}  // namespace detail

inline Verdict validate_pdf(const std::string& path, ByteSpan bytes,
                            const std::vector<ByteRange>& regions,
                            const manifest::TrustedManifest& manifest, const FavOptions& opts) {
  Verdict verdict;
  verdict.path = path;
  const auto map = pdf::parse(bytes);
  if (!map) {
    verdict.escalate(reason::kPdfStructViolation, {0, bytes.size()}, "unparseable PDF");
    return verdict;
  }
  for (const auto& violation : map->violations) {
    verdict.escalate(reason::kPdfStructViolation, {0, 0}, violation);
  }

  detail::ContainerContext ctx{opts, manifest, opts.byte_budget};
  const auto segments = detail::pdf_segments(*map, bytes.size());
  std::map<std::size_t, bool> stream_outcomes;
  std::map<std::size_t, GapDecision> gap_outcomes;

  // Regions arrive sorted and non-overlapping, so the segment cursor only
  // moves forward across the whole sweep.
  std::size_t cursor = 0;
  for (const ByteRange& region : regions) {
    while (cursor < segments.size() && segments[cursor].range.end() <= region.offset) ++cursor;
    for (std::size_t si = cursor; si < segments.size() && segments[si].range.offset < region.end();
         ++si) {
      const auto& seg = segments[si];
      if (!region.overlaps(seg.range)) continue;
      const std::uint64_t lo = std::max(region.offset, seg.range.offset);
      const std::uint64_t hi = std::min(region.end(), seg.range.end());
      switch (seg.kind) {
        case detail::PdfSegmentKind::StreamPayload: {
          auto it = stream_outcomes.find(seg.object_index);
          if (it == stream_outcomes.end()) {
            const bool ok =
                detail::validate_pdf_stream(path, bytes, map->objects[seg.object_index], ctx, verdict);
            it = stream_outcomes.emplace(seg.object_index, ok).first;
          }
          if (!it->second) {
            detail::record_span_evidence(bytes, {lo, hi - lo}, opts, verdict, "pdf-stream");
          }
          break;
        }
        case detail::PdfSegmentKind::ObjectShell:
        case detail::PdfSegmentKind::Structural: {
          // Marker-level validity was checked during parsing; near-uniform
          // bytes in structural territory cannot be legitimate.
          if (hi - lo >= kMinStructStatLen) {
            const double chi = chi_squared(bytes.subspan(lo, hi - lo));
            if (chi <= opts.tau) {
              verdict.escalate(reason::kPdfStructViolation, {lo, hi - lo},
                               "near-uniform bytes in structural region", chi);
            }
          }
          break;
        }
        case detail::PdfSegmentKind::Gap: {
          auto it = gap_outcomes.find(si);
          if (it == gap_outcomes.end()) {
            const ByteSpan gap = bytes.subspan(seg.range.offset, seg.range.length);
            const GapDecision decision = gap_guard(gap, opts);
            if (decision == GapDecision::Escalate) {
              verdict.escalate(reason::kPdfStructViolation, seg.range, "unclaimed gap escalated");
            }
            it = gap_outcomes.emplace(si, decision).first;
          }
          if (it->second == GapDecision::Escalate) {
            detail::record_span_evidence(bytes, {lo, hi - lo}, opts, verdict, "pdf-gap");
          }
          break;
        }
      }
    }
  }
  return verdict;
}

// Stage-4 entry point: route a file with suspicious regions to its validator.
inline Verdict dispatch(const std::string& path, ByteSpan bytes,
                        const std::vector<ByteRange>& regions,
                        const manifest::TrustedManifest& manifest, const FavOptions& opts) {
  Verdict verdict;
  verdict.path = path;
  if (bytes.empty() || regions.empty()) return verdict;

  switch (detect_format(path, bytes)) {
    case FormatKind::Media:
      switch (manifest.check_file(path, bytes)) {
        case manifest::WhitelistStatus::Verified:
          return verdict;  // whitelisted: excluded from content analysis
        case manifest::WhitelistStatus::Mismatch:
          verdict.escalate(reason::kMediaHashMismatch, {0, bytes.size()}, "media file hash mismatch");
          return verdict;
        case manifest::WhitelistStatus::Unknown:
          verdict.escalate(reason::kMediaNotWhitelisted, {0, bytes.size()},
                           "media file not in manifest");
          return verdict;
      }
      return verdict;
    case FormatKind::Text:
      return validate_text(path, bytes, regions, opts);
    case FormatKind::Zip:
      return validate_zip(path, bytes, regions, manifest, opts);
    case FormatKind::Docx:
    case FormatKind::Xlsx:
    case FormatKind::Pptx:
      return validate_ooxml(path, bytes, regions, manifest, opts);
    case FormatKind::Pdf:
      return validate_pdf(path, bytes, regions, manifest, opts);
    case FormatKind::Unknown:
      verdict.escalate(reason::kUnsupportedFormatEscalated, regions.front(),
                       "unknown format with suspicious regions");
      for (const ByteRange& region : regions) {
        detail::record_span_evidence(bytes, region, opts, verdict, "unknown-format");
      }
      return verdict;
  }
  return verdict;
}

// Whole-file validation: every byte is treated as suspicious. This is the
// standalone-FAV configuration used for detector comparisons.
inline Verdict validate_file(const std::string& path, ByteSpan bytes,
                             const manifest::TrustedManifest& manifest, const FavOptions& opts) {
  std::vector<ByteRange> whole;
  if (!bytes.empty()) whole.push_back({0, bytes.size()});
  return dispatch(path, bytes, whole, manifest, opts);
}

}  // namespace favscan::fav
