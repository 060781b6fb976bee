#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "favscan/common.hpp"
#include "favscan/zipwrite.hpp"

namespace favscan::corpus {

namespace fs = std::filesystem;

struct FileSpec {
  std::string path;
  Bytes data;
};

inline void write_corpus(const fs::path& dir, const std::vector<FileSpec>& files) {
  for (const auto& f : files) {
    const fs::path target = dir / f.path;
    fs::create_directories(target.parent_path());
    write_file(target, f.data);
  }
}

// Sizes whose final 512-byte block is either full or at least 64 bytes keep
// block-granular labels well inside the scored window.
inline bool safe_block_remainder(std::uint64_t size) {
  const std::uint64_t r = size % kBlockSize;
  return r == 0 || r >= 64;
}

// ---------------------------------------------------------------------------
// Text
// ---------------------------------------------------------------------------

enum class TextStyle { Plain, Mixed, Dense, Wide, Repetitive };

namespace detail {

inline const std::vector<std::string>& word_bank() {
  static const std::vector<std::string> words{
      "the",     "quarterly", "report",   "shows",    "steady",   "growth",  "across",  "all",
      "regions", "while",     "margins",  "remain",   "under",    "pressure", "from",   "supply",
      "chain",   "delays",    "and",      "rising",   "costs",    "teams",    "should", "focus",
      "on",      "customer",  "retention", "metrics",  "during",   "next",     "cycle",  "budget",
      "planning", "starts",   "in",       "october",  "with",     "initial",  "estimates", "due",
      "by",      "friday",    "please",   "review",   "attached", "figures",  "before",  "meeting",
      "notes",   "archive",   "contains", "previous", "versions", "for",      "reference", "only"};
  return words;
}

inline const std::vector<std::string>& wide_bank() {
  static const std::vector<std::string> words{
      "данные",  "отчёт",  "проверка", "файл",   "система", "資料",    "検証",    "報告",
      "数据",    "验证",   "报告",     "システム", "métrica", "configuração", "analyse", "prüfung"};
  return words;
}

inline void append_sentence(std::string& out, DetRng& rng, TextStyle style) {
  const auto& words = word_bank();
  const std::size_t count = 4 + rng.bounded(9);
  for (std::size_t i = 0; i < count; ++i) {
    std::string word;
    if (style == TextStyle::Wide || (style == TextStyle::Mixed && rng.bounded(8) == 0)) {
      word = wide_bank()[rng.bounded(wide_bank().size())];
    } else {
      word = words[rng.bounded(words.size())];
    }
    if (i == 0 && !word.empty() && word[0] < 0x80) word[0] = static_cast<char>(std::toupper(word[0]));
    out += word;
    out += i + 1 == count ? "" : " ";
  }
  out += rng.bounded(10) == 0 ? "!\n" : ".\n";
}

inline void append_dense_line(std::string& out, DetRng& rng) {
  char line[128];
  using ULL = unsigned long long;
  std::snprintf(line, sizeof(line),
                "%04llu-%02llu-%02llu %02llu:%02llu:%02llu.%03llu [w%llu] id=%08llx v=%llu.%03llu s=%016llx\n",
                2024ull, static_cast<ULL>(1 + rng.bounded(12)), static_cast<ULL>(1 + rng.bounded(28)),
                static_cast<ULL>(rng.bounded(24)), static_cast<ULL>(rng.bounded(60)),
                static_cast<ULL>(rng.bounded(60)), static_cast<ULL>(rng.bounded(1000)),
                static_cast<ULL>(rng.bounded(16)), static_cast<ULL>(rng.next() & 0xFFFFFFFF),
                static_cast<ULL>(rng.bounded(10)), static_cast<ULL>(rng.bounded(1000)),
                static_cast<ULL>(rng.next()));
  out += line;
}

}  // namespace detail

// UTF-8 text of exactly target_size bytes (space-padded after a clean
// code-point truncation).
inline Bytes gen_text(DetRng& rng, std::uint64_t target_size, TextStyle style = TextStyle::Plain) {
  std::string out;
  out.reserve(target_size + 256);
  while (out.size() < target_size) {
    if (style == TextStyle::Dense) {
      detail::append_dense_line(out, rng);
    } else if (style == TextStyle::Repetitive) {
      // Separator-sheet texture: almost a single symbol.
      out += rng.bounded(40) == 0 ? "section\n" : "================================================\n";
    } else {
      detail::append_sentence(out, rng, style);
      if (rng.bounded(6) == 0) out += "\n";
    }
  }
  while (out.size() > target_size) {
    // Truncate at a code-point boundary, then pad back up with spaces.
    out.pop_back();
    while (!out.empty() && (static_cast<unsigned char>(out.back()) & 0xC0) == 0x80) out.pop_back();
    if (!out.empty() && (static_cast<unsigned char>(out.back()) & 0x80) != 0) out.pop_back();
  }
  out.append(target_size - out.size(), ' ');
  return Bytes(out.begin(), out.end());
}

// ---------------------------------------------------------------------------
// Media (opaque formats, integrity-checked via the trusted manifest)
// ---------------------------------------------------------------------------

inline Bytes gen_jpeg_like(DetRng& rng, std::uint64_t size) {
  Bytes out{0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10, 'J', 'F', 'I', 'F', 0x00, 0x01, 0x02, 0x00};
  while (out.size() + 2 < size) out.push_back(rng.byte());
  out.push_back(0xFF);
  out.push_back(0xD9);
  while (out.size() < size) out.push_back(rng.byte());
  return out;
}

inline Bytes gen_png_like(DetRng& rng, std::uint64_t size) {
  Bytes out{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  while (out.size() < size) out.push_back(rng.byte());
  return out;
}

inline Bytes gen_mp3_like(DetRng& rng, std::uint64_t size) {
  Bytes out{'I', 'D', '3', 0x03, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
  while (out.size() < size) out.push_back(rng.byte());
  return out;
}

inline Bytes gen_mp4_like(DetRng& rng, std::uint64_t size) {
  Bytes out{0x00, 0x00, 0x00, 0x18, 'f', 't', 'y', 'p', 'i', 's', 'o', 'm',
            0x00, 0x00, 0x02, 0x00, 'i', 's', 'o', 'm', 'm', 'p', '4', '1'};
  while (out.size() < size) out.push_back(rng.byte());
  return out;
}

// ---------------------------------------------------------------------------
// PDF
// ---------------------------------------------------------------------------

struct PdfOptions {
  std::uint64_t approx_size = 8192;
  bool compress = true;
  bool with_image = false;
  std::uint64_t image_pixels = 1024;  // grayscale payload size of the image
  std::uint64_t pad = 0;              // extra text, used to steer the final size
};

namespace detail {

inline Bytes flate_compress(ByteSpan data) {
  uLongf bound = compressBound(static_cast<uLong>(data.size()));
  Bytes out(bound);
  if (compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()), 6) != Z_OK) {
    throw std::runtime_error("compress2 failed");
  }
  out.resize(bound);
  return out;
}

inline std::string pdf_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '(' || c == ')' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

struct PdfBuilder {
  std::string out;
  std::vector<std::uint64_t> offsets;  // per object number, 1-based

  void begin_object(int num) {
    if (offsets.size() < static_cast<std::size_t>(num)) offsets.resize(num);
    offsets[num - 1] = out.size();
    out += std::to_string(num) + " 0 obj\n";
  }
  void end_object() { out += "endobj\n"; }

  void stream_object(int num, const std::string& dict_extra, ByteSpan payload) {
    begin_object(num);
    out += "<< /Length " + std::to_string(payload.size()) + dict_extra + " >>\nstream\n";
    out.append(reinterpret_cast<const char*>(payload.data()), payload.size());
    out += "\nendstream\n";
    end_object();
  }

  Bytes finish(int root_num, int count) {
    const std::uint64_t xref_pos = out.size();
    out += "xref\n0 " + std::to_string(count + 1) + "\n";
    char entry[32];
    std::snprintf(entry, sizeof(entry), "%010u %05u f\r\n", 0u, 65535u);
    out += entry;
    for (int i = 0; i < count; ++i) {
      std::snprintf(entry, sizeof(entry), "%010llu %05u n\r\n",
                    static_cast<unsigned long long>(offsets[i]), 0u);
      out += entry;
    }
    out += "trailer\n<< /Size " + std::to_string(count + 1) + " /Root " + std::to_string(root_num) +
           " 0 R >>\nstartxref\n" + std::to_string(xref_pos) + "\n%%EOF\n";
    return Bytes(out.begin(), out.end());
  }
};

}  // namespace detail

inline Bytes gen_pdf(DetRng& rng, const PdfOptions& opts) {
  // Page text sized so the emitted file lands near approx_size.
  std::vector<std::string> page_texts;
  std::uint64_t text_budget = opts.approx_size + opts.pad;
  if (opts.with_image) text_budget -= std::min(text_budget / 2, opts.image_pixels);
  while (text_budget > 0) {
    const std::uint64_t chunk = std::min<std::uint64_t>(text_budget, 2800);
    std::string text;
    while (text.size() < chunk) detail::append_sentence(text, rng, TextStyle::Plain);
    page_texts.push_back(std::move(text));
    if (chunk >= text_budget) break;
    text_budget -= chunk;
  }
  if (page_texts.empty()) page_texts.push_back("empty\n");

  const int page_count = static_cast<int>(page_texts.size());
  const int font_obj = 3 + 2 * page_count;
  const int image_obj = opts.with_image ? font_obj + 1 : 0;
  const int total_objects = font_obj + (opts.with_image ? 1 : 0);

  detail::PdfBuilder b;
  b.out += "%PDF-1.4\n";

  b.begin_object(1);
  b.out += "<< /Type /Catalog /Pages 2 0 R >>\n";
  b.end_object();

  b.begin_object(2);
  b.out += "<< /Type /Pages /Kids [";
  for (int p = 0; p < page_count; ++p) {
    b.out += (p ? " " : "") + std::to_string(3 + 2 * p) + " 0 R";
  }
  b.out += "] /Count " + std::to_string(page_count) + " >>\n";
  b.end_object();

  for (int p = 0; p < page_count; ++p) {
    const int page_num = 3 + 2 * p;
    const int content_num = page_num + 1;
    b.begin_object(page_num);
    b.out += "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Resources << /Font << /F1 " +
             std::to_string(font_obj) + " 0 R >>";
    if (opts.with_image && p == 0) {
      b.out += " /XObject << /Im1 " + std::to_string(image_obj) + " 0 R >>";
    }
    b.out += " >> /Contents " + std::to_string(content_num) + " 0 R >>\n";
    b.end_object();

    std::string content = "BT /F1 11 Tf 56 756 Td 13 TL\n";
    std::string line;
    for (char c : page_texts[p]) {
      if (c == '\n') {
        content += "(" + detail::pdf_escape(line) + ") Tj T*\n";
        line.clear();
      } else {
        line.push_back(c);
      }
    }
    if (!line.empty()) content += "(" + detail::pdf_escape(line) + ") Tj\n";
    if (opts.with_image && p == 0) content += "q 96 0 0 96 448 640 cm /Im1 Do Q\n";
    content += "ET";

    const ByteSpan content_span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size());
    if (opts.compress) {
      const Bytes packed = detail::flate_compress(content_span);
      b.stream_object(content_num, " /Filter /FlateDecode", packed);
    } else {
      b.stream_object(content_num, "", content_span);
    }
  }

  b.begin_object(font_obj);
  b.out += "<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>\n";
  b.end_object();

  if (opts.with_image) {
    const std::uint64_t width = 64;
    const std::uint64_t height = std::max<std::uint64_t>(1, opts.image_pixels / width);
    Bytes pixels(width * height);
    for (auto& px : pixels) px = rng.byte();
    const Bytes packed = detail::flate_compress(pixels);
    b.stream_object(image_obj,
                    " /Type /XObject /Subtype /Image /Width " + std::to_string(width) +
                        " /Height " + std::to_string(height) +
                        " /ColorSpace /DeviceGray /BitsPerComponent 8 /Filter /FlateDecode",
                    packed);
  }

  return b.finish(1, total_objects);
}

// ---------------------------------------------------------------------------
// OOXML packages
// ---------------------------------------------------------------------------

namespace detail {

inline std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline Bytes str_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

inline std::string xml_decl() {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";
}

}  // namespace detail

struct OoxmlOptions {
  std::uint64_t approx_size = 8192;
  bool store_xml = false;  // STORE the XML parts instead of deflating
  bool with_media = false;
  std::uint64_t media_size = 2048;
  std::uint64_t pad = 0;
};

inline Bytes gen_docx(DetRng& rng, const OoxmlOptions& opts) {
  std::string body;
  const std::uint64_t budget = opts.approx_size + opts.pad;
  while (body.size() < budget) {
    std::string para;
    for (int s = 0; s < 3; ++s) detail::append_sentence(para, rng, TextStyle::Mixed);
    para.erase(std::remove(para.begin(), para.end(), '\n'), para.end());
    body += "<w:p><w:r><w:t xml:space=\"preserve\">" + detail::xml_escape(para) + "</w:t></w:r></w:p>";
  }
  const std::string document =
      detail::xml_decl() +
      "<w:document xmlns:w=\"http://schemas.openxmlformats.org/wordprocessingml/2006/main\">"
      "<w:body>" + body + "</w:body></w:document>";

  std::string content_types =
      detail::xml_decl() +
      "<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">"
      "<Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>"
      "<Default Extension=\"xml\" ContentType=\"application/xml\"/>";
  if (opts.with_media) content_types += "<Default Extension=\"png\" ContentType=\"image/png\"/>";
  content_types +=
      "<Override PartName=\"/word/document.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.wordprocessingml.document.main+xml\"/>"
      "</Types>";

  const std::string rels =
      detail::xml_decl() +
      "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
      "<Relationship Id=\"rId1\" "
      "Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument\" "
      "Target=\"word/document.xml\"/></Relationships>";

  std::string doc_rels =
      detail::xml_decl() +
      "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">";
  if (opts.with_media) {
    doc_rels +=
        "<Relationship Id=\"rId1\" "
        "Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/image\" "
        "Target=\"media/image1.png\"/>";
  }
  doc_rels += "</Relationships>";

  const std::string styles =
      detail::xml_decl() +
      "<w:styles xmlns:w=\"http://schemas.openxmlformats.org/wordprocessingml/2006/main\">"
      "<w:style w:type=\"paragraph\" w:styleId=\"Normal\"><w:name w:val=\"Normal\"/></w:style>"
      "</w:styles>";

  std::vector<zipwrite::MemberSpec> members;
  members.push_back({"[Content_Types].xml", detail::str_bytes(content_types), opts.store_xml});
  members.push_back({"_rels/.rels", detail::str_bytes(rels), opts.store_xml});
  members.push_back({"word/document.xml", detail::str_bytes(document), opts.store_xml});
  members.push_back({"word/_rels/document.xml.rels", detail::str_bytes(doc_rels), opts.store_xml});
  members.push_back({"word/styles.xml", detail::str_bytes(styles), opts.store_xml});
  if (opts.with_media) {
    members.push_back({"word/media/image1.png", gen_png_like(rng, opts.media_size), true});
  }
  return zipwrite::write_zip(members);
}

inline Bytes gen_xlsx(DetRng& rng, const OoxmlOptions& opts) {
  std::string rows;
  const std::uint64_t budget = opts.approx_size + opts.pad;
  int row = 1;
  while (rows.size() < budget) {
    rows += "<row r=\"" + std::to_string(row) + "\">";
    for (int c = 0; c < 6; ++c) {
      rows += "<c r=\"" + std::string(1, static_cast<char>('A' + c)) + std::to_string(row) +
              "\"><v>" + std::to_string(rng.bounded(1000000)) + "." + std::to_string(rng.bounded(100)) +
              "</v></c>";
    }
    rows += "</row>";
    ++row;
  }
  const std::string sheet =
      detail::xml_decl() +
      "<worksheet xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\">"
      "<sheetData>" + rows + "</sheetData></worksheet>";
  const std::string workbook =
      detail::xml_decl() +
      "<workbook xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\" "
      "xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\">"
      "<sheets><sheet name=\"Data\" sheetId=\"1\" r:id=\"rId1\"/></sheets></workbook>";
  const std::string content_types =
      detail::xml_decl() +
      "<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">"
      "<Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>"
      "<Default Extension=\"xml\" ContentType=\"application/xml\"/>"
      "<Override PartName=\"/xl/workbook.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>"
      "<Override PartName=\"/xl/worksheets/sheet1.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>"
      "</Types>";
  const std::string rels =
      detail::xml_decl() +
      "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
      "<Relationship Id=\"rId1\" "
      "Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument\" "
      "Target=\"xl/workbook.xml\"/></Relationships>";
  const std::string wb_rels =
      detail::xml_decl() +
      "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
      "<Relationship Id=\"rId1\" "
      "Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet\" "
      "Target=\"worksheets/sheet1.xml\"/></Relationships>";

  std::vector<zipwrite::MemberSpec> members;
  members.push_back({"[Content_Types].xml", detail::str_bytes(content_types), opts.store_xml});
  members.push_back({"_rels/.rels", detail::str_bytes(rels), opts.store_xml});
  members.push_back({"xl/workbook.xml", detail::str_bytes(workbook), opts.store_xml});
  members.push_back({"xl/_rels/workbook.xml.rels", detail::str_bytes(wb_rels), opts.store_xml});
  members.push_back({"xl/worksheets/sheet1.xml", detail::str_bytes(sheet), opts.store_xml});
  return zipwrite::write_zip(members);
}

inline Bytes gen_pptx(DetRng& rng, const OoxmlOptions& opts) {
  std::string paragraphs;
  const std::uint64_t budget = opts.approx_size + opts.pad;
  while (paragraphs.size() < budget) {
    std::string text;
    detail::append_sentence(text, rng, TextStyle::Plain);
    text.erase(std::remove(text.begin(), text.end(), '\n'), text.end());
    paragraphs += "<a:p><a:r><a:t>" + detail::xml_escape(text) + "</a:t></a:r></a:p>";
  }
  const std::string slide =
      detail::xml_decl() +
      "<p:sld xmlns:p=\"http://schemas.openxmlformats.org/presentationml/2006/main\" "
      "xmlns:a=\"http://schemas.openxmlformats.org/drawingml/2006/main\">"
      "<p:cSld><p:spTree>" + paragraphs + "</p:spTree></p:cSld></p:sld>";
  const std::string presentation =
      detail::xml_decl() +
      "<p:presentation xmlns:p=\"http://schemas.openxmlformats.org/presentationml/2006/main\" "
      "xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\">"
      "<p:sldIdLst><p:sldId id=\"256\" r:id=\"rId1\"/></p:sldIdLst></p:presentation>";
  const std::string content_types =
      detail::xml_decl() +
      "<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">"
      "<Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>"
      "<Default Extension=\"xml\" ContentType=\"application/xml\"/>"
      "<Override PartName=\"/ppt/presentation.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.presentationml.presentation.main+xml\"/>"
      "<Override PartName=\"/ppt/slides/slide1.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.presentationml.slide+xml\"/>"
      "</Types>";
  const std::string rels =
      detail::xml_decl() +
      "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
      "<Relationship Id=\"rId1\" "
      "Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument\" "
      "Target=\"ppt/presentation.xml\"/></Relationships>";
  const std::string pres_rels =
      detail::xml_decl() +
      "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
      "<Relationship Id=\"rId1\" "
      "Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/slide\" "
      "Target=\"slides/slide1.xml\"/></Relationships>";

  std::vector<zipwrite::MemberSpec> members;
  members.push_back({"[Content_Types].xml", detail::str_bytes(content_types), opts.store_xml});
  members.push_back({"_rels/.rels", detail::str_bytes(rels), opts.store_xml});
  members.push_back({"ppt/presentation.xml", detail::str_bytes(presentation), opts.store_xml});
  members.push_back({"ppt/_rels/presentation.xml.rels", detail::str_bytes(pres_rels), opts.store_xml});
  members.push_back({"ppt/slides/slide1.xml", detail::str_bytes(slide), opts.store_xml});
  if (opts.with_media) {
    members.push_back({"ppt/media/image1.png", gen_png_like(rng, opts.media_size), true});
  }
  return zipwrite::write_zip(members);
}

// ---------------------------------------------------------------------------
// Plain ZIP archives
// ---------------------------------------------------------------------------

struct ZipOptions {
  std::uint64_t approx_size = 8192;
  bool store_members = false;
  bool with_nested = false;
  bool with_media = false;
  bool with_encrypted_stub = false;
  std::uint64_t pad = 0;
};

inline Bytes gen_zip(DetRng& rng, const ZipOptions& opts) {
  std::vector<zipwrite::MemberSpec> members;
  const std::uint64_t budget = opts.approx_size + opts.pad;
  const std::size_t text_members = 2 + rng.bounded(3);
  for (std::size_t i = 0; i < text_members; ++i) {
    const std::uint64_t size = std::max<std::uint64_t>(256, budget / text_members);
    members.push_back({"docs/file" + std::to_string(i) + (i % 2 ? ".log" : ".txt"),
                       gen_text(rng, size, i % 3 == 0 ? TextStyle::Dense : TextStyle::Plain),
                       opts.store_members});
  }
  if (opts.with_nested) {
    std::vector<zipwrite::MemberSpec> inner;
    inner.push_back({"inner/a.txt", gen_text(rng, 700, TextStyle::Plain), false});
    inner.push_back({"inner/b.txt", gen_text(rng, 900, TextStyle::Plain), false});
    members.push_back({"bundle.zip", zipwrite::write_zip(inner), true});
  }
  if (opts.with_media) {
    members.push_back({"media/thumb.jpg", gen_jpeg_like(rng, 1536), true});
  }
  if (opts.with_encrypted_stub) {
    members.push_back({"secret.bin", rng.bytes(768), false, true});
  }
  return zipwrite::write_zip(members);
}

// ---------------------------------------------------------------------------
// Corpus assemblies
// ---------------------------------------------------------------------------

// Containers cannot be padded after the fact without opening a gap, so the
// generators are re-run with growing text padding until the size lands on a
// safe block remainder.
template <typename Gen>
inline Bytes sized_safely(Gen&& gen) {
  for (std::uint64_t pad = 0;; pad += 96 + pad / 2) {
    Bytes out = gen(pad);
    if (safe_block_remainder(out.size())) return out;
    if (pad > 1 << 16) return out;
  }
}

inline std::vector<FileSpec> text_corpus(std::uint64_t seed, std::size_t count,
                                         std::uint64_t min_size, std::uint64_t max_size,
                                         std::size_t tiny_count = 0) {
  DetRng rng(seed);
  std::vector<FileSpec> files;
  for (std::size_t i = 0; i < count; ++i) {
    const bool tiny = i < tiny_count;
    std::uint64_t size = tiny ? 160 + rng.bounded(440) : min_size + rng.bounded(max_size - min_size);
    if (!safe_block_remainder(size)) size += 64;
    TextStyle style = TextStyle::Plain;
    if (!tiny) {
      const std::uint64_t roll = rng.bounded(10);
      if (roll < 2) style = TextStyle::Dense;
      else if (roll < 4) style = TextStyle::Mixed;
      else if (roll == 4) style = TextStyle::Wide;
      // Anchor the statistical extremes so threshold tuning sees both a
      // high-entropy and a near-constant clean file.
      if (i == tiny_count) style = TextStyle::Wide;
      if (i == tiny_count + 1) style = TextStyle::Repetitive;
    }
    char name[48];
    std::snprintf(name, sizeof(name), "text/file_%04zu.txt", i);
    files.push_back({name, gen_text(rng, size, style)});
  }
  return files;
}

inline std::vector<FileSpec> zip_corpus(std::uint64_t seed, std::size_t count,
                                        std::uint64_t approx_size = 10240) {
  DetRng rng(seed);
  std::vector<FileSpec> files;
  for (std::size_t i = 0; i < count; ++i) {
    ZipOptions opts;
    opts.approx_size = approx_size / 2 + rng.bounded(approx_size);
    opts.store_members = rng.bounded(4) == 0;
    opts.with_nested = rng.bounded(3) == 0;
    opts.with_media = rng.bounded(3) == 0;
    opts.with_encrypted_stub = rng.bounded(4) == 0;
    char name[48];
    std::snprintf(name, sizeof(name), "zips/arch_%04zu.zip", i);
    files.push_back({name, sized_safely([&](std::uint64_t pad) {
                       ZipOptions padded = opts;
                       padded.pad = pad;
                       DetRng local(seed ^ (0x9e3779b97f4a7c15ull * (i + 1)));
                       return gen_zip(local, padded);
                     })});
  }
  return files;
}

inline std::vector<FileSpec> docx_corpus(std::uint64_t seed, std::size_t count,
                                         std::uint64_t approx_size = 9216) {
  DetRng rng(seed);
  std::vector<FileSpec> files;
  for (std::size_t i = 0; i < count; ++i) {
    OoxmlOptions opts;
    opts.approx_size = approx_size / 2 + rng.bounded(approx_size);
    opts.with_media = rng.bounded(3) == 0;
    // Media-dominated documents anchor the low end of the clean chi-squared
    // spectrum for threshold tuning.
    if (i % 5 == 0) {
      opts.with_media = true;
      opts.media_size = opts.approx_size * 3;
    }
    char name[48];
    std::snprintf(name, sizeof(name), "docs/doc_%04zu.docx", i);
    files.push_back({name, sized_safely([&](std::uint64_t pad) {
                       OoxmlOptions padded = opts;
                       padded.pad = pad;
                       DetRng local(seed ^ (0xbf58476d1ce4e5b9ull * (i + 1)));
                       return gen_docx(local, padded);
                     })});
  }
  return files;
}

inline std::vector<FileSpec> pdf_corpus(std::uint64_t seed, std::size_t count,
                                        std::uint64_t approx_size = 10240) {
  DetRng rng(seed);
  std::vector<FileSpec> files;
  for (std::size_t i = 0; i < count; ++i) {
    PdfOptions opts;
    opts.approx_size = approx_size / 2 + rng.bounded(approx_size);
    opts.with_image = rng.bounded(3) == 0;
    if (i % 5 == 0) {
      opts.with_image = true;
      opts.image_pixels = opts.approx_size * 3;
    }
    char name[48];
    std::snprintf(name, sizeof(name), "pdfs/doc_%04zu.pdf", i);
    files.push_back({name, sized_safely([&](std::uint64_t pad) {
                       PdfOptions padded = opts;
                       padded.pad = pad;
                       DetRng local(seed ^ (0x94d049bb133111ebull * (i + 1)));
                       return gen_pdf(local, padded);
                     })});
  }
  return files;
}

inline std::vector<FileSpec> media_files(std::uint64_t seed, std::uint64_t scale = 1) {
  DetRng rng(seed);
  std::vector<FileSpec> files;
  files.push_back({"media/photo.jpg", gen_jpeg_like(rng, 65536 * scale)});
  files.push_back({"media/logo.png", gen_png_like(rng, 32768 * scale)});
  files.push_back({"media/audio.mp3", gen_mp3_like(rng, 131072 * scale)});
  files.push_back({"media/video.mp4", gen_mp4_like(rng, 262144 * scale)});
  return files;
}

// The evaluation-protocol corpus: ten representative files of distinct
// formats that get cloned and encrypted, plus two extra benign files, at a
// total of roughly 16.4 MB. Content leans uncompressed so flagged spans track
// encrypted bytes closely.
inline std::vector<FileSpec> mixed_corpus(std::uint64_t seed) {
  DetRng rng(seed);
  std::vector<FileSpec> files;

  files.push_back({"assets/video.mp4", gen_mp4_like(rng, 1048576)});
  files.push_back({"assets/audio.mp3", gen_mp3_like(rng, 786432)});
  files.push_back({"assets/photo.jpg", gen_jpeg_like(rng, 524288)});
  files.push_back({"assets/logo.png", gen_png_like(rng, 262144)});

  files.push_back({"docs/report.pdf", sized_safely([&](std::uint64_t pad) {
                     DetRng local(seed ^ 0x1001);
                     return gen_pdf(local, {.approx_size = 2250000, .compress = false,
                                             .with_image = true, .pad = pad});
                   })});
  files.push_back({"docs/thesis.docx", sized_safely([&](std::uint64_t pad) {
                     DetRng local(seed ^ 0x1002);
                     return gen_docx(local, {.approx_size = 2250000, .store_xml = true,
                                              .with_media = true, .pad = pad});
                   })});
  files.push_back({"docs/budget.xlsx", sized_safely([&](std::uint64_t pad) {
                     DetRng local(seed ^ 0x1003);
                     return gen_xlsx(local, {.approx_size = 786432, .store_xml = true, .pad = pad});
                   })});
  files.push_back({"docs/deck.pptx", sized_safely([&](std::uint64_t pad) {
                     DetRng local(seed ^ 0x1004);
                     return gen_pptx(local, {.approx_size = 786432, .store_xml = true, .pad = pad});
                   })});
  files.push_back({"archive/backup.zip", sized_safely([&](std::uint64_t pad) {
                     DetRng local(seed ^ 0x1005);
                     ZipOptions opts;
                     opts.approx_size = 2097152;
                     opts.store_members = true;
                     opts.pad = pad;
                     return gen_zip(local, opts);
                   })});
  files.push_back({"notes/journal.txt", gen_text(rng, 4194304, TextStyle::Dense)});

  // Extra benign files: written with the corpus, never cloned.
  files.push_back({"notes/readme.txt", gen_text(rng, 786432, TextStyle::Dense)});
  files.push_back({"archive/old.zip", sized_safely([&](std::uint64_t pad) {
                     DetRng local(seed ^ 0x1006);
                     ZipOptions opts;
                     opts.approx_size = 524288;
                     opts.store_members = true;
                     opts.pad = pad;
                     return gen_zip(local, opts);
                   })});
  return files;
}

inline std::vector<std::string> mixed_corpus_clone_sources() {
  return {"assets/video.mp4", "assets/audio.mp3", "assets/photo.jpg", "assets/logo.png",
          "docs/report.pdf",  "docs/thesis.docx", "docs/budget.xlsx", "docs/deck.pptx",
          "archive/backup.zip", "notes/journal.txt"};
}

}  // namespace favscan::corpus
