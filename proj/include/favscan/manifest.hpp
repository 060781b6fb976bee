#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "favscan/common.hpp"
#include "favscan/hash.hpp"
#include "favscan/pdf.hpp"
#include "favscan/zip.hpp"

namespace favscan::manifest {

namespace fs = std::filesystem;

enum class WhitelistStatus { Verified, Unknown, Mismatch };
enum class PayloadForm { Raw, Decoded };

inline const std::set<std::string>& default_media_extensions() {
  static const std::set<std::string> exts{"jpg", "jpeg", "png", "mp3", "mp4"};
  return exts;
}

inline std::string extension_of(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

inline bool is_media_name(const std::string& name, const std::set<std::string>& exts) {
  return exts.count(extension_of(name)) > 0;
}

inline bool in_media_directory(const std::string& member_name) {
  for (const char* dir : {"word/media/", "ppt/media/", "xl/media/", "docProps/thumbnail"}) {
    if (member_name.rfind(dir, 0) == 0) return true;
  }
  return false;
}

// SHA-256 whitelist of published files and opaque container components.
// Component identifiers are (container path, member name) for archives and
// (container path, "obj:N") for PDF streams; paths are corpus-relative.
class TrustedManifest {
 public:
  void add_file(const std::string& path, const std::string& hex) { file_hashes_[path] = hex; }

  void add_component(const std::string& container, const std::string& member, const std::string& hex,
                     PayloadForm form) {
    components_[{container, member}] = {hex, form};
  }

  WhitelistStatus check_file(const std::string& path, ByteSpan bytes) const {
    auto it = file_hashes_.find(path);
    if (it == file_hashes_.end()) return WhitelistStatus::Unknown;
    return sha256_hex(bytes) == it->second ? WhitelistStatus::Verified : WhitelistStatus::Mismatch;
  }

  WhitelistStatus check_component(const std::string& container, const std::string& member,
                                  ByteSpan payload) const {
    auto it = components_.find({container, member});
    if (it == components_.end()) return WhitelistStatus::Unknown;
    return sha256_hex(payload) == it->second.sha256 ? WhitelistStatus::Verified
                                                    : WhitelistStatus::Mismatch;
  }

  std::optional<PayloadForm> component_form(const std::string& container,
                                            const std::string& member) const {
    auto it = components_.find({container, member});
    if (it == components_.end()) return std::nullopt;
    return it->second.form;
  }

  std::size_t file_count() const { return file_hashes_.size(); }
  std::size_t component_count() const { return components_.size(); }
  const std::vector<std::string>& skipped() const { return skipped_; }
  void record_skipped(const std::string& path) { skipped_.push_back(path); }

  nlohmann::json to_json() const {
    nlohmann::json files = nlohmann::json::object();
    for (const auto& [path, hex] : file_hashes_) files[path] = hex;
    nlohmann::json components = nlohmann::json::array();
    for (const auto& [key, entry] : components_) {
      components.push_back({{"container", key.first},
                            {"member", key.second},
                            {"sha256", entry.sha256},
                            {"payload_form", entry.form == PayloadForm::Raw ? "raw" : "decoded"}});
    }
    return {{"format_version", 1}, {"file_hashes", files}, {"component_hashes", components}};
  }

  static TrustedManifest from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1) throw ManifestError("unsupported manifest version");
    TrustedManifest m;
    for (const auto& [path, hex] : j.at("file_hashes").items()) {
      m.add_file(path, hex.get<std::string>());
    }
    for (const auto& c : j.at("component_hashes")) {
      m.add_component(c.at("container").get<std::string>(), c.at("member").get<std::string>(),
                      c.at("sha256").get<std::string>(),
                      c.at("payload_form").get<std::string>() == "raw" ? PayloadForm::Raw
                                                                       : PayloadForm::Decoded);
    }
    return m;
  }

  void save(const fs::path& path) const {
    const std::string text = to_json().dump(2);
    write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  static TrustedManifest load(const fs::path& path) {
    const Bytes data = read_file(path);
    return from_json(nlohmann::json::parse(data.begin(), data.end()));
  }

 private:
  struct ComponentEntry {
    std::string sha256;
    PayloadForm form = PayloadForm::Raw;
  };

  std::map<std::string, std::string> file_hashes_;
  std::map<std::pair<std::string, std::string>, ComponentEntry> components_;
  std::vector<std::string> skipped_;
};

namespace detail {

inline bool looks_like_zip(ByteSpan bytes) {
  return bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' &&
         (bytes[2] == 0x03 || bytes[2] == 0x05) && (bytes[3] == 0x04 || bytes[3] == 0x06);
}

inline bool looks_like_pdf(ByteSpan bytes) {
  return bytes.size() >= 7 && std::equal(bytes.begin(), bytes.begin() + 7,
                                         reinterpret_cast<const std::uint8_t*>("%PDF-1."));
}

inline void index_container_components(TrustedManifest& m, const std::string& path, ByteSpan bytes,
                                       const std::set<std::string>& media_exts) {
  auto map = zip::parse(bytes);
  if (!map) return;
  for (const auto& member : map->members) {
    const bool opaque = member.encrypted() || is_media_name(member.name, media_exts) ||
                        in_media_directory(member.name);
    if (!opaque || member.payload_range.empty()) continue;
    const ByteSpan payload = bytes.subspan(member.payload_range.offset, member.payload_range.length);
    m.add_component(path, member.name, sha256_hex(payload), PayloadForm::Raw);
  }
}

inline void index_pdf_components(TrustedManifest& m, const std::string& path, ByteSpan bytes) {
  auto map = pdf::parse(bytes);
  if (!map) return;
  for (const auto& obj : map->objects) {
    if (!obj.has_stream) continue;
    if (obj.cls != pdf::StreamClass::Image && obj.cls != pdf::StreamClass::Font) continue;
    const std::string member = "obj:" + std::to_string(obj.num);
    // Canonical payload: decoded bytes when the filter chain is fully
    // supported, raw stream bytes otherwise. The form is recorded so checks
    // compare like with like.
    if (pdf::filters_supported(obj.filters)) {
      if (auto decoded = pdf::decode_stream(bytes, obj, 256ull << 20)) {
        m.add_component(path, member, sha256_hex(*decoded), PayloadForm::Decoded);
        continue;
      }
    }
    const ByteSpan payload = bytes.subspan(obj.stream_payload.offset, obj.stream_payload.length);
    m.add_component(path, member, sha256_hex(payload), PayloadForm::Raw);
  }
}

}  // namespace detail

inline TrustedManifest build_from_files(
    const std::vector<std::pair<std::string, Bytes>>& files,
    const std::set<std::string>& media_exts = default_media_extensions()) {
  TrustedManifest m;
  for (const auto& [path, bytes] : files) {
    if (is_media_name(path, media_exts)) {
      m.add_file(path, sha256_hex(bytes));
    }
    if (detail::looks_like_zip(bytes)) {
      detail::index_container_components(m, path, bytes, media_exts);
    } else if (detail::looks_like_pdf(bytes)) {
      detail::index_pdf_components(m, path, bytes);
    }
  }
  return m;
}

inline TrustedManifest build_manifest(
    const fs::path& corpus_dir,
    const std::set<std::string>& media_exts = default_media_extensions()) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(corpus_dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());

  TrustedManifest m;
  std::vector<std::pair<std::string, Bytes>> files;
  for (const auto& path : paths) {
    try {
      files.emplace_back(fs::relative(path, corpus_dir).generic_string(), read_file(path));
    } catch (const std::exception&) {
      m.record_skipped(path.string());
    }
  }
  TrustedManifest built = build_from_files(files, media_exts);
  for (const auto& skipped : m.skipped()) built.record_skipped(skipped);
  return built;
}

}  // namespace favscan::manifest
