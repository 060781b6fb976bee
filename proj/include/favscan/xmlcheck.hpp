#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "favscan/common.hpp"

namespace favscan::xmlcheck {

// Well-formedness only: balanced tags, a single root, quoted attributes,
// legal name starts, no stray control bytes, terminated entities. No schema
// or namespace awareness. Input is assumed to already be valid UTF-8.
inline bool well_formed(ByteSpan data) {
  std::size_t i = 0;
  const std::size_t n = data.size();

  auto skip_ws = [&] {
    while (i < n && (data[i] == ' ' || data[i] == '\t' || data[i] == '\r' || data[i] == '\n')) ++i;
  };
  auto is_name_start = [](std::uint8_t c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':' || c >= 0x80;
  };
  auto is_name_char = [&](std::uint8_t c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
  };
  auto read_name = [&]() -> std::string {
    if (i >= n || !is_name_start(data[i])) return {};
    std::string name;
    while (i < n && is_name_char(data[i])) name.push_back(static_cast<char>(data[i++]));
    return name;
  };
  auto match = [&](const char* lit) {
    std::size_t len = 0;
    while (lit[len] != '\0') ++len;
    if (i + len > n) return false;
    for (std::size_t k = 0; k < len; ++k) {
      if (data[i + k] != static_cast<std::uint8_t>(lit[k])) return false;
    }
    i += len;
    return true;
  };
  auto find_close = [&](const char* lit) {
    std::size_t len = 0;
    while (lit[len] != '\0') ++len;
    while (i + len <= n) {
      bool hit = true;
      for (std::size_t k = 0; k < len; ++k) {
        if (data[i + k] != static_cast<std::uint8_t>(lit[k])) {
          hit = false;
          break;
        }
      }
      if (hit) {
        i += len;
        return true;
      }
      ++i;
    }
    return false;
  };
  auto check_entity = [&]() {  // at '&'
    ++i;
    std::size_t start = i;
    if (i < n && data[i] == '#') {
      ++i;
      if (i < n && (data[i] == 'x' || data[i] == 'X')) ++i;
      while (i < n && ((data[i] >= '0' && data[i] <= '9') || (data[i] >= 'a' && data[i] <= 'f') ||
                       (data[i] >= 'A' && data[i] <= 'F'))) {
        ++i;
      }
    } else {
      while (i < n && is_name_char(data[i])) ++i;
    }
    if (i == start || i >= n || data[i] != ';') return false;
    ++i;
    return true;
  };
  auto check_attr_value = [&]() {
    if (i >= n || (data[i] != '"' && data[i] != '\'')) return false;
    const std::uint8_t quote = data[i++];
    while (i < n && data[i] != quote) {
      if (data[i] == '<') return false;
      if (data[i] == '&') {
        if (!check_entity()) return false;
        continue;
      }
      if (data[i] < 0x20 && data[i] != '\t' && data[i] != '\n' && data[i] != '\r') return false;
      ++i;
    }
    if (i >= n) return false;
    ++i;
    return true;
  };

  std::vector<std::string> stack;
  bool seen_root = false;

  // Optional BOM and XML declaration.
  if (n >= 3 && data[0] == 0xEF && data[1] == 0xBB && data[2] == 0xBF) i = 3;
  skip_ws();
  if (i + 5 <= n && match("<?xml")) {
    if (!find_close("?>")) return false;
  }

  while (i < n) {
    if (data[i] != '<') {
      if (stack.empty()) {
        // Only whitespace allowed outside the root element.
        if (data[i] == ' ' || data[i] == '\t' || data[i] == '\r' || data[i] == '\n') {
          ++i;
          continue;
        }
        return false;
      }
      if (data[i] == '&') {
        if (!check_entity()) return false;
        continue;
      }
      if (data[i] < 0x20 && data[i] != '\t' && data[i] != '\n' && data[i] != '\r') return false;
      ++i;
      continue;
    }

    // '<' — decide what kind of markup this is.
    if (match("<!--")) {
      if (!find_close("-->")) return false;
      continue;
    }
    if (match("<![CDATA[")) {
      if (stack.empty()) return false;
      if (!find_close("]]>")) return false;
      continue;
    }
    if (match("<!DOCTYPE")) {
      if (seen_root) return false;
      int depth = 1;
      ++i;  // consume at least one byte after the keyword
      while (i < n && depth > 0) {
        if (data[i] == '<') ++depth;
        if (data[i] == '>') --depth;
        ++i;
      }
      if (depth != 0) return false;
      continue;
    }
    if (match("<?")) {
      if (!find_close("?>")) return false;
      continue;
    }
    if (i + 1 < n && data[i + 1] == '/') {
      i += 2;
      const std::string name = read_name();
      if (name.empty() || stack.empty() || stack.back() != name) return false;
      skip_ws();
      if (i >= n || data[i] != '>') return false;
      ++i;
      stack.pop_back();
      continue;
    }

    // Start tag.
    ++i;
    const std::string name = read_name();
    if (name.empty()) return false;
    if (stack.empty() && seen_root) return false;  // second root
    bool self_closing = false;
    while (true) {
      skip_ws();
      if (i >= n) return false;
      if (data[i] == '/') {
        ++i;
        if (i >= n || data[i] != '>') return false;
        ++i;
        self_closing = true;
        break;
      }
      if (data[i] == '>') {
        ++i;
        break;
      }
      const std::string attr = read_name();
      if (attr.empty()) return false;
      skip_ws();
      if (i >= n || data[i] != '=') return false;
      ++i;
      skip_ws();
      if (!check_attr_value()) return false;
    }
    seen_root = true;
    if (!self_closing) stack.push_back(name);
  }

  return stack.empty() && seen_root;
}

}  // namespace favscan::xmlcheck
