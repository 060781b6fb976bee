#pragma once

#include <openssl/evp.h>
#include <zlib.h>

#include <array>
#include <string>

#include "favscan/common.hpp"

namespace favscan {

inline std::array<std::uint8_t, 32> sha256(ByteSpan data) {
  std::array<std::uint8_t, 32> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
    throw std::runtime_error("sha256 failed");
  }
  return digest;
}

inline std::string sha256_hex(ByteSpan data) {
  const auto digest = sha256(data);
  return to_hex(ByteSpan(digest.data(), digest.size()));
}

inline std::uint32_t crc32_of(ByteSpan data) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

}  // namespace favscan
