#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace mlc::support {

using RawDigest = std::array<std::uint8_t, 32>;

RawDigest sha256(std::string_view bytes);
/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string to_hex(const RawDigest& d);

/// Incremental hashing for large inputs.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(std::string_view bytes);
  RawDigest finish();

 private:
  void* ctx_;
};

/// Digest of raw file bytes; throws std::runtime_error when unreadable.
std::string file_digest(const std::filesystem::path& path);

/// Digest of source text after CRLF -> LF normalization.
std::string source_digest(std::string_view text);

}  // namespace mlc::support
