#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mlc::support {

struct TarEntry {
  std::string path;  // at most 100 bytes, or 255 with a '/' split into prefix
  std::string content;
  bool operator==(const TarEntry&) const = default;
};

/// POSIX ustar archive in the given entry order with zeroed timestamps,
/// uid/gid 0, mode 0644 and empty owner names.
std::string write_tar(const std::vector<TarEntry>& entries);

/// Regular-file entries; throws ModelError(CorruptArchive) on bad headers.
std::vector<TarEntry> read_tar(std::string_view bytes);

}  // namespace mlc::support
