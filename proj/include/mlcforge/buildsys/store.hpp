#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mlc::buildsys {

/// One line of `<store>/index`:
/// unit, arch digest, config digest, dataset digest, row count, archive path, build number.
struct StoreRecord {
  std::string unit;
  std::string arch_digest;
  std::string config_digest;
  std::string dataset_digest;
  std::uint64_t row_count = 0;
  std::string archive_path;  // project relative
  std::uint64_t build_no = 0;
  bool operator==(const StoreRecord&) const = default;
};

/// One line of `<store>/artifacts`: kind, name, digest, path.
struct ArtifactRecord {
  std::string kind;
  std::string name;
  std::string digest;
  std::string path;
  bool operator==(const ArtifactRecord&) const = default;
};

class Store {
 public:
  /// Reads `<dir>/index` and `<dir>/artifacts` when present. Throws
  /// ModelError(CorruptStore) naming the file and line on malformed content.
  static Store open(const std::filesystem::path& dir);

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
  [[nodiscard]] const std::vector<StoreRecord>& records() const { return records_; }
  [[nodiscard]] std::vector<const StoreRecord*> records_for(const std::string& unit) const;
  [[nodiscard]] std::uint64_t last_build() const;

  /// Replaces every record of the unit.
  void put(StoreRecord record);
  [[nodiscard]] const std::vector<ArtifactRecord>& artifacts() const { return artifacts_; }
  /// Replaces the artifact with the same kind and name.
  void put_artifact(ArtifactRecord record);

  /// Writes both files through a temporary and a rename.
  void save() const;

  static std::string format_record(const StoreRecord& r);

 private:
  std::filesystem::path dir_;
  std::vector<StoreRecord> records_;
  std::vector<ArtifactRecord> artifacts_;
};

/// Writes `bytes` to `path` via `<path>.tmp` and rename.
void write_atomically(const std::filesystem::path& path, const std::string& bytes);

}  // namespace mlc::buildsys
