#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mlc::codegen {

inline constexpr const char* kToolchainVersion = "mlcforge 0.1.0";

enum class FileKind { training_program, runtime_glue, stub_interface, manifest };
const char* to_string(FileKind k);

struct GeneratedFile {
  std::string path;  // project relative, '/' separated
  std::string content;
  FileKind kind = FileKind::training_program;
  bool operator==(const GeneratedFile&) const = default;
};

/// Path-sorted, path-unique set of generated files.
class GeneratedFileSet {
 public:
  /// Throws ModelError(DuplicatePath) when the path is already present.
  void add(GeneratedFile file);
  void merge(GeneratedFileSet other);
  [[nodiscard]] const GeneratedFile* find(const std::string& path) const;
  [[nodiscard]] const std::vector<GeneratedFile>& files() const { return files_; }
  [[nodiscard]] std::size_t size() const { return files_.size(); }
  [[nodiscard]] bool empty() const { return files_.empty(); }

  /// `<sha256>  <path>` per file, path order.
  [[nodiscard]] std::string manifest_text() const;
  /// Writes every file below `root`; files whose bytes are unchanged are not touched.
  void write_to(const std::filesystem::path& root) const;

  bool operator==(const GeneratedFileSet&) const = default;

 private:
  std::vector<GeneratedFile> files_;
};

}  // namespace mlc::codegen
