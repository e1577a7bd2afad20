#include "mlcforge/codegen/fileset.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "mlcforge/core/error.hpp"
#include "mlcforge/support/digest.hpp"

namespace mlc::codegen {

const char* to_string(FileKind k) {
  switch (k) {
    case FileKind::training_program: return "training-program";
    case FileKind::runtime_glue: return "runtime-glue";
    case FileKind::stub_interface: return "stub-interface";
    case FileKind::manifest: return "manifest";
  }
  return "manifest";
}

void GeneratedFileSet::add(GeneratedFile file) {
  auto it = std::lower_bound(files_.begin(), files_.end(), file.path,
                             [](const GeneratedFile& f, const std::string& p) { return f.path < p; });
  if (it != files_.end() && it->path == file.path)
    throw ModelError("DuplicatePath", fmt::format("generated path '{}' produced twice", file.path));
  files_.insert(it, std::move(file));
}

void GeneratedFileSet::merge(GeneratedFileSet other) {
  for (auto& f : other.files_) add(std::move(f));
}

const GeneratedFile* GeneratedFileSet::find(const std::string& path) const {
  auto it = std::lower_bound(files_.begin(), files_.end(), path,
                             [](const GeneratedFile& f, const std::string& p) { return f.path < p; });
  return it != files_.end() && it->path == path ? &*it : nullptr;
}

std::string GeneratedFileSet::manifest_text() const {
  std::string out;
  for (const auto& f : files_) out += fmt::format("{}  {}\n", support::sha256_hex(f.content), f.path);
  return out;
}

void GeneratedFileSet::write_to(const std::filesystem::path& root) const {
  for (const auto& f : files_) {
    auto path = root / f.path;
    std::filesystem::create_directories(path.parent_path());
    {
      std::ifstream in(path, std::ios::binary);
      if (in) {
        std::string old((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (old == f.content) continue;
      }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelError("MissingInput", "cannot write " + path.string());
    out << f.content;
  }
}

}  // namespace mlc::codegen
