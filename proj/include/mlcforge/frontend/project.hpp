#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mlcforge/core/model.hpp"

namespace mlc::frontend {

inline constexpr const char* kManifestFile = "mlc.project";

struct ManifestResult {
  ProjectManifest manifest;
  Diagnostics diagnostics;
};

/// Flat `key = value` lines; `#` starts a comment. Glob lists are comma separated.
ManifestResult parse_manifest(std::string_view text, const std::string& file = kManifestFile);

struct ProjectResult {
  ModelUnit unit;
  Diagnostics diagnostics;
};

/// Parses every file matched by the manifest globs in lexicographic path order
/// and resolves names across files. `unit.valid` is false when any error was reported.
ProjectResult load_project(const std::filesystem::path& dir);

/// `*` and `?` stay within one path segment, `**/` matches zero or more directories.
bool glob_match(std::string_view pattern, std::string_view path);

/// Reads a file and normalizes CRLF to LF.
std::string read_source(const std::filesystem::path& path);

}  // namespace mlc::frontend
