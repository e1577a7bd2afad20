#pragma once

#include <string>

#include "mlcforge/analysis/analyze.hpp"
#include "mlcforge/buildsys/store.hpp"

namespace mlc::buildsys {

enum class PackageKind { source, model, dataset };
const char* to_string(PackageKind k);  // source-archive, model-archive, dataset-archive
std::optional<PackageKind> parse_package_kind(std::string_view text);

struct PackageResult {
  std::string path;  // project relative
  std::string digest;
  ConfigTree manifest;
};

/// Builds a deterministic tar archive below `<store>/packages/` holding a
/// `MANIFEST` entry and the inputs, and records it in the store's artifact list.
///   source: every project source plus generated files when present;
///   model:  the unit's latest weight archive and training log;
///   dataset: the unit's dataset.
/// Model and dataset manifests reference each other by digest.
/// Throws ModelError(MissingInput) when an input does not exist.
PackageResult package(PackageKind kind, const analysis::AnalysisResult& analysis, Store& store,
                      const std::string& unit = {});

}  // namespace mlc::buildsys
