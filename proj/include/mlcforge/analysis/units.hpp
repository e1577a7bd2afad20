#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlcforge/analysis/shapes.hpp"
#include "mlcforge/core/model.hpp"

namespace mlc::analysis {

/// A feature after type resolution. Tensor features of width N map to
/// dataset columns `<name>_0` .. `<name>_{N-1}`.
struct FeatureSpec {
  std::string name;
  std::int64_t width = 1;
  bool numeric = true;
  std::vector<std::string> columns;
};

/// Something the build system trains: a network with a `data.<Name>` manifest
/// entry, or a thing with an ml block.
struct TrainableUnit {
  enum class Kind { network, thing };
  Kind kind = Kind::network;
  std::string name;
  std::string dataset;
  bool sequential = false;
  /// `network` for architectures, else the ml block's algorithm id.
  std::string algorithm;
  std::string schema;
  ConfigTree config;  // effective: input plus schema defaults
  PreprocessPlan plan;
  std::vector<FeatureSpec> features;
  std::string label_column;
  LabelsMode labels = LabelsMode::on;
  bool classification = true;
  std::int64_t n_outputs = 1;
  std::optional<NetworkArch> arch;  // concrete and def-flat
  std::vector<std::string> depends_on;
  std::string training_results;
  std::string prediction_results;
  std::string backend;
  SourceSpan span;

  [[nodiscard]] std::vector<std::string> feature_columns() const;
  [[nodiscard]] std::int64_t n_features() const;
};

const char* to_string(TrainableUnit::Kind k);

/// Resolves a thing feature or label: property, then message parameter, then a
/// message with exactly one parameter.
std::optional<ValueType> resolve_feature_type(const ThingDef& thing, const std::string& name);

FeatureSpec make_feature(const std::string& name, const ValueType& type);

/// Bindings for a network from its pipeline instances. Diagnostics: MissingBinding,
/// AmbiguousBinding.
std::optional<NetworkArch> instantiate(const NetworkArch& arch, const ModelUnit& unit, Diagnostics& diags);

/// Resolves `unit:<Name>` against the unit's networks and anything else as an
/// archive path relative to the project root.
ImportResolver default_import_resolver(const ModelUnit& unit);

struct UnitsResult {
  std::vector<TrainableUnit> units;
  Diagnostics diagnostics;
};

/// Trainable units in dependency order (ImportPretrained `unit:` references
/// first), ties broken by name.
UnitsResult trainable_units(const ModelUnit& unit);

}  // namespace mlc::analysis
