#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlcforge/analysis/lint.hpp"
#include "mlcforge/analysis/shapes.hpp"
#include "mlcforge/analysis/statechart.hpp"
#include "mlcforge/analysis/units.hpp"
#include "mlcforge/analysis/wiring.hpp"

namespace mlc::analysis {

struct AnalysisOptions {
  /// Overrides the manifest's automl flag.
  std::optional<bool> automl;
};

struct AnalysisResult {
  ModelUnit unit;  // after auto-fixes
  Diagnostics diagnostics;
  std::vector<TrainableUnit> units;
  /// Keyed by network name for generic-free networks and by instance name for pipeline instances.
  std::map<std::string, ShapeAnnotation> shapes;
  [[nodiscard]] bool ok() const { return !has_errors(diagnostics); }
};

/// All semantic passes: config validation, shapes, statecharts, wiring,
/// lints, trainable units. Diagnostics are sorted by (file, offset).
AnalysisResult analyze(const ModelUnit& unit, const AnalysisOptions& options = {});

}  // namespace mlc::analysis
