#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mlcforge/core/model.hpp"

namespace mlc::analysis {

/// What a lint rule looks at: one trainable network or ml block.
struct LintSubject {
  enum class Kind { network, thing } kind = Kind::network;
  std::string name;
  ConfigTree effective;
  bool ann = false;
  bool sequential = false;
  std::string dataset;
  /// Numeric features not covered by a standardize/normalize step.
  std::vector<std::string> unscaled;
  std::vector<double> dropout_layers;
  SourceSpan span;
};

struct LintRule {
  std::string id;
  Severity severity = Severity::warning;
  std::string summary;
  /// Finding message, or nullopt when the subject passes.
  std::function<std::optional<std::string>(const LintSubject&)> check;
  /// Rewrites the unit so the check passes; absent for rules without a fix.
  std::function<std::string(ModelUnit&, const LintSubject&)> fix;
};

/// R1 learning rate in (0, 1], R2 dropout in [0, 1), R3 scaled ANN inputs,
/// R4 no shuffling of sequential data, R5 at least one epoch.
const std::vector<LintRule>& builtin_lint_rules();

std::vector<LintSubject> lint_subjects(const ModelUnit& unit);

struct LintResult {
  Diagnostics diagnostics;
  ModelUnit unit;  // rewritten only when automl mode is on
  std::size_t fixes = 0;
};

/// With `automl` on, fixable findings are rewritten and reported as info
/// diagnostics instead of warnings or errors.
LintResult lint_automl(const ModelUnit& unit, bool automl,
                       const std::vector<LintRule>& rules = builtin_lint_rules());

}  // namespace mlc::analysis
