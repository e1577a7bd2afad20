#pragma once

#include <string>

#include "mlcforge/analysis/analyze.hpp"
#include "mlcforge/codegen/backend.hpp"
#include "mlcforge/codegen/fileset.hpp"

namespace mlc::codegen {

/// Training program and spec file for one unit, below `gen/train/<unit>/`.
/// Throws ModelError(UnsupportedCapability).
GeneratedFileSet generate_training_program(const analysis::TrainableUnit& unit, const BackendAdapter& backend,
                                           const analysis::ImportResolver& imports);

/// The shared runtime header `gen/runtime/mlc_runtime.hpp`.
GeneratedFileSet generate_runtime_support();

/// `gen/runtime/<thing>/<thing>_glue.hpp`: transition table, message codecs
/// and bridge call sites for the thing's ML actions.
GeneratedFileSet generate_runtime_glue(const ThingDef& thing, const BackendAdapter& backend);

/// One skeleton per stub type instantiated in the pipeline, below `gen/stubs/`.
GeneratedFileSet generate_component_stubs(const PipelineGraph& pipeline, const ModelUnit& unit);

/// Spec consumed by the training program and by the bridge's TRAIN verb.
ConfigTree training_spec(const analysis::TrainableUnit& unit, const ModelSpec& spec);

/// Default archive and log locations of a unit inside the store.
std::string default_archive_path(const ModelUnit& unit, const std::string& name);
std::string default_log_path(const ModelUnit& unit, const analysis::TrainableUnit& tu);

struct GenerateResult {
  GeneratedFileSet files;  // includes gen/MANIFEST
  Diagnostics diagnostics;
  [[nodiscard]] bool ok() const { return !has_errors(diagnostics); }
};

/// Everything for an analysis-clean unit. Backends are looked up per unit.
GenerateResult generate_all(const analysis::AnalysisResult& analysis,
                            const BackendRegistry& backends = BackendRegistry::builtin());

}  // namespace mlc::codegen
