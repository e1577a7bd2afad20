#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlcforge/analysis/analyze.hpp"
#include "mlcforge/buildsys/store.hpp"
#include "mlcforge/codegen/backend.hpp"

namespace mlc::buildsys {

/// Content digests of one trainable unit. The backend id is folded into the
/// architecture digest.
struct UnitDigests {
  std::string arch;
  std::string config;
  std::string dataset;
  std::uint64_t rows = 0;
};

/// Throws ModelError on unreadable datasets or unsupported units.
UnitDigests unit_digests(const analysis::TrainableUnit& unit, const ModelUnit& model,
                         const codegen::BackendAdapter& backend);

enum class Decision { skip, cold_train, warm_retrain };
const char* to_string(Decision d);

struct UnitPlan {
  std::string unit;
  Decision decision = Decision::cold_train;
  std::string reason;  // no-prior, forced, arch-changed, config-changed, dataset-changed, dataset-appended, ...
  std::optional<StoreRecord> prior;
  UnitDigests digests;
  std::vector<std::string> depends_on;
};

struct BuildPlan {
  std::vector<UnitPlan> units;  // topological order
  Diagnostics diagnostics;      // AmbiguousPrior infos
  [[nodiscard]] bool all_skip() const;
  [[nodiscard]] const UnitPlan* find(const std::string& unit) const;
};

struct PlanOptions {
  bool force = false;
  /// Restricts `force` to these units when non-empty.
  std::vector<std::string> force_units;
};

/// Decision table, first match wins:
///   forced -> ColdTrain(forced); no record -> ColdTrain(no-prior);
///   archive file missing -> ColdTrain(archive-missing); arch digest differs -> ColdTrain(arch-changed);
///   config digest differs -> ColdTrain(config-changed); a dependency retrains -> ColdTrain(dependency-retrained);
///   dataset unchanged -> Skip; recorded rows are an exact prefix -> WarmRetrain(dataset-appended);
///   otherwise ColdTrain(dataset-changed).
BuildPlan plan(const analysis::AnalysisResult& analysis, const Store& store, const PlanOptions& options = {},
               const codegen::BackendRegistry& backends = codegen::BackendRegistry::builtin());

std::string format_plan(const BuildPlan& plan);

}  // namespace mlc::buildsys
