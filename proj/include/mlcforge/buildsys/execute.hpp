#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mlcforge/buildsys/plan.hpp"
#include "mlcforge/support/bridge.hpp"

namespace mlc::buildsys {

using BridgeFactory = std::function<std::unique_ptr<support::BridgeClient>()>;

struct UnitReport {
  std::string unit;
  Decision decision = Decision::skip;
  std::string reason;
  enum class Status { ok, skipped, failed, aborted } status = Status::ok;
  double wall_seconds = 0;
  double metric = 0;
  std::int64_t first_epoch = 0;
  std::string archive;
  std::string error_code;  // TrainingFailed, BridgeTimeout, DependencyFailed
  std::string error;
};

const char* to_string(UnitReport::Status s);

struct BuildReport {
  std::uint64_t build_no = 0;
  std::vector<UnitReport> units;
  int trainings = 0;
  [[nodiscard]] bool ok() const;
  /// Machine-readable report in .tcl syntax, stable key order.
  [[nodiscard]] ConfigTree to_config() const;
};

struct ExecuteOptions {
  int jobs = 1;
};

/// Trains every non-Skip unit through a bridge from `bridges` (one per job),
/// in dependency order. Successful units are recorded in the store, which is
/// saved after each one. Failures abort dependents only.
BuildReport execute(const BuildPlan& plan, const analysis::AnalysisResult& analysis, Store& store,
                    const BridgeFactory& bridges, const ExecuteOptions& options = {});

}  // namespace mlc::buildsys
