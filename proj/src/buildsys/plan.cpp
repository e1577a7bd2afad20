#include "mlcforge/buildsys/plan.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mlcforge/codegen/generate.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/support/csv.hpp"
#include "mlcforge/support/digest.hpp"

namespace mlc::buildsys {

const char* to_string(Decision d) {
  switch (d) {
    case Decision::skip: return "Skip";
    case Decision::cold_train: return "ColdTrain";
    case Decision::warm_retrain: return "WarmRetrain";
  }
  return "?";
}

UnitDigests unit_digests(const analysis::TrainableUnit& unit, const ModelUnit& model,
                         const codegen::BackendAdapter& backend) {
  auto spec = backend.model_spec(unit, analysis::default_import_resolver(model));
  ConfigTree tree = codegen::training_spec(unit, spec);

  ConfigTree arch;
  arch.set("backend", backend.id());
  for (const char* key : {"kind", "algorithm", "features", "label", "labels", "n_outputs", "model"})
    if (const auto* v = tree.find(key)) arch.set(key, *v);
  std::string arch_text = frontend::print_config(arch);
  if (unit.arch) arch_text += frontend::print_network(*unit.arch);

  ConfigTree config;
  for (const char* key : {"training", "preprocess", "sequential"})
    if (const auto* v = tree.find(key)) config.set(key, *v);

  UnitDigests d;
  d.arch = support::source_digest(arch_text);
  d.config = support::source_digest(frontend::print_config(config));
  auto info = support::scan_csv(std::filesystem::path(model.root) / unit.dataset);
  d.dataset = info.digest;
  d.rows = info.rows;
  return d;
}

bool BuildPlan::all_skip() const {
  return std::all_of(units.begin(), units.end(), [](const UnitPlan& u) { return u.decision == Decision::skip; });
}

const UnitPlan* BuildPlan::find(const std::string& unit) const {
  for (const auto& u : units)
    if (u.unit == unit) return &u;
  return nullptr;
}

BuildPlan plan(const analysis::AnalysisResult& analysis, const Store& store, const PlanOptions& options,
               const codegen::BackendRegistry& backends) {
  BuildPlan out;
  const ModelUnit& model = analysis.unit;
  for (const auto& tu : analysis.units) {
    UnitPlan p;
    p.unit = tu.name;
    p.depends_on = tu.depends_on;
    const auto* backend = backends.find(tu.backend.empty() ? model.manifest.backend : tu.backend);
    if (backend == nullptr) throw ModelError("InvalidBackend", fmt::format("unknown backend '{}'", tu.backend), tu.span);
    p.digests = unit_digests(tu, model, *backend);

    auto records = store.records_for(tu.name);
    const StoreRecord* latest = nullptr;
    for (const auto* r : records)
      if (latest == nullptr || r->build_no > latest->build_no) latest = r;
    if (records.size() > 1)
      out.diagnostics.push_back(make_info("AmbiguousPrior",
                                          fmt::format("{} records for '{}'; using build {} ({})", records.size(),
                                                      tu.name, latest->build_no, latest->archive_path),
                                          tu.span));
    if (latest) p.prior = *latest;

    auto set = [&](Decision d, const char* reason) {
      p.decision = d;
      p.reason = reason;
    };
    bool forced = options.force && (options.force_units.empty() ||
                                    std::find(options.force_units.begin(), options.force_units.end(), tu.name) !=
                                        options.force_units.end());
    bool dependency_trains = std::any_of(tu.depends_on.begin(), tu.depends_on.end(), [&](const std::string& dep) {
      const UnitPlan* d = out.find(dep);
      return d != nullptr && d->decision != Decision::skip;
    });
    if (forced) {
      set(Decision::cold_train, "forced");
    } else if (latest == nullptr) {
      set(Decision::cold_train, "no-prior");
    } else if (!std::filesystem::exists(std::filesystem::path(model.root) / latest->archive_path)) {
      set(Decision::cold_train, "archive-missing");
    } else if (latest->arch_digest != p.digests.arch) {
      set(Decision::cold_train, "arch-changed");
    } else if (latest->config_digest != p.digests.config) {
      set(Decision::cold_train, "config-changed");
    } else if (dependency_trains) {
      set(Decision::cold_train, "dependency-retrained");
    } else if (latest->dataset_digest == p.digests.dataset) {
      set(Decision::skip, "up-to-date");
    } else {
      bool appended = false;
      if (p.digests.rows > latest->row_count) {
        auto [with_nl, without_nl] =
            support::prefix_digests(std::filesystem::path(model.root) / tu.dataset, latest->row_count);
        appended = with_nl == latest->dataset_digest || without_nl == latest->dataset_digest;
      }
      set(appended ? Decision::warm_retrain : Decision::cold_train, appended ? "dataset-appended" : "dataset-changed");
    }
    out.units.push_back(std::move(p));
  }
  return out;
}

std::string format_plan(const BuildPlan& plan) {
  std::string out;
  for (const auto& u : plan.units) {
    out += fmt::format("{}\t{}\t{}", u.unit, to_string(u.decision), u.reason);
    if (u.decision == Decision::warm_retrain && u.prior) out += "\t" + u.prior->archive_path;
    out += "\n";
  }
  return out;
}

}  // namespace mlc::buildsys
