#include "mlcforge/analysis/analyze.hpp"

#include <fmt/format.h>

#include "mlcforge/core/elaborate.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/core/schema.hpp"

namespace mlc::analysis {

namespace {

void check_configs(const ModelUnit& unit, Diagnostics& d) {
  const auto& registry = SchemaRegistry::builtin();
  for (const auto& c : unit.configs) {
    if (!unit.network(c.name)) continue;
    append(d, validate_config(c.tree, "supervised", registry).diagnostics);
  }
  for (const auto& t : unit.things) {
    if (!t.ml) continue;
    if (registry.find(t.ml->algorithm) == nullptr) {
      d.push_back(make_error("UnknownAlgorithm",
                             fmt::format("unknown model_algorithm '{}' (known: {})", t.ml->algorithm,
                                         fmt::join(registry.names(), ", ")),
                             t.ml->span));
      continue;
    }
    auto v = validate_config(t.ml->hyperparameters, t.ml->algorithm, registry);
    for (auto& diag : v.diagnostics)
      if (!diag.span.known()) diag.span = t.ml->span;
    append(d, std::move(v.diagnostics));
  }
}

void check_networks(const ModelUnit& unit, AnalysisResult& r) {
  auto imports = default_import_resolver(unit);
  auto run = [&](const NetworkArch& concrete, const std::string& key) {
    NetworkArch flat;
    try {
      flat = expand_def_blocks(concrete);
    } catch (const ModelError& e) {
      r.diagnostics.push_back(e.diagnostic());
      return;
    }
    auto shapes = infer_shapes(flat, imports);
    append(r.diagnostics, std::move(shapes.diagnostics));
    r.shapes[key] = std::move(shapes.annotation);
  };
  for (const auto& arch : unit.networks) {
    if (arch.generics.empty()) {
      run(arch, arch.name);
      continue;
    }
    // Generic networks get shape checks per pipeline instance; their def
    // blocks are elaborated here with placeholder bindings.
    Bindings placeholder;
    for (const auto& g : arch.generics) placeholder[g.name] = 1;
    try {
      (void)expand_def_blocks(resolve_generics(arch, placeholder));
    } catch (const ModelError& e) {
      r.diagnostics.push_back(e.diagnostic());
    }
  }
  for (const auto& p : unit.pipelines) {
    for (const auto& inst : p.instances) {
      const NetworkArch* arch = unit.network(inst.type_name);
      if (arch == nullptr || arch->generics.empty()) continue;
      try {
        run(resolve_generics(*arch, bindings_for(*arch, inst)), inst.name);
      } catch (const ModelError&) {
        // reported by the wiring check
      }
    }
  }
}

}  // namespace

AnalysisResult analyze(const ModelUnit& input, const AnalysisOptions& options) {
  AnalysisResult r;
  bool automl = options.automl.value_or(input.manifest.automl);
  auto lint = lint_automl(input, automl);
  r.unit = std::move(lint.unit);
  const ModelUnit& unit = r.unit;

  check_configs(unit, r.diagnostics);
  check_networks(unit, r);
  for (const auto& t : unit.things) append(r.diagnostics, check_statechart(t));
  for (const auto& p : unit.pipelines) append(r.diagnostics, check_wiring(p, unit));
  append(r.diagnostics, std::move(lint.diagnostics));

  auto units = trainable_units(unit);
  append(r.diagnostics, std::move(units.diagnostics));
  r.units = std::move(units.units);

  // Diagnostics emitted twice by overlapping passes are reported once.
  Diagnostics unique;
  for (auto& d : r.diagnostics) {
    bool dup = std::any_of(unique.begin(), unique.end(), [&](const Diagnostic& u) {
      return u.code == d.code && u.message == d.message && u.span.file == d.span.file && u.span.offset == d.span.offset;
    });
    if (!dup) unique.push_back(std::move(d));
  }
  r.diagnostics = std::move(unique);
  sort_diagnostics(r.diagnostics);
  return r;
}

}  // namespace mlc::analysis
