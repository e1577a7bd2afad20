#include "mlcforge/analysis/units.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include <fmt/format.h>

#include "mlcforge/core/elaborate.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/core/schema.hpp"
#include "mlcforge/support/csv.hpp"
#include "mlcforge/support/weight_archive.hpp"

namespace fs = std::filesystem;

namespace mlc::analysis {

const char* to_string(TrainableUnit::Kind k) { return k == TrainableUnit::Kind::network ? "network" : "thing"; }

std::vector<std::string> TrainableUnit::feature_columns() const {
  std::vector<std::string> out;
  for (const auto& f : features) out.insert(out.end(), f.columns.begin(), f.columns.end());
  return out;
}

std::int64_t TrainableUnit::n_features() const {
  std::int64_t n = 0;
  for (const auto& f : features) n += f.width;
  return n;
}

std::optional<ValueType> resolve_feature_type(const ThingDef& thing, const std::string& name) {
  if (const Property* p = thing.property(name)) return p->type;
  for (const auto& m : thing.messages)
    for (const auto& p : m.params)
      if (p.name == name) return p.type;
  if (const MessageDef* m = thing.message(name); m != nullptr && m->params.size() == 1) return m->params[0].type;
  return std::nullopt;
}

FeatureSpec make_feature(const std::string& name, const ValueType& type) {
  FeatureSpec f;
  f.name = name;
  if (const auto* t = type.tensor()) {
    f.width = t->concrete() ? t->element_count() : 1;
    bool scalar = t->scalar_form || (t->dims.size() == 1 && f.width == 1);
    if (scalar) {
      f.columns.push_back(name);
    } else {
      for (std::int64_t i = 0; i < f.width; ++i) f.columns.push_back(fmt::format("{}_{}", name, i));
    }
  } else {
    auto prim = std::get<PrimitiveType>(type.type);
    f.numeric = prim == PrimitiveType::integer || prim == PrimitiveType::real;
    f.columns.push_back(name);
  }
  return f;
}

std::optional<NetworkArch> instantiate(const NetworkArch& arch, const ModelUnit& unit, Diagnostics& diags) {
  std::optional<Bindings> chosen;
  for (const auto& p : unit.pipelines) {
    for (const auto& inst : p.instances) {
      if (inst.type_name != arch.name) continue;
      Bindings b;
      try {
        b = bindings_for(arch, inst);
      } catch (const ModelError&) {
        continue;  // reported by the wiring check
      }
      if (chosen && *chosen != b) {
        diags.push_back(make_error("AmbiguousBinding",
                                   fmt::format("network '{}' is instantiated with different generic arguments", arch.name),
                                   inst.span));
        return std::nullopt;
      }
      chosen = b;
    }
  }
  if (!chosen) {
    if (!arch.generics.empty()) {
      diags.push_back(make_error("MissingBinding",
                                 fmt::format("network '{}' is trained but no pipeline instance binds '{}'", arch.name,
                                             arch.generics.front().name),
                                 arch.span));
      return std::nullopt;
    }
    chosen = Bindings{};
  }
  try {
    return expand_def_blocks(resolve_generics(arch, *chosen));
  } catch (const ModelError& e) {
    diags.push_back(e.diagnostic());
    return std::nullopt;
  }
}

ImportResolver default_import_resolver(const ModelUnit& unit) {
  return [&unit](const std::string& ref) -> std::optional<ImportedShape> {
    if (ref.rfind("unit:", 0) == 0) {
      const NetworkArch* arch = unit.network(ref.substr(5));
      if (arch == nullptr) return std::nullopt;
      Diagnostics ignored;
      auto concrete = instantiate(*arch, unit, ignored);
      if (!concrete) return std::nullopt;
      const TensorPort* in = concrete->port(concrete->body.input);
      const TensorPort* out = concrete->port(concrete->body.output);
      if (in == nullptr || out == nullptr) return std::nullopt;
      return ImportedShape{in->type.extents(), out->type.extents()};
    }
    try {
      auto archive = support::read_archive(fs::path(unit.root) / ref);
      auto manifest = support::archive_manifest(archive);
      ImportedShape s;
      for (const auto& v : manifest.find("input_dims")->get_if<ConfigList>()->items) s.input.push_back(*v.as_int());
      s.output = archive.output_dims();
      return s;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
}

namespace {

void check_columns(const ModelUnit& unit, TrainableUnit& u, Diagnostics& diags) {
  fs::path path = fs::path(unit.root) / u.dataset;
  if (!fs::is_regular_file(path)) return;  // reported by the loader
  support::CsvInfo info;
  try {
    info = support::scan_csv(path);
  } catch (const std::exception&) {
    return;
  }
  std::set<std::string> header(info.header.begin(), info.header.end());
  std::vector<std::string> wanted = u.feature_columns();
  if (u.labels != LabelsMode::off) wanted.push_back(u.label_column);
  for (const auto& c : wanted) {
    if (!header.count(c)) {
      diags.push_back(make_error("MissingColumn", fmt::format("dataset '{}' has no column '{}' needed by '{}'",
                                                              u.dataset, c, u.name), u.span));
      return;
    }
  }
}

std::optional<TrainableUnit> network_unit(const ModelUnit& unit, const NetworkArch& arch, const std::string& dataset,
                                          Diagnostics& diags) {
  TrainableUnit u;
  u.kind = TrainableUnit::Kind::network;
  u.name = arch.name;
  u.dataset = dataset;
  u.sequential = unit.manifest.is_sequential(dataset);
  u.algorithm = "network";
  u.schema = "supervised";
  u.backend = unit.manifest.backend;
  u.span = arch.span;
  u.training_results = fmt::format("out/{}_training.log", arch.name);
  auto concrete = instantiate(arch, unit, diags);
  if (!concrete) return std::nullopt;
  const TensorPort* in = concrete->port(concrete->body.input);
  const TensorPort* out = concrete->port(concrete->body.output);
  if (in == nullptr || out == nullptr) return std::nullopt;
  u.features.push_back(make_feature(in->name, ValueType{in->type}));
  u.label_column = out->name;
  u.n_outputs = out->type.element_count();
  u.classification = !concrete->body.steps.empty() &&
                     std::holds_alternative<Softmax>(std::get<LayerSpec>(concrete->body.steps.back()).kind);
  ConfigTree input;
  if (const NamedConfig* cfg = unit.config(arch.name)) input = cfg->tree;
  auto validated = validate_config(input, u.schema);
  u.config = std::move(validated.effective);
  std::string scaling = u.config.find("scaling") ? u.config.find("scaling")->as_text().value_or("none") : "none";
  if (scaling == "standardize")
    u.plan.steps.push_back({PreprocessStep::Kind::standardize, {in->name}});
  else if (scaling == "normalize")
    u.plan.steps.push_back({PreprocessStep::Kind::normalize, {in->name}});
  if (u.classification) u.plan.steps.push_back({PreprocessStep::Kind::one_hot, {out->name}});
  for (const auto& step : concrete->body.steps) {
    if (const auto* imp = std::get_if<ImportPretrained>(&std::get<LayerSpec>(step).kind))
      if (imp->archive.rfind("unit:", 0) == 0) u.depends_on.push_back(imp->archive.substr(5));
  }
  u.arch = std::move(concrete);
  return u;
}

std::optional<TrainableUnit> thing_unit(const ModelUnit& unit, const ThingDef& thing, Diagnostics& diags) {
  const MLBlock& ml = *thing.ml;
  TrainableUnit u;
  u.kind = TrainableUnit::Kind::thing;
  u.name = thing.name;
  u.dataset = ml.dataset;
  u.sequential = unit.manifest.is_sequential(ml.dataset);
  u.algorithm = ml.algorithm;
  u.schema = ml.algorithm;
  u.backend = ml.backend;
  u.labels = ml.labels;
  u.plan = ml.preprocess;
  u.training_results = ml.training_results.empty() ? fmt::format("out/{}_training.log", thing.name) : ml.training_results;
  u.prediction_results = ml.prediction_results;
  u.span = ml.span;
  bool ok = true;
  for (const auto& f : ml.features) {
    auto type = resolve_feature_type(thing, f);
    if (!type) {
      diags.push_back(make_error("UnknownFeature", fmt::format("feature '{}' of '{}' matches no property or message",
                                                               f, thing.name), ml.span));
      ok = false;
      continue;
    }
    u.features.push_back(make_feature(f, *type));
  }
  if (ml.labels != LabelsMode::off) {
    u.label_column = ml.label_name;
    auto type = resolve_feature_type(thing, ml.label_name);
    if (!type) {
      diags.push_back(make_error("UnknownLabel", fmt::format("label '{}' of '{}' matches no property or message",
                                                             ml.label_name, thing.name), ml.span));
      ok = false;
    } else if (const auto* t = type->tensor(); t && t->range.kind == ElementKind::integer &&
                                               (t->scalar_form || t->element_count() == 1)) {
      u.n_outputs = static_cast<std::int64_t>(t->range.upper - t->range.lower) + 1;
      u.classification = true;
    } else if (type->is_tensor() || std::get_if<PrimitiveType>(&type->type) == nullptr ||
               std::get<PrimitiveType>(type->type) == PrimitiveType::real) {
      u.classification = false;
      u.n_outputs = type->tensor() ? type->tensor()->element_count() : 1;
    } else {
      diags.push_back(make_error("LabelRange",
                                 fmt::format("label '{}' needs a Z(lo:hi) type to fix the class count", ml.label_name),
                                 ml.span));
      ok = false;
    }
  }
  if (ml.algorithm == "linear_regression") u.classification = false;
  auto validated = validate_config(ml.hyperparameters, u.schema);
  u.config = std::move(validated.effective);
  if (!ok) return std::nullopt;
  return u;
}

}  // namespace

UnitsResult trainable_units(const ModelUnit& unit) {
  UnitsResult r;
  std::vector<TrainableUnit> found;
  for (const auto& [name, dataset] : unit.manifest.network_data) {
    const NetworkArch* arch = unit.network(name);
    if (arch == nullptr) continue;
    if (auto u = network_unit(unit, *arch, dataset, r.diagnostics)) found.push_back(std::move(*u));
  }
  for (const auto& t : unit.things) {
    if (!t.ml) continue;
    if (auto u = thing_unit(unit, t, r.diagnostics)) found.push_back(std::move(*u));
  }
  for (auto& u : found) check_columns(unit, u, r.diagnostics);

  // Kahn's algorithm; ready units are taken in name order.
  std::map<std::string, TrainableUnit*> by_name;
  for (auto& u : found) by_name[u.name] = &u;
  std::map<std::string, int> pending;
  for (auto& u : found) {
    int n = 0;
    for (const auto& dep : u.depends_on) {
      if (by_name.count(dep)) {
        ++n;
      } else {
        r.diagnostics.push_back(make_error("UnresolvedImport",
                                           fmt::format("'{}' imports 'unit:{}', which is not a trainable unit", u.name, dep),
                                           u.span));
      }
    }
    pending[u.name] = n;
  }
  std::set<std::string> ready;
  for (const auto& [n, c] : pending)
    if (c == 0) ready.insert(n);
  while (!ready.empty()) {
    std::string n = *ready.begin();
    ready.erase(ready.begin());
    r.units.push_back(*by_name[n]);
    for (auto& u : found) {
      if (std::find(u.depends_on.begin(), u.depends_on.end(), n) == u.depends_on.end()) continue;
      if (--pending[u.name] == 0) ready.insert(u.name);
    }
  }
  if (r.units.size() != found.size()) {
    for (const auto& [n, c] : pending)
      if (c > 0)
        r.diagnostics.push_back(make_error("CyclicImport", fmt::format("unit '{}' is part of an import cycle", n),
                                           by_name[n]->span));
  }
  return r;
}

}  // namespace mlc::analysis
