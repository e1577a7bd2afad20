#include "mlcforge/analysis/lint.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mlcforge/analysis/units.hpp"
#include "mlcforge/core/schema.hpp"

namespace mlc::analysis {

namespace {

const ConfigValue* learning_rate(const ConfigTree& t) {
  if (const auto* v = t.find_path("optimizer.learning_rate")) return v;
  return t.find("learning_rate");
}

ConfigTree* config_for(ModelUnit& unit, const LintSubject& s) {
  if (s.kind == LintSubject::Kind::thing) {
    ThingDef* t = unit.thing(s.name);
    return t != nullptr && t->ml ? &t->ml->hyperparameters : nullptr;
  }
  for (auto& c : unit.configs)
    if (c.name == s.name) return &c.tree;
  NamedConfig created;
  created.name = s.name;
  created.span = s.span;
  unit.configs.push_back(std::move(created));
  return &unit.configs.back().tree;
}

}  // namespace

const std::vector<LintRule>& builtin_lint_rules() {
  static const std::vector<LintRule> rules = {
      {"R1", Severity::warning, "learning rate outside the recommended range (0, 1]",
       [](const LintSubject& s) -> std::optional<std::string> {
         const auto* v = learning_rate(s.effective);
         auto lr = v ? v->as_number() : std::nullopt;
         if (!lr || (*lr > 0 && *lr <= 1)) return std::nullopt;
         return fmt::format("learning rate {} of '{}' lies outside (0, 1]", *lr, s.name);
       },
       nullptr},
      {"R2", Severity::error, "dropout rate must lie in [0, 1)",
       [](const LintSubject& s) -> std::optional<std::string> {
         if (const auto* v = s.effective.find("dropout")) {
           auto d = v->as_number();
           if (d && (*d < 0 || *d >= 1)) return fmt::format("dropout {} of '{}' lies outside [0, 1)", *d, s.name);
         }
         for (double d : s.dropout_layers)
           if (d < 0 || d >= 1) return fmt::format("Dropout layer rate {} of '{}' lies outside [0, 1)", d, s.name);
         return std::nullopt;
       },
       nullptr},
      {"R3", Severity::warning, "neural network trained on unscaled numeric features",
       [](const LintSubject& s) -> std::optional<std::string> {
         if (!s.ann || s.unscaled.empty()) return std::nullopt;
         return fmt::format("'{}' trains a neural network on unscaled numeric features: {}", s.name,
                            fmt::join(s.unscaled, ", "));
       },
       [](ModelUnit& unit, const LintSubject& s) -> std::string {
         if (s.kind == LintSubject::Kind::thing) {
           ThingDef* t = unit.thing(s.name);
           t->ml->preprocess.steps.insert(t->ml->preprocess.steps.begin(),
                                          PreprocessStep{PreprocessStep::Kind::standardize, s.unscaled});
           return fmt::format("inserted standardize({}) into the preprocessing plan of '{}'",
                              fmt::join(s.unscaled, ", "), s.name);
         }
         config_for(unit, s)->set("scaling", Token{"standardize"});
         return fmt::format("set scaling: standardize for '{}'", s.name);
       }},
      {"R4", Severity::error, "shuffling a sequential dataset",
       [](const LintSubject& s) -> std::optional<std::string> {
         const auto* v = s.effective.find("shuffle");
         if (!s.sequential || v == nullptr || !v->as_bool().value_or(false)) return std::nullopt;
         return fmt::format("'{}' shuffles sequential dataset '{}'", s.name, s.dataset);
       },
       [](ModelUnit& unit, const LintSubject& s) -> std::string {
         config_for(unit, s)->set("shuffle", false);
         return fmt::format("set shuffle: false for '{}' (sequential dataset '{}')", s.name, s.dataset);
       }},
      {"R5", Severity::error, "training needs at least one epoch",
       [](const LintSubject& s) -> std::optional<std::string> {
         const auto* v = s.effective.find("num_epoch");
         auto n = v ? v->as_int() : std::nullopt;
         if (!n || *n >= 1) return std::nullopt;
         return fmt::format("num_epoch {} of '{}' must be at least 1", *n, s.name);
       },
       nullptr},
  };
  return rules;
}

std::vector<LintSubject> lint_subjects(const ModelUnit& unit) {
  std::vector<LintSubject> out;
  for (const auto& [name, dataset] : unit.manifest.network_data) {
    const NetworkArch* arch = unit.network(name);
    if (arch == nullptr) continue;
    LintSubject s;
    s.kind = LintSubject::Kind::network;
    s.name = name;
    s.ann = true;
    s.dataset = dataset;
    s.sequential = unit.manifest.is_sequential(dataset);
    const NamedConfig* cfg = unit.config(name);
    s.span = cfg ? cfg->span : arch->span;
    s.effective = validate_config(cfg ? cfg->tree : ConfigTree{}, "supervised").effective;
    const auto* scaling = s.effective.find("scaling");
    if (scaling == nullptr || scaling->as_text().value_or("none") == "none") s.unscaled.push_back(arch->body.input);
    std::vector<const std::vector<LayerStep>*> bodies{&arch->body.steps};
    for (const auto& b : arch->def_blocks) bodies.push_back(&b.body);
    for (const auto* body : bodies)
      for (const auto& step : *body)
        if (const auto* l = std::get_if<LayerSpec>(&step))
          if (const auto* d = std::get_if<Dropout>(&l->kind)) s.dropout_layers.push_back(d->rate);
    out.push_back(std::move(s));
  }
  for (const auto& t : unit.things) {
    if (!t.ml) continue;
    LintSubject s;
    s.kind = LintSubject::Kind::thing;
    s.name = t.name;
    s.ann = t.ml->algorithm == "mlp";
    s.dataset = t.ml->dataset;
    s.sequential = unit.manifest.is_sequential(t.ml->dataset);
    s.span = t.ml->span;
    s.effective = validate_config(t.ml->hyperparameters, t.ml->algorithm).effective;
    for (const auto& f : t.ml->features) {
      auto type = resolve_feature_type(t, f);
      if (!type || !make_feature(f, *type).numeric) continue;
      if (!t.ml->preprocess.scales(f)) s.unscaled.push_back(f);
    }
    out.push_back(std::move(s));
  }
  return out;
}

LintResult lint_automl(const ModelUnit& unit, bool automl, const std::vector<LintRule>& rules) {
  LintResult r;
  r.unit = unit;
  for (const auto& subject : lint_subjects(unit)) {
    for (const auto& rule : rules) {
      auto finding = rule.check(subject);
      if (!finding) continue;
      if (automl && rule.fix) {
        std::string what = rule.fix(r.unit, subject);
        ++r.fixes;
        r.diagnostics.push_back(make_info(rule.id, fmt::format("auto-fix: {}", what), subject.span));
        continue;
      }
      Diagnostic d;
      d.severity = rule.severity;
      d.code = rule.id;
      d.message = *finding;
      d.span = subject.span;
      if (rule.fix) d.hint = "run with automl mode on to apply the fix automatically";
      r.diagnostics.push_back(std::move(d));
    }
  }
  return r;
}

}  // namespace mlc::analysis
