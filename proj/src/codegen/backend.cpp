#include "mlcforge/codegen/backend.hpp"

#include <fmt/format.h>

#include "mlcforge/codegen/fileset.hpp"
#include "mlcforge/core/error.hpp"

namespace mlc::codegen {

using analysis::TrainableUnit;

namespace {

[[noreturn]] void unsupported(const std::string& backend, const std::string& feature, const SourceSpan& span) {
  throw ModelError("UnsupportedCapability", fmt::format("backend '{}' does not support {}", backend, feature), span);
}

std::vector<std::string> text_list(const ConfigValue* v) {
  std::vector<std::string> out;
  if (v == nullptr) return out;
  if (const auto* l = v->get_if<ConfigList>()) {
    for (const auto& item : l->items) out.push_back(item.as_text().value_or(""));
  } else if (auto t = v->as_text()) {
    out.push_back(*t);
  }
  return out;
}

std::vector<std::int64_t> int_values(const ConfigValue* v) {
  std::vector<std::int64_t> out;
  if (v == nullptr) return out;
  if (const auto* l = v->get_if<ConfigList>()) {
    for (const auto& item : l->items) out.push_back(item.as_int().value_or(0));
  } else if (auto i = v->as_int()) {
    out.push_back(*i);
  }
  return out;
}

std::string default_loss(const TrainableUnit& u) {
  if (const auto* v = u.config.find("loss"))
    if (auto t = v->as_text()) return *t;
  return u.classification ? "categorical_crossentropy" : "mse";
}

}  // namespace

Diagnostics BackendAdapter::check(const TrainableUnit& unit) const {
  Diagnostics d;
  Capabilities caps = capabilities();
  auto fail = [&](const std::string& feature) {
    d.push_back(make_error("UnsupportedCapability", fmt::format("backend '{}' does not support {} (needed by '{}')",
                                                                id(), feature, unit.name), unit.span));
  };
  if (!caps.algorithms.count(unit.algorithm)) fail(fmt::format("algorithm '{}'", unit.algorithm));
  if (!caps.labels.count(unit.labels)) fail(fmt::format("labels {}", to_string(unit.labels)));
  if (unit.arch) {
    std::set<std::string> reported;
    for (const auto& step : unit.arch->body.steps) {
      const auto* layer = std::get_if<LayerSpec>(&step);
      if (layer == nullptr) continue;
      std::string name = layer_name(layer->kind);
      if (!caps.layers.count(name) && reported.insert(name).second) fail(fmt::format("layer '{}'", name));
    }
  }
  return d;
}

ModelSpec BackendAdapter::model_spec(const TrainableUnit& u, const analysis::ImportResolver& imports) const {
  ModelSpec spec;
  spec.loss = default_loss(u);
  const std::int64_t n_in = u.n_features();
  if (u.kind == TrainableUnit::Kind::thing) {
    std::vector<std::int64_t> hidden;
    std::vector<std::string> acts;
    std::string out_act = u.classification ? "softmax" : "identity";
    if (u.algorithm == "mlp") {
      hidden = int_values(u.config.find("hidden_layer_sizes"));
      acts = text_list(u.config.find("hidden_layers_activation_functions"));
      if (acts.size() == 1) acts.assign(hidden.size(), acts.front());
      if (acts.size() != hidden.size())
        throw ModelError("InvalidArgument",
                         fmt::format("'{}' lists {} activation functions for {} hidden layers", u.name, acts.size(),
                                     hidden.size()), u.span);
    } else if (u.algorithm != "linear_regression" && u.algorithm != "logistic_regression") {
      unsupported(id(), fmt::format("algorithm '{}'", u.algorithm), u.span);
    }
    std::int64_t cur = n_in;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      spec.layers.push_back({ModelLayer::Kind::dense, cur, hidden[i], acts[i], 0, {}, true});
      cur = hidden[i];
    }
    spec.layers.push_back({ModelLayer::Kind::dense, cur, u.n_outputs, out_act, 0, {}, true});
  } else {
    std::int64_t cur = n_in;
    for (const auto& step : u.arch->body.steps) {
      const auto& layer = std::get<LayerSpec>(step);
      const auto& kind = layer.kind;
      if (const auto* fc = std::get_if<FullyConnected>(&kind)) {
        spec.layers.push_back({ModelLayer::Kind::dense, cur, fc->units.extent(), "identity", 0, {}, true});
        cur = fc->units.extent();
      } else if (std::holds_alternative<Flatten>(kind)) {
        continue;
      } else if (const auto* imp = std::get_if<ImportPretrained>(&kind)) {
        auto shape = imports ? imports(imp->archive) : std::nullopt;
        if (!shape) throw ModelError("UnresolvedImport", fmt::format("cannot resolve '{}'", imp->archive), layer.span);
        std::int64_t out = 1;
        for (auto d : shape->output) out *= d;
        spec.layers.push_back({ModelLayer::Kind::pretrained, cur, out, "pretrained", 0, imp->archive, imp->frozen});
        cur = out;
      } else if (const auto* drop = std::get_if<Dropout>(&kind)) {
        if (spec.layers.empty()) unsupported(id(), "Dropout before the first dense layer", layer.span);
        spec.layers.back().dropout = drop->rate;
      } else if (std::holds_alternative<Convolution>(kind) || std::holds_alternative<Pooling>(kind)) {
        unsupported(id(), fmt::format("layer '{}'", layer_name(kind)), layer.span);
      } else {
        std::string act = std::holds_alternative<Relu>(kind)      ? "relu"
                          : std::holds_alternative<Sigmoid>(kind) ? "sigmoid"
                          : std::holds_alternative<Tanh>(kind)    ? "tanh"
                                                                  : "softmax";
        if (spec.layers.empty() || spec.layers.back().kind != ModelLayer::Kind::dense)
          unsupported(id(), fmt::format("'{}' without a preceding FullyConnected layer", layer_name(kind)), layer.span);
        if (spec.layers.back().activation != "identity")
          unsupported(id(), "stacked activations", layer.span);
        spec.layers.back().activation = act;
      }
    }
    if (spec.layers.empty()) unsupported(id(), "networks without a FullyConnected layer", u.span);
  }
  spec.layer_sizes.push_back(n_in);
  for (const auto& l : spec.layers) {
    spec.layer_sizes.push_back(l.out);
    spec.activations.push_back(l.activation);
  }
  return spec;
}

Capabilities ReferenceBackend::capabilities() const {
  return Capabilities{{"network", "mlp", "linear_regression", "logistic_regression"},
                      {"FullyConnected", "Flatten", "Relu", "Sigmoid", "Tanh", "Softmax", "Dropout", "ImportPretrained"},
                      {LabelsMode::on}};
}

std::string ReferenceBackend::emit_training_program(const TrainableUnit& u, const ModelSpec& spec,
                                                    const std::string& spec_path) const {
  std::string sizes, acts;
  for (std::size_t i = 0; i < spec.layer_sizes.size(); ++i) sizes += (i ? ", " : "") + std::to_string(spec.layer_sizes[i]);
  for (std::size_t i = 0; i < spec.activations.size(); ++i) acts += fmt::format("{}\"{}\"", i ? ", " : "", spec.activations[i]);
  return fmt::format(
      "# Generated by {version} from {source}. Do not edit.\n"
      "\"\"\"Training program for {kind} '{name}' (backend: {backend}).\n"
      "\n"
      "Usage: python train.py [--warm-start ARCHIVE] [--out ARCHIVE] [--log PATH]\n"
      "Run from the project root. Dataset, preprocessing plan and hyperparameters\n"
      "are read from the spec file next to this program.\n"
      "\"\"\"\n"
      "import sys\n"
      "\n"
      "from mlcforge_runtime import program\n"
      "\n"
      "UNIT = \"{name}\"\n"
      "SPEC_FILE = \"{spec}\"\n"
      "\n"
      "# model\n"
      "LAYER_SIZES = [{sizes}]\n"
      "ACTIVATIONS = [{acts}]\n"
      "LOSS = \"{loss}\"\n"
      "\n"
      "\n"
      "def main(argv):\n"
      "    return program.train_main(SPEC_FILE, argv, layer_sizes=LAYER_SIZES, activations=ACTIVATIONS, loss=LOSS)\n"
      "\n"
      "\n"
      "if __name__ == \"__main__\":\n"
      "    sys.exit(main(sys.argv[1:]))\n",
      fmt::arg("version", kToolchainVersion), fmt::arg("source", u.span.file), fmt::arg("kind", analysis::to_string(u.kind)),
      fmt::arg("name", u.name), fmt::arg("backend", id()), fmt::arg("spec", spec_path), fmt::arg("sizes", sizes),
      fmt::arg("acts", acts), fmt::arg("loss", spec.loss));
}

std::string ReferenceBackend::emit_predict_call(const std::string& unit, const std::string& input,
                                                const std::string& result) const {
  return fmt::format("{} = rt_.predict(\"{}\", {});", result, unit, input);
}

const BackendRegistry& BackendRegistry::builtin() {
  static const BackendRegistry registry = [] {
    BackendRegistry r;
    r.add(std::make_unique<ReferenceBackend>());
    return r;
  }();
  return registry;
}

void BackendRegistry::add(std::unique_ptr<BackendAdapter> backend) {
  std::string key = backend->id();
  backends_[key] = std::shared_ptr<const BackendAdapter>(std::move(backend));
}

const BackendAdapter* BackendRegistry::find(const std::string& id) const {
  auto it = backends_.find(id);
  return it == backends_.end() ? nullptr : it->second.get();
}

}  // namespace mlc::codegen
