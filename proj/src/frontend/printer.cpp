#include "mlcforge/frontend/printer.hpp"

#include <cctype>
#include <cmath>

#include <fmt/format.h>

namespace mlc::frontend {

namespace {

std::string indent(int level) { return std::string(static_cast<std::size_t>(level) * 2, ' '); }

std::string dim_text(const DimExpr& d) { return d.concrete() ? std::to_string(d.extent()) : d.symbol(); }

std::string key_text(const std::string& k) { return is_identifier(k) ? k : quote(k); }

}  // namespace

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return s != "true" && s != "false";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string format_real(double v) {
  std::string s = fmt::format("{}", v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string format_number(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 1e15) return fmt::format("{}", static_cast<long long>(v));
  return format_real(v);
}

std::string print_tensor_type(const TensorType& t) {
  std::string out = fmt::format("{}({}:{})", t.range.kind == ElementKind::integer ? "Z" : "Q",
                                format_number(t.range.lower), format_number(t.range.upper));
  bool scalar = t.scalar_form && t.dims.size() == 1 && t.dims[0].concrete() && t.dims[0].extent() == 1;
  if (!scalar) {
    out += "^{";
    for (std::size_t i = 0; i < t.dims.size(); ++i) out += (i ? "," : "") + dim_text(t.dims[i]);
    out += "}";
  }
  return out;
}

std::string print_value_type(const ValueType& type) {
  if (const auto* t = type.tensor()) return print_tensor_type(*t);
  switch (std::get<PrimitiveType>(type.type)) {
    case PrimitiveType::integer: return "int";
    case PrimitiveType::real: return "real";
    case PrimitiveType::boolean: return "bool";
    case PrimitiveType::string: return "string";
  }
  return "int";
}

// ---------------------------------------------------------------------------
// Networks

std::string print_layer(const LayerStep& step) {
  if (const auto* call = std::get_if<BlockCall>(&step)) {
    std::string out = call->name + "(";
    for (std::size_t i = 0; i < call->args.size(); ++i) {
      const auto& a = call->args[i];
      if (i) out += ", ";
      if (a.name) out += *a.name + "=";
      out += dim_text(a.value);
    }
    return out + ")";
  }
  const auto& kind = std::get<LayerSpec>(step).kind;
  struct Printer {
    std::string operator()(const Convolution& c) const {
      std::string kernel = c.kernel_h == c.kernel_w ? dim_text(c.kernel_h)
                                                    : fmt::format("({}, {})", dim_text(c.kernel_h), dim_text(c.kernel_w));
      return fmt::format("Convolution(kernel={}, channels={}, stride={}, padding={})", kernel, dim_text(c.channels),
                         dim_text(c.stride), c.padding == Padding::same ? "same" : "valid");
    }
    std::string operator()(const Pooling& p) const {
      return fmt::format("Pooling(kind={}, window={}, stride={})", p.kind == PoolKind::avg ? "avg" : "max",
                         dim_text(p.window), dim_text(p.stride));
    }
    std::string operator()(const FullyConnected& f) const {
      return fmt::format("FullyConnected(units={})", dim_text(f.units));
    }
    std::string operator()(const Flatten&) const { return "Flatten"; }
    std::string operator()(const Relu&) const { return "Relu"; }
    std::string operator()(const Sigmoid&) const { return "Sigmoid"; }
    std::string operator()(const Tanh&) const { return "Tanh"; }
    std::string operator()(const Softmax&) const { return "Softmax"; }
    std::string operator()(const Dropout& d) const { return fmt::format("Dropout(rate={})", format_real(d.rate)); }
    std::string operator()(const ImportPretrained& i) const {
      return fmt::format("ImportPretrained(archive={}, frozen={})", quote(i.archive), i.frozen ? "true" : "false");
    }
  };
  return std::visit(Printer{}, kind);
}

namespace {
std::string print_steps(const std::vector<LayerStep>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) out += (i ? " -> " : "") + print_layer(steps[i]);
  return out;
}
}  // namespace

std::string print_network(const NetworkArch& arch) {
  std::string out = "component " + arch.name;
  if (!arch.generics.empty()) {
    out += "<";
    for (std::size_t i = 0; i < arch.generics.size(); ++i) out += (i ? ", " : "") + arch.generics[i].name;
    out += ">";
  }
  out += " {\n";
  for (const auto& p : arch.ports)
    out += fmt::format("  ports {} {}: {};\n", to_string(p.direction), p.name, print_tensor_type(p.type));
  for (const auto& b : arch.def_blocks) {
    out += "\n  def " + b.name + "(";
    for (std::size_t i = 0; i < b.params.size(); ++i) out += (i ? ", " : "") + b.params[i];
    out += ") {\n    " + print_steps(b.body) + "\n  }\n";
  }
  out += "\n  net {\n    " + arch.body.input + " -> ";
  if (!arch.body.steps.empty()) out += print_steps(arch.body.steps) + " -> ";
  out += arch.body.output + "\n  }\n}\n";
  return out;
}

std::string print_networks(const std::vector<NetworkArch>& archs) {
  std::string out;
  for (std::size_t i = 0; i < archs.size(); ++i) out += (i ? "\n" : "") + print_network(archs[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration values

std::string print_value(const ConfigValue& value) {
  struct Printer {
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_real(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return quote(v); }
    std::string operator()(const Token& v) const { return is_identifier(v.name) ? v.name : quote(v.name); }
    std::string operator()(const ConfigList& v) const {
      std::string out = "(";
      for (std::size_t i = 0; i < v.items.size(); ++i) out += (i ? ", " : "") + print_value(v.items[i]);
      return out + ")";
    }
    std::string operator()(const ConfigTree& v) const { return print_inline(v); }
  };
  return std::visit(Printer{}, value.data);
}

std::string print_inline(const ConfigTree& tree) {
  std::string out = "{";
  for (const auto& e : tree.entries) {
    out += " " + key_text(e.key);
    if (const auto* nested = e.value.get_if<ConfigTree>())
      out += " " + print_inline(*nested);
    else
      out += ": " + print_value(e.value);
  }
  return out + " }";
}

namespace {
void print_tree(const ConfigTree& tree, int level, std::string& out) {
  for (const auto& e : tree.entries) {
    out += indent(level) + key_text(e.key);
    if (const auto* nested = e.value.get_if<ConfigTree>()) {
      if (nested->empty()) {
        out += " { }\n";
      } else {
        out += " {\n";
        print_tree(*nested, level + 1, out);
        out += indent(level) + "}\n";
      }
    } else {
      out += ": " + print_value(e.value) + "\n";
    }
  }
}
}  // namespace

std::string print_config(const ConfigTree& tree) {
  std::string out;
  print_tree(tree, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Expressions, actions, things

namespace {
int expr_precedence(const Expr& e) {
  if (e.kind != Expr::Kind::binary) return 10;
  const auto& op = e.text;
  if (op == "||") return 0;
  if (op == "&&") return 1;
  if (op == "==" || op == "!=") return 2;
  if (op == "<" || op == "<=" || op == ">" || op == ">=") return 3;
  if (op == "+" || op == "-") return 4;
  return 5;
}
}  // namespace

std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::int_lit: return std::to_string(e.int_value);
    case Expr::Kind::real_lit: return format_real(e.real_value);
    case Expr::Kind::bool_lit: return e.bool_value ? "true" : "false";
    case Expr::Kind::string_lit: return quote(e.text);
    case Expr::Kind::name: return e.text;
    case Expr::Kind::unary: {
      const Expr& operand = e.operands.at(0);
      std::string inner = print_expr(operand);
      bool wrap = operand.kind == Expr::Kind::binary || operand.kind == Expr::Kind::unary ||
                  (operand.kind == Expr::Kind::int_lit && operand.int_value < 0) ||
                  (operand.kind == Expr::Kind::real_lit && std::signbit(operand.real_value));
      return e.text + (wrap ? "(" + inner + ")" : inner);
    }
    case Expr::Kind::binary: {
      int prec = expr_precedence(e);
      const Expr& l = e.operands.at(0);
      const Expr& r = e.operands.at(1);
      std::string ls = print_expr(l);
      std::string rs = print_expr(r);
      if (expr_precedence(l) < prec) ls = "(" + ls + ")";
      if (expr_precedence(r) <= prec) rs = "(" + rs + ")";
      return ls + " " + e.text + " " + rs;
    }
  }
  return {};
}

std::string print_action(const Action& action) {
  struct Printer {
    std::string operator()(const SendAction& s) const {
      std::string out = s.port + "!" + s.message + "(";
      for (std::size_t i = 0; i < s.args.size(); ++i) out += (i ? ", " : "") + print_expr(s.args[i]);
      return out + ")";
    }
    std::string operator()(const PreprocessAction&) const { return "da_preprocess"; }
    std::string operator()(const TrainAction&) const { return "da_train"; }
    std::string operator()(const PredictAction& p) const {
      std::string out = "da_predict(";
      for (std::size_t i = 0; i < p.inputs.size(); ++i) out += (i ? ", " : "") + print_expr(p.inputs[i]);
      return out + (p.inputs.empty() ? "-> " : " -> ") + p.result + ")";
    }
    std::string operator()(const AssignAction& a) const { return a.target + " = " + print_expr(a.value); }
  };
  return std::visit(Printer{}, action.kind);
}

namespace {

std::string print_transition(const Transition& t) {
  std::string out;
  if (t.trigger) {
    out = "on " + t.trigger->port + "?" + t.trigger->message;
    if (!t.trigger->params.empty()) {
      out += "(";
      for (std::size_t i = 0; i < t.trigger->params.size(); ++i) out += (i ? ", " : "") + t.trigger->params[i];
      out += ")";
    }
  } else {
    out = "auto";
  }
  if (t.guard) out += " [" + print_expr(*t.guard) + "]";
  if (t.target) out += " -> " + *t.target;
  if (!t.actions.empty()) {
    out += " / ";
    for (std::size_t i = 0; i < t.actions.size(); ++i) out += (i ? "; " : "") + print_action(t.actions[i]);
  }
  return out;
}

std::string print_ml(const MLBlock& ml) {
  std::string out = "  ml {\n";
  out += "    features ";
  for (std::size_t i = 0; i < ml.features.size(); ++i) out += (i ? ", " : "") + ml.features[i];
  out += ";\n";
  out += std::string("    labels ") + to_string(ml.labels);
  if (!ml.label_name.empty()) out += " " + ml.label_name;
  out += ";\n";
  if (!ml.dataset.empty()) out += "    dataset " + quote(ml.dataset) + ";\n";
  if (!ml.algorithm.empty()) {
    out += "    model_algorithm " + ml.algorithm + " {\n";
    std::string body = print_config(ml.hyperparameters);
    std::size_t start = 0;
    while (start < body.size()) {
      auto end = body.find('\n', start);
      out += "      " + body.substr(start, end - start) + "\n";
      start = end + 1;
    }
    out += "    }\n";
  }
  if (!ml.preprocess.steps.empty()) {
    out += "    preprocess ";
    for (std::size_t i = 0; i < ml.preprocess.steps.size(); ++i) {
      const auto& s = ml.preprocess.steps[i];
      out += (i ? ", " : "") + std::string(to_string(s.kind)) + "(";
      for (std::size_t j = 0; j < s.columns.size(); ++j) out += (j ? ", " : "") + s.columns[j];
      out += ")";
    }
    out += ";\n";
  }
  if (!ml.prediction_results.empty()) out += "    prediction_results " + quote(ml.prediction_results) + ";\n";
  if (!ml.training_results.empty()) out += "    training_results " + quote(ml.training_results) + ";\n";
  out += "    da_lib " + ml.backend + ";\n";
  out += "  }\n";
  return out;
}

}  // namespace

std::string print_thing(const ThingDef& thing) {
  std::string out = "thing " + thing.name + " {\n";
  for (const auto& m : thing.messages) {
    out += "  message " + m.name + "(";
    for (std::size_t i = 0; i < m.params.size(); ++i)
      out += (i ? ", " : "") + m.params[i].name + ": " + print_value_type(m.params[i].type);
    out += ");\n";
  }
  for (const auto& p : thing.ports) {
    out += fmt::format("  port {} {} {{", p.name, to_string(p.direction));
    for (std::size_t i = 0; i < p.messages.size(); ++i) out += (i ? ", " : " ") + p.messages[i];
    out += p.messages.empty() ? "}\n" : " }\n";
  }
  for (const auto& p : thing.properties) {
    out += "  property " + p.name + ": " + print_value_type(p.type);
    if (p.init) out += " = " + print_expr(*p.init);
    out += ";\n";
  }
  if (thing.ml) out += "\n" + print_ml(*thing.ml);
  out += "\n  statechart " + thing.statechart.name + " {";
  if (thing.statechart.states.empty()) {
    out += " }\n";
  } else {
    out += "\n";
    for (const auto& s : thing.statechart.states) {
      out += std::string("    ") + (s.initial ? "initial " : "") + "state " + s.name + " {";
      if (s.transitions.empty()) {
        out += " }\n";
        continue;
      }
      out += "\n";
      for (const auto& t : s.transitions) out += "      " + print_transition(t) + "\n";
      out += "    }\n";
    }
    out += "  }\n";
  }
  out += "}\n";
  return out;
}

std::string print_stub(const StubDef& stub) {
  std::string out = "stub " + stub.name + " {\n";
  for (const auto& p : stub.ports)
    out += fmt::format("  {} {}: {};\n", to_string(p.direction), key_text(p.name), print_tensor_type(p.type));
  return out + "}\n";
}

std::string print_pipeline(const PipelineGraph& p) {
  std::string out = "pipeline " + p.name + " {\n";
  for (const auto& i : p.instances) {
    out += "  instance " + i.name + ": " + i.type_name;
    if (!i.bindings.empty()) {
      out += "<";
      for (std::size_t k = 0; k < i.bindings.size(); ++k) {
        const auto& b = i.bindings[k];
        out += (k ? ", " : "") + (b.name ? *b.name + "=" : std::string()) + std::to_string(b.value);
      }
      out += ">";
    }
    out += ";\n";
  }
  for (const auto& c : p.connectors)
    out += fmt::format("  connect {}.{} -> {}.{};\n", c.from.instance, key_text(c.from.port), c.to.instance,
                       key_text(c.to.port));
  return out + "}\n";
}

std::string print_system(const SystemModel& model) {
  std::vector<std::string> blocks;
  for (const auto& t : model.things) blocks.push_back(print_thing(t));
  for (const auto& s : model.stubs) blocks.push_back(print_stub(s));
  for (const auto& p : model.pipelines) blocks.push_back(print_pipeline(p));
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) out += (i ? "\n" : "") + blocks[i];
  return out;
}

std::string print_unit(const ModelUnit& unit) {
  std::string out = "// project " + unit.manifest.name + "\n\n// networks\n";
  out += print_networks(unit.networks);
  for (const auto& c : unit.configs) out += "\n// config " + c.name + "\n" + print_config(c.tree);
  SystemModel sys{unit.things, unit.stubs, unit.pipelines};
  out += "\n// system\n" + print_system(sys);
  return out;
}

}  // namespace mlc::frontend
