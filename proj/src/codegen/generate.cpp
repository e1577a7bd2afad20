#include "mlcforge/codegen/generate.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "mlcforge/codegen/identifiers.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/printer.hpp"

namespace mlc::codegen {

using analysis::TrainableUnit;

namespace {

constexpr const char* kRuntimeHeader =
#include "runtime_text.inc"
    ;

std::string header_comment(const char* lead, const std::string& source) {
  return fmt::format("{} Generated by {} from {}. Do not edit.\n", lead, kToolchainVersion, source);
}

std::string cpp_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

ConfigValue text_list(const std::vector<std::string>& items) {
  ConfigList l;
  for (const auto& s : items) l.items.emplace_back(s);
  return l;
}

std::string cpp_type(const ValueType& t) {
  switch (analysis::type_of(t)) {
    case analysis::ExprType::integer: return "std::int64_t";
    case analysis::ExprType::real: return "double";
    case analysis::ExprType::boolean: return "bool";
    case analysis::ExprType::string: return "std::string";
    default: return "Tensor";
  }
}

std::string decoder(const ValueType& t) {
  switch (analysis::type_of(t)) {
    case analysis::ExprType::integer: return "as_int";
    case analysis::ExprType::real: return "as_real";
    case analysis::ExprType::boolean: return "as_bool";
    case analysis::ExprType::string: return "as_string";
    default: return "as_tensor";
  }
}

/// Names visible to a translated expression.
struct ExprContext {
  std::map<std::string, std::string> names;  // source name -> C++ access path
};

std::string to_cpp(const Expr& e, const ExprContext& ctx) {
  switch (e.kind) {
    case Expr::Kind::int_lit:
      return e.int_value < 0 ? fmt::format("(std::int64_t{{{}}})", e.int_value) : fmt::format("std::int64_t{{{}}}", e.int_value);
    case Expr::Kind::real_lit: {
      std::string text = frontend::format_real(e.real_value);
      return e.real_value < 0 ? "(" + text + ")" : text;
    }
    case Expr::Kind::bool_lit: return e.bool_value ? "true" : "false";
    case Expr::Kind::string_lit: return fmt::format("std::string({})", cpp_string(e.text));
    case Expr::Kind::name: {
      auto it = ctx.names.find(e.text);
      return it == ctx.names.end() ? sanitize_identifier(e.text) : it->second;
    }
    case Expr::Kind::unary: return fmt::format("({}{})", e.text, to_cpp(e.operands.at(0), ctx));
    case Expr::Kind::binary:
      return fmt::format("({} {} {})", to_cpp(e.operands.at(0), ctx), e.text, to_cpp(e.operands.at(1), ctx));
  }
  return "";
}

std::string zero_value(const ValueType& t) {
  switch (analysis::type_of(t)) {
    case analysis::ExprType::integer: return "0";
    case analysis::ExprType::real: return "0.0";
    case analysis::ExprType::boolean: return "false";
    default: return "";
  }
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string join_actions(const std::vector<Action>& actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) out += (i ? "; " : "") + frontend::print_action(actions[i]);
  return out;
}

struct MessageNames {
  std::string type;
  std::vector<std::string> fields;
};

class GlueWriter {
 public:
  GlueWriter(const ThingDef& thing, const BackendAdapter& backend) : thing_(thing), backend_(backend) {
    for (const char* fixed : {"State", "Properties", "TransitionRow", "kTransitions", "kInitialState", "Glue",
                              "state_name", "Tensor", "Value", "Runtime"})
      pool_.reserve(fixed);
    for (const auto& s : thing.statechart.states) states_[s.name] = state_ids_.claim(s.name);
    for (const auto& p : thing.properties) props_[p.name] = prop_ids_.claim(p.name);
    for (const auto& m : thing.messages) {
      MessageNames names{pool_.claim(m.name + "_msg"), {}};
      IdentifierPool fields;
      for (const auto& p : m.params) names.fields.push_back(fields.claim(p.name));
      messages_[m.name] = names;
    }
  }

  std::string write() {
    out_ += header_comment("//", thing_.span.file);
    out_ += fmt::format("// Runtime glue for thing '{}'.\n", thing_.name);
    out_ += "#pragma once\n\n";
    out_ += "#include <array>\n#include <cstdint>\n#include <stdexcept>\n#include <string>\n#include <vector>\n\n";
    out_ += "#include \"../mlc_runtime.hpp\"\n\n";
    out_ += fmt::format("namespace mlc_gen::{} {{\n\n", pool_.claim(thing_.name + "_glue"));
    write_states();
    write_properties();
    write_messages();
    write_table();
    write_class();
    out_ += "}  // namespace mlc_gen::" + sanitize_identifier(thing_.name + "_glue") + "\n";
    return out_;
  }

 private:
  void write_states() {
    out_ += "enum class State {";
    for (std::size_t i = 0; i < thing_.statechart.states.size(); ++i)
      out_ += fmt::format("{} {}", i ? "," : "", states_.at(thing_.statechart.states[i].name));
    out_ += " };\n\n";
    out_ += "inline const char* state_name(State s) {\n  switch (s) {\n";
    for (const auto& s : thing_.statechart.states)
      out_ += fmt::format("    case State::{}: return {};\n", states_.at(s.name), cpp_string(s.name));
    out_ += "  }\n  return \"\";\n}\n\n";
  }

  void write_properties() {
    out_ += "struct Properties {\n";
    ExprContext empty;
    for (const auto& p : thing_.properties) {
      std::string init = p.init ? to_cpp(*p.init, empty) : zero_value(p.type);
      out_ += fmt::format("  {} {}{};\n", cpp_type(p.type), props_.at(p.name), init.empty() ? "{}" : " = " + init);
    }
    out_ += "};\n\n";
  }

  void write_messages() {
    for (const auto& m : thing_.messages) {
      const auto& names = messages_.at(m.name);
      out_ += fmt::format("// message {}(", m.name);
      for (std::size_t i = 0; i < m.params.size(); ++i)
        out_ += fmt::format("{}{}: {}", i ? ", " : "", m.params[i].name, frontend::print_value_type(m.params[i].type));
      out_ += ")\n";
      out_ += fmt::format("struct {} {{\n", names.type);
      for (std::size_t i = 0; i < m.params.size(); ++i) {
        std::string zero = zero_value(m.params[i].type);
        out_ += fmt::format("  {} {}{};\n", cpp_type(m.params[i].type), names.fields[i], zero.empty() ? "{}" : " = " + zero);
      }
      out_ += fmt::format("\n  static constexpr const char* kName = {};\n\n", cpp_string(m.name));
      out_ += "  [[nodiscard]] std::vector<Value> values() const { return {";
      for (std::size_t i = 0; i < names.fields.size(); ++i) out_ += (i ? ", " : "") + fmt::format("Value({})", names.fields[i]);
      out_ += "}; }\n";
      out_ += "  [[nodiscard]] std::string encode() const { return encode_message(kName, values()); }\n";
      out_ += fmt::format("  static {} decode(const std::string& payload) {{\n", names.type);
      out_ += "    std::vector<Value> args = decode_args(payload);\n";
      out_ += fmt::format("    if (args.size() != {}) throw CodecError(\"{}: expected {} argument(s)\");\n", m.params.size(),
                          m.name, m.params.size());
      out_ += fmt::format("    {} m;\n", names.type);
      for (std::size_t i = 0; i < m.params.size(); ++i)
        out_ += fmt::format("    m.{} = {}(args[{}]);\n", names.fields[i], decoder(m.params[i].type), i);
      out_ += "    return m;\n  }\n};\n\n";
    }
  }

  void write_table() {
    std::size_t rows = 0;
    for (const auto& s : thing_.statechart.states) rows += s.transitions.size();
    out_ += "struct TransitionRow {\n  State source;\n  const char* port;  // empty for triggerless rows\n"
            "  const char* message;\n  const char* guard;\n  const char* actions;\n  State target;\n"
            "  bool internal;\n};\n\n";
    const State* initial = thing_.statechart.initial_state();
    std::string initial_id = initial ? states_.at(initial->name) : states_.begin()->second;
    out_ += fmt::format("inline constexpr State kInitialState = State::{};\n\n", initial_id);
    out_ += fmt::format("inline constexpr std::array<TransitionRow, {}> kTransitions{{{{\n", rows);
    for (const auto& s : thing_.statechart.states) {
      for (const auto& t : s.transitions) {
        std::string target = t.target ? *t.target : s.name;
        out_ += fmt::format("    {{State::{}, {}, {}, {}, {}, State::{}, {}}},\n", states_.at(s.name),
                            cpp_string(t.trigger ? t.trigger->port : ""), cpp_string(t.trigger ? t.trigger->message : ""),
                            cpp_string(t.guard ? frontend::print_expr(*t.guard) : ""), cpp_string(join_actions(t.actions)),
                            states_.at(target), t.target ? "false" : "true");
      }
    }
    out_ += "}};\n\n";
  }

  ExprContext context_for(const Transition& t) const {
    ExprContext ctx;
    for (const auto& [name, id] : props_) ctx.names[name] = "p_." + id;
    if (t.trigger) {
      const auto& names = messages_.at(t.trigger->message);
      for (std::size_t i = 0; i < t.trigger->params.size() && i < names.fields.size(); ++i)
        ctx.names[t.trigger->params[i]] = "m." + names.fields[i];
    }
    return ctx;
  }

  std::string property_type(const std::string& name) const {
    const Property* p = thing_.property(name);
    return p ? cpp_type(p->type) : "Tensor";
  }

  void write_action(const Action& a, const ExprContext& ctx, std::string& body) {
    const std::string unit = thing_.name;
    if (const auto* send = std::get_if<SendAction>(&a.kind)) {
      body += fmt::format("    rt_.send({}, {}, {{", cpp_string(send->port), cpp_string(send->message));
      for (std::size_t i = 0; i < send->args.size(); ++i) body += (i ? ", " : "") + fmt::format("Value({})", to_cpp(send->args[i], ctx));
      body += "});\n";
    } else if (const auto* assign = std::get_if<AssignAction>(&a.kind)) {
      body += fmt::format("    {} = {};\n", ctx.names.count(assign->target) ? ctx.names.at(assign->target) : assign->target,
                          to_cpp(assign->value, ctx));
    } else if (std::holds_alternative<PreprocessAction>(a.kind)) {
      body += fmt::format("    // bridge-call-site: PREPROCESS {}\n    rt_.preprocess({});\n", unit, cpp_string(unit));
    } else if (std::holds_alternative<TrainAction>(a.kind)) {
      body += fmt::format("    // bridge-call-site: TRAIN {}\n    rt_.train({});\n", unit, cpp_string(unit));
    } else if (const auto* predict = std::get_if<PredictAction>(&a.kind)) {
      body += "    {\n      Tensor input;\n";
      for (const auto& in : predict->inputs) body += fmt::format("      append(input, {});\n", to_cpp(in, ctx));
      body += fmt::format("      // bridge-call-site: PREDICT {}\n", unit);
      body += "      Tensor output;\n";
      body += "      " + backend_.emit_predict_call(unit, "input", "output") + "\n";
      std::string target = ctx.names.count(predict->result) ? ctx.names.at(predict->result) : predict->result;
      std::string type = property_type(predict->result);
      if (type == "std::int64_t") {
        body += fmt::format("      {} = int_result(output);\n", target);
      } else if (type == "double") {
        body += fmt::format("      {} = real_result(output);\n", target);
      } else {
        body += fmt::format("      {} = output;\n", target);
      }
      body += "    }\n";
    }
  }

  void write_class() {
    struct Row {
      const State* state;
      const Transition* t;
      std::size_t index;
    };
    std::vector<Row> rows;
    std::size_t index = 0;
    for (const auto& s : thing_.statechart.states)
      for (const auto& t : s.transitions) rows.push_back({&s, &t, index++});

    std::map<std::size_t, std::string> guards, effects;
    auto guard_call = [&](const Row& r, const std::string& arg) -> std::string {
      if (!r.t->guard) return "";
      std::string params = r.t->trigger ? fmt::format("const {}& m", messages_.at(r.t->trigger->message).type) : "";
      std::string cond = to_cpp(*r.t->guard, context_for(*r.t));
      bool unused = r.t->trigger && cond.find("m.") == std::string::npos;
      guards[r.index] = fmt::format("  [[nodiscard]] bool guard_{}({}) const {{ {}return {}; }}\n", r.index, params,
                                    unused ? "(void)m; " : "", cond);
      return fmt::format("guard_{}({})", r.index, arg);
    };
    auto fire = [&](const Row& r, const std::string& arg, const std::string& indent) {
      std::string body;
      ExprContext ctx = context_for(*r.t);
      for (const auto& a : r.t->actions) write_action(a, ctx, body);
      std::string params = r.t->trigger ? fmt::format("const {}& m", messages_.at(r.t->trigger->message).type) : "";
      bool uses_m = body.find("m.") != std::string::npos;
      effects[r.index] = fmt::format("  void effect_{}({}) {{\n{}{}  }}\n", r.index, params, r.t->trigger && !uses_m ? "    (void)m;\n" : "",
                              body);
      std::string out = fmt::format("{}effect_{}({});\n", indent, r.index, arg);
      if (r.t->target) out += fmt::format("{}state_ = State::{};\n", indent, states_.at(*r.t->target));
      return out;
    };

    std::string publics;
    // Message handlers for every (input port, message) pair.
    IdentifierPool handler_ids;
    for (const auto& port : thing_.ports) {
      if (port.direction == Direction::out) continue;
      for (const auto& msg : port.messages) {
        if (!messages_.count(msg)) continue;
        std::string name = handler_ids.claim("on_" + port.name + "_" + msg);
        publics += fmt::format("  /// `{}?{}`; true when a transition fired.\n", port.name, msg);
        publics += fmt::format("  bool {}(const {}& m) {{\n", name, messages_.at(msg).type);
        std::string cases;
        for (const auto& s : thing_.statechart.states) {
          std::string branch;
          for (const auto& r : rows) {
            if (r.state != &s || !r.t->trigger || r.t->trigger->port != port.name || r.t->trigger->message != msg) continue;
            std::string guard = guard_call(r, "m");
            std::string indent = guard.empty() ? "        " : "          ";
            std::string fired = fire(r, "m", indent) + indent + "run_auto();\n" + indent + "return true;\n";
            branch += guard.empty() ? fired : fmt::format("        if ({}) {{\n{}        }}\n", guard, fired);
          }
          if (!branch.empty())
            cases += fmt::format("      case State::{}:\n{}{}", states_.at(s.name), branch,
                                 ends_with(branch, "return true;\n") ? "" : "        break;\n");
        }
        if (!cases.empty()) publics += "    switch (state_) {\n" + cases + "      default:\n        break;\n    }\n";
        else publics += "    (void)m;\n";
        publics += "    return false;\n  }\n\n";
        dispatch_.push_back({port.name, msg, name});
      }
    }

    std::string autos;
    for (const auto& s : thing_.statechart.states) {
      std::string branch;
      for (const auto& r : rows) {
        if (r.state != &s || r.t->trigger) continue;
        std::string guard = guard_call(r, "");
        std::string indent = guard.empty() ? "          " : "            ";
        std::string fired = fire(r, "", indent) + indent + "continue;\n";
        branch += guard.empty() ? fired : fmt::format("          if ({}) {{\n{}          }}\n", guard, fired);
      }
      if (!branch.empty())
        autos += fmt::format("        case State::{}:\n{}{}", states_.at(s.name), branch,
                             ends_with(branch, "continue;\n") ? "" : "          break;\n");
    }

    out_ += "class Glue {\n public:\n";
    out_ += "  explicit Glue(Runtime& rt) : rt_(rt) {}\n\n";
    out_ += "  [[nodiscard]] State state() const { return state_; }\n";
    out_ += "  [[nodiscard]] const Properties& properties() const { return p_; }\n";
    out_ += "  Properties& properties() { return p_; }\n\n";
    out_ += "  /// Enters the initial state and runs triggerless transitions.\n";
    out_ += "  void start() {\n    state_ = kInitialState;\n    run_auto();\n  }\n\n";
    out_ += publics;
    out_ += "  /// Decodes and dispatches a message received on `port`.\n";
    out_ += "  bool receive(const std::string& port, const std::string& payload) {\n";
    if (!dispatch_.empty()) out_ += "    std::string message = as_string(find_entry(payload, \"message\"));\n";
    for (const auto& d : dispatch_)
      out_ += fmt::format("    if (port == {} && message == {}) return {}({}::decode(payload));\n", cpp_string(d.port),
                          cpp_string(d.message), d.handler, messages_.at(d.message).type);
    if (dispatch_.empty()) out_ += "    (void)port;\n    (void)payload;\n";
    out_ += "    return false;\n  }\n\n";
    out_ += "  /// Fires triggerless transitions until none is enabled.\n";
    out_ += "  void run_auto() {\n";
    if (autos.empty()) {
      out_ += "  }\n\n";
    } else {
      out_ += "    for (int steps = 0; steps < 100000; ++steps) {\n      switch (state_) {\n" + autos +
              "        default:\n          break;\n      }\n      return;\n    }\n"
              "    throw std::runtime_error(\"triggerless transitions do not terminate\");\n  }\n\n";
    }
    std::string privates;
    for (const auto& [i, text] : guards) privates += text;
    for (const auto& [i, text] : effects) privates += text;
    out_ += " private:\n" + privates;
    if (!privates.empty()) out_ += "\n";
    out_ += "  Runtime& rt_;\n  State state_ = kInitialState;\n  Properties p_;\n};\n\n";
  }

  struct Dispatch {
    std::string port, message, handler;
  };

  const ThingDef& thing_;
  const BackendAdapter& backend_;
  IdentifierPool pool_, state_ids_, prop_ids_;
  std::map<std::string, std::string> states_, props_;
  std::map<std::string, MessageNames> messages_;
  std::vector<Dispatch> dispatch_;
  std::string out_;
};

}  // namespace

std::string default_archive_path(const ModelUnit& unit, const std::string& name) {
  return fmt::format("{}/models/{}.mlcw", unit.manifest.store, name);
}

std::string default_log_path(const ModelUnit& unit, const TrainableUnit& tu) {
  if (!tu.training_results.empty()) return tu.training_results;
  return fmt::format("{}/logs/{}.log", unit.manifest.store, tu.name);
}

ConfigTree training_spec(const TrainableUnit& u, const ModelSpec& spec) {
  ConfigTree t;
  t.set("unit", u.name);
  t.set("kind", Token{analysis::to_string(u.kind)});
  t.set("algorithm", Token{u.algorithm});
  t.set("backend", Token{u.backend});
  t.set("dataset", u.dataset);
  t.set("sequential", u.sequential);
  t.set("features", text_list(u.feature_columns()));
  t.set("label", u.label_column);
  t.set("labels", Token{to_string(u.labels)});
  t.set("classification", u.classification);
  t.set("n_outputs", u.n_outputs);

  ConfigTree plan;
  for (const auto& step : u.plan.steps) {
    std::vector<std::string> columns;
    for (const auto& c : step.columns) {
      auto f = std::find_if(u.features.begin(), u.features.end(), [&](const auto& fs) { return fs.name == c; });
      if (f != u.features.end()) columns.insert(columns.end(), f->columns.begin(), f->columns.end());
      else columns.push_back(c);
    }
    std::string key = to_string(step.kind);
    if (auto* existing = plan.find(key)) {
      auto& items = existing->get_if<ConfigList>()->items;
      for (auto& c : columns) items.emplace_back(c);
    } else {
      plan.set(key, text_list(columns));
    }
  }
  t.set("preprocess", plan);

  ConfigTree model;
  model.set("layer_sizes", int_list(spec.layer_sizes));
  model.set("activations", text_list(spec.activations));
  model.set("loss", Token{spec.loss});
  ConfigList dropout;
  bool any_dropout = false;
  for (const auto& l : spec.layers) {
    dropout.items.emplace_back(l.dropout);
    any_dropout = any_dropout || l.dropout > 0;
  }
  if (any_dropout) model.set("dropout", dropout);
  ConfigList pretrained;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.kind != ModelLayer::Kind::pretrained) continue;
    ConfigTree p;
    p.set("layer", static_cast<std::int64_t>(i));
    p.set("archive", l.archive);
    p.set("frozen", l.frozen);
    pretrained.items.emplace_back(p);
  }
  if (!pretrained.items.empty()) model.set("pretrained", pretrained);
  t.set("model", model);
  t.set("training", u.config);
  return t;
}

GeneratedFileSet generate_training_program(const TrainableUnit& unit, const BackendAdapter& backend,
                                           const analysis::ImportResolver& imports) {
  Diagnostics caps = backend.check(unit);
  if (!caps.empty()) throw ModelError("UnsupportedCapability", caps.front().message, unit.span);
  ModelSpec spec = backend.model_spec(unit, imports);
  std::string dir = "gen/train/" + unit.name + "/";
  GeneratedFileSet files;
  files.add({dir + "train.py", backend.emit_training_program(unit, spec, dir + "spec.tcl"), FileKind::training_program});
  std::string spec_text = header_comment("//", unit.span.file) + frontend::print_config(training_spec(unit, spec));
  files.add({dir + "spec.tcl", spec_text, FileKind::training_program});
  return files;
}

GeneratedFileSet generate_runtime_support() {
  GeneratedFileSet files;
  std::string text = fmt::format("// Generated by {}. Do not edit.\n// Shared runtime for generated glue.\n", kToolchainVersion);
  files.add({"gen/runtime/mlc_runtime.hpp", text + kRuntimeHeader, FileKind::runtime_glue});
  return files;
}

GeneratedFileSet generate_runtime_glue(const ThingDef& thing, const BackendAdapter& backend) {
  GeneratedFileSet files;
  std::string dir = sanitize_identifier(thing.name);
  files.add({fmt::format("gen/runtime/{}/{}_glue.hpp", dir, dir), GlueWriter(thing, backend).write(),
             FileKind::runtime_glue});
  return files;
}

namespace {

std::string stub_header(const StubDef& stub) {
  std::string cls = sanitize_identifier(stub.name + "Stub");
  std::string out = header_comment("//", stub.span.file);
  out += fmt::format("// Interface skeleton for stub '{}'. Derive from {} and override the handlers.\n", stub.name, cls);
  out += "#pragma once\n\n#include <array>\n#include <functional>\n#include <string>\n#include <utility>\n\n";
  out += "#include \"../../runtime/mlc_runtime.hpp\"\n\n";
  out += "namespace mlc_gen::stubs {\n\n";
  out += fmt::format("class {} {{\n public:\n", cls);

  IdentifierPool ids;
  for (const char* fixed : {"sink", "Sink"}) ids.reserve(fixed);
  struct PortIds {
    const TensorPort* port;
    std::string id;
    std::string type;
  };
  std::vector<PortIds> ports;
  for (const auto& p : stub.ports) {
    std::string id = ids.claim(p.name);
    std::string type = ids.claim(id + "_t");
    ports.push_back({&p, id, type});
  }
  for (const auto& p : ports) {
    std::string dims = frontend::print_tensor_type(p.port->type);
    std::string mapping = p.id == p.port->name ? "" : fmt::format(" port '{}' -> {};", p.port->name, p.id);
    out += fmt::format("  using {} = std::array<double, {}>;  //{} {} {}{}\n", p.type, p.port->type.element_count(), mapping,
                       to_string(p.port->direction), dims, p.port->type.dims.size() > 1 ? ", row-major" : "");
  }
  out += "  using Sink = std::function<void(const std::string& port, const Tensor& value)>;\n\n";
  out += fmt::format("  virtual ~{}() = default;\n\n", cls);
  for (const auto& p : ports) {
    if (p.port->direction == Direction::out) continue;
    out += fmt::format("  /// Input `{}`.\n", p.port->name);
    out += fmt::format("  virtual void on_{}(const {}& value) {{\n    (void)value;\n", p.id, p.type);
    out += fmt::format("    // TODO: handcrafted behavior\n    throw NotImplemented({});\n  }}\n\n",
                       cpp_string(stub.name + "." + p.port->name + " is not implemented"));
  }
  out += "  /// Receives every emitted value; set by the host.\n  void connect(Sink sink) { sink_ = std::move(sink); }\n\n";
  out += " protected:\n";
  for (const auto& p : ports) {
    if (p.port->direction == Direction::in) continue;
    out += fmt::format("  void emit_{}(const {}& value) {{\n", p.id, p.type);
    out += fmt::format("    if (sink_) sink_({}, Tensor(value.begin(), value.end()));\n  }}\n", cpp_string(p.port->name));
  }
  out += "\n private:\n  Sink sink_;\n};\n\n}  // namespace mlc_gen::stubs\n";
  return out;
}

}  // namespace

GeneratedFileSet generate_component_stubs(const PipelineGraph& pipeline, const ModelUnit& unit) {
  GeneratedFileSet files;
  std::set<std::string> seen;
  for (const auto& inst : pipeline.instances) {
    const StubDef* stub = unit.stub(inst.type_name);
    if (stub == nullptr || !seen.insert(stub->name).second) continue;
    std::string dir = sanitize_identifier(stub->name);
    files.add({fmt::format("gen/stubs/{}/{}_stub.hpp", dir, dir), stub_header(*stub), FileKind::stub_interface});
  }
  return files;
}

GenerateResult generate_all(const analysis::AnalysisResult& analysis, const BackendRegistry& backends) {
  GenerateResult result;
  const ModelUnit& unit = analysis.unit;
  auto imports = analysis::default_import_resolver(unit);
  auto backend_for = [&](const std::string& id, const SourceSpan& span) -> const BackendAdapter* {
    const BackendAdapter* b = backends.find(id.empty() ? unit.manifest.backend : id);
    if (b == nullptr) result.diagnostics.push_back(make_error("InvalidBackend", fmt::format("unknown backend '{}'", id), span));
    return b;
  };
  auto merge = [&](GeneratedFileSet set) {
    for (auto& f : set.files()) {
      if (const auto* existing = result.files.find(f.path)) {
        if (existing->content != f.content)
          result.diagnostics.push_back(make_error("DuplicatePath", fmt::format("two different files generated at '{}'", f.path)));
        continue;
      }
      result.files.add(f);
    }
  };

  for (const auto& tu : analysis.units) {
    const BackendAdapter* b = backend_for(tu.backend, tu.span);
    if (b == nullptr) continue;
    try {
      merge(generate_training_program(tu, *b, imports));
    } catch (const ModelError& e) {
      result.diagnostics.push_back(e.diagnostic());
    }
  }
  if (!unit.things.empty()) merge(generate_runtime_support());
  for (const auto& thing : unit.things) {
    const BackendAdapter* b = backend_for(thing.ml ? thing.ml->backend : unit.manifest.backend, thing.span);
    if (b != nullptr) merge(generate_runtime_glue(thing, *b));
  }
  for (const auto& p : unit.pipelines) merge(generate_component_stubs(p, unit));
  result.files.add({"gen/MANIFEST", result.files.manifest_text(), FileKind::manifest});
  return result;
}

}  // namespace mlc::codegen
