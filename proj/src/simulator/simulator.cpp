#include "mlcforge/simulator/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include <fmt/format.h>

#include "mlcforge/analysis/statechart.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/printer.hpp"

namespace mlc::simulator {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::state_entered: return "StateEntered";
    case EventKind::message_sent: return "MessageSent";
    case EventKind::message_received: return "MessageReceived";
    case EventKind::action_executed: return "ActionExecuted";
    case EventKind::prediction_made: return "PredictionMade";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (auto k : {EventKind::state_entered, EventKind::message_sent, EventKind::message_received,
                 EventKind::action_executed, EventKind::prediction_made})
    if (text == to_string(k)) return k;
  return std::nullopt;
}

namespace {

std::string format_vector(const std::vector<double>& v) {
  SimValue tmp;
  tmp.data = v;
  return format_value(tmp);
}

}  // namespace

std::string format_event(const TraceEvent& e) {
  std::string details;
  switch (e.kind) {
    case EventKind::state_entered: details = "state=" + e.state; break;
    case EventKind::message_sent:
      details = fmt::format("port={} message={} args={} to={}", e.port, e.message, format_args(e.args), e.peer);
      break;
    case EventKind::message_received:
      details = fmt::format("port={} message={} args={} from={}", e.port, e.message, format_args(e.args), e.peer);
      break;
    case EventKind::action_executed: details = "action=" + e.action; break;
    case EventKind::prediction_made:
      details = fmt::format("unit={} input={} output={}", e.unit, format_value(e.input), format_vector(e.output));
      break;
  }
  return fmt::format("{}\t{}\t{}\t{}\t{}", e.seq, e.time, to_string(e.kind), e.thing, details);
}

std::string format_trace(const std::vector<TraceEvent>& trace) {
  std::string out;
  for (const auto& e : trace) out += format_event(e) + "\n";
  return out;
}

namespace {

struct Abort {
  std::string code;
  std::string message;
};

struct Route {
  std::string instance;
  std::string port;
  std::int64_t latency = 1;
};

struct Delivery {
  std::int64_t time = 0;
  std::uint64_t order = 0;
  std::string target;
  std::string port;
  std::string message;
  std::vector<SimValue> args;
  std::string peer;
  bool emission = false;  // a stub emitting on its own output port
};

struct Later {
  bool operator()(const Delivery& a, const Delivery& b) const {
    return std::tie(a.time, a.order) > std::tie(b.time, b.order);
  }
};

enum class Kind { thing, network, stub };

struct Node {
  std::string name;
  Kind kind = Kind::thing;
  const ThingDef* thing = nullptr;
  const NetworkArch* network = nullptr;
  const StubDef* stub = nullptr;
  std::string state;
  std::map<std::string, SimValue> props;
};

bool is_number(const SimValue& v) {
  return std::holds_alternative<std::int64_t>(v.data) || std::holds_alternative<double>(v.data);
}

double as_double(const SimValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v.data)) return *d;
  throw Abort{"RuntimeError", fmt::format("expected a number, got {}", format_value(v))};
}

bool as_bool(const SimValue& v) {
  if (const auto* b = std::get_if<bool>(&v.data)) return *b;
  throw Abort{"RuntimeError", fmt::format("expected a boolean, got {}", format_value(v))};
}

SimValue make(std::variant<std::int64_t, double, bool, std::string, std::vector<double>> data) {
  SimValue v;
  v.data = std::move(data);
  return v;
}

std::vector<double> flatten(const SimValue& v) {
  if (const auto* t = std::get_if<std::vector<double>>(&v.data)) return *t;
  return {as_double(v)};
}

SimValue default_value(const ValueType& t) {
  switch (analysis::type_of(t)) {
    case analysis::ExprType::integer: return make(std::int64_t{0});
    case analysis::ExprType::real: return make(0.0);
    case analysis::ExprType::boolean: return make(false);
    case analysis::ExprType::string: return make(std::string{});
    default: {
      const auto* tensor = t.tensor();
      std::size_t n = tensor && tensor->concrete() ? static_cast<std::size_t>(tensor->element_count()) : 0;
      return make(std::vector<double>(n, 0.0));
    }
  }
}

/// Coerces a value to the declared type of a property or parameter.
SimValue coerce(const SimValue& v, const ValueType& t) {
  switch (analysis::type_of(t)) {
    case analysis::ExprType::integer:
      if (const auto* d = std::get_if<double>(&v.data)) return make(static_cast<std::int64_t>(std::llround(*d)));
      if (const auto* vec = std::get_if<std::vector<double>>(&v.data); vec && vec->size() == 1)
        return make(static_cast<std::int64_t>(std::llround((*vec)[0])));
      return v;
    case analysis::ExprType::real:
      if (const auto* i = std::get_if<std::int64_t>(&v.data)) return make(static_cast<double>(*i));
      return v;
    case analysis::ExprType::tensor:
      if (is_number(v)) {
        SimValue out = make(std::vector<double>{as_double(v)});
        return out;
      }
      return v;
    default: return v;
  }
}

}  // namespace

class Run {
 public:
  Run(Simulator& sim, Scenario scenario) : sim_(sim), unit_(sim.unit_), scenario_(std::move(scenario)) {}

  SimResult execute() {
    setup();
    SimResult result;
    result.injected = scenario_.events.size();
    try {
      check_bindings();
      for (const auto& ev : scenario_.events) {
        Delivery d;
        d.time = ev.time;
        d.order = order_++;
        d.target = ev.thing;
        d.port = ev.port;
        d.message = ev.message;
        d.args = ev.args;
        d.peer = "scenario";
        const Node& n = nodes_.at(ev.thing);
        d.emission = n.kind == Kind::stub && n.stub->port(ev.port)->direction == Direction::out;
        queue_.push(std::move(d));
      }
      for (const auto& name : order_names_) {
        Node& n = nodes_.at(name);
        if (n.kind != Kind::thing) continue;
        enter(n, n.thing->statechart.initial_state()->name);
        run_auto(n);
      }
      while (!queue_.empty()) {
        Delivery d = queue_.top();
        queue_.pop();
        now_ = d.time;
        step();
        deliver(d);
      }
    } catch (const Abort& a) {
      result.error = SimError{a.code, a.message, static_cast<std::uint64_t>(trace_.size())};
    }
    result.trace = std::move(trace_);
    result.steps = steps_;
    return result;
  }

 private:
  void setup() {
    const PipelineGraph* pipeline = nullptr;
    if (!scenario_.pipeline.empty()) {
      pipeline = unit_.pipeline(scenario_.pipeline);
      if (pipeline == nullptr) throw ModelError("UnknownPipeline", fmt::format("unknown pipeline '{}'", scenario_.pipeline));
    } else if (unit_.pipelines.size() == 1) {
      pipeline = &unit_.pipelines.front();
    } else if (unit_.pipelines.size() > 1) {
      throw ModelError("AmbiguousPipeline", "the unit declares several pipelines; name one in the scenario");
    }
    if (pipeline != nullptr) {
      for (const auto& inst : pipeline->instances) {
        Node n;
        n.name = inst.name;
        if ((n.thing = unit_.thing(inst.type_name))) n.kind = Kind::thing;
        else if ((n.network = unit_.network(inst.type_name))) n.kind = Kind::network;
        else if ((n.stub = unit_.stub(inst.type_name))) n.kind = Kind::stub;
        else throw ModelError("UnknownType", fmt::format("unknown component type '{}'", inst.type_name), inst.span);
        add(std::move(n));
      }
      for (const auto& c : pipeline->connectors) {
        std::int64_t latency = 1;
        std::string from = c.from.instance + "." + c.from.port, to = c.to.instance + "." + c.to.port;
        for (const auto& o : scenario_.connectors)
          if (o.from == from && o.to == to) latency = o.latency;
        routes_[{c.from.instance, c.from.port}].push_back({c.to.instance, c.to.port, latency});
      }
    } else {
      for (const auto& t : unit_.things) {
        Node n;
        n.name = t.name;
        n.thing = &t;
        add(std::move(n));
      }
    }
    for (const auto& o : scenario_.connectors) {
      bool found = false;
      for (const auto& [from, routes] : routes_)
        for (const auto& r : routes)
          found = found || (from.first + "." + from.second == o.from && r.instance + "." + r.port == o.to);
      if (!found) throw ModelError("UnknownConnector", fmt::format("no connector {} -> {}", o.from, o.to));
    }
    for (const auto& [name, binding] : scenario_.predictors)
      if (!nodes_.count(name)) throw ModelError("UnknownThing", fmt::format("predictor bound to unknown instance '{}'", name));
    for (auto& ev : scenario_.events) validate(ev);
  }

  void add(Node n) {
    if (n.thing) {
      for (const auto& p : n.thing->properties) {
        SimValue v = default_value(p.type);
        if (p.init) v = coerce(eval(*p.init, n, {}), p.type);
        n.props[p.name] = v;
      }
    }
    order_names_.push_back(n.name);
    nodes_.emplace(n.name, std::move(n));
  }

  void validate(InjectedEvent& ev) {
    auto it = nodes_.find(ev.thing);
    if (it == nodes_.end()) throw ModelError("UnknownThing", fmt::format("scenario targets unknown instance '{}'", ev.thing));
    const Node& n = it->second;
    if (n.kind == Kind::thing) {
      const ThingPort* port = n.thing->port(ev.port);
      if (port == nullptr || port->direction == Direction::out)
        throw ModelError("UnknownPort", fmt::format("'{}' has no input port '{}'", ev.thing, ev.port));
      if (ev.message.empty() && port->messages.size() == 1) ev.message = port->messages.front();
      if (std::find(port->messages.begin(), port->messages.end(), ev.message) == port->messages.end())
        throw ModelError("UnknownMessage", fmt::format("port '{}.{}' does not carry '{}'", ev.thing, ev.port, ev.message));
      const MessageDef* m = n.thing->message(ev.message);
      if (m == nullptr || m->params.size() != ev.args.size())
        throw ModelError("ArityMismatch", fmt::format("'{}' expects {} argument(s)", ev.message, m ? m->params.size() : 0));
      for (std::size_t i = 0; i < ev.args.size(); ++i) ev.args[i] = coerce(ev.args[i], m->params[i].type);
    } else {
      const TensorPort* port = n.network ? n.network->port(ev.port) : n.stub->port(ev.port);
      if (port == nullptr || (n.network && port->direction == Direction::out))
        throw ModelError("UnknownPort", fmt::format("'{}' has no port '{}' accepting injection", ev.thing, ev.port));
      if (ev.message.empty()) ev.message = ev.port;
      if (ev.args.size() != 1) throw ModelError("ArityMismatch", "tensor ports take exactly one argument");
      ev.args[0] = coerce(ev.args[0], ValueType{port->type});
    }
  }

  static bool predicts(const ThingDef& t) {
    for (const auto& s : t.statechart.states)
      for (const auto& tr : s.transitions)
        for (const auto& a : tr.actions)
          if (std::holds_alternative<PredictAction>(a.kind)) return true;
    return false;
  }

  /// Things run on their own and injected targets receive input; anything
  /// downstream of those can be asked for a prediction.
  void check_bindings() {
    std::set<std::string> reached;
    std::vector<std::string> todo;
    for (const auto& name : order_names_)
      if (nodes_.at(name).kind == Kind::thing) todo.push_back(name);
    for (const auto& ev : scenario_.events) todo.push_back(ev.thing);
    while (!todo.empty()) {
      std::string name = todo.back();
      todo.pop_back();
      if (!reached.insert(name).second) continue;
      for (const auto& [from, routes] : routes_)
        if (from.first == name)
          for (const auto& r : routes) todo.push_back(r.instance);
    }
    for (const auto& name : order_names_) {
      const Node& n = nodes_.at(name);
      bool needs = reached.count(name) &&
                   ((n.kind == Kind::thing && predicts(*n.thing)) || n.kind == Kind::network);
      if (needs && !scenario_.predictors.count(name))
        throw Abort{"UnboundPredictor", fmt::format("no predictor bound for '{}'", name)};
    }
  }

  void step() {
    if (++steps_ > scenario_.step_limit)
      throw Abort{"StepLimitExceeded", fmt::format("step limit {} exceeded at time {}", scenario_.step_limit, now_)};
  }

  TraceEvent& emit(EventKind kind, const std::string& thing) {
    TraceEvent e;
    e.seq = trace_.size() + 1;
    e.time = now_;
    e.kind = kind;
    e.thing = thing;
    trace_.push_back(std::move(e));
    return trace_.back();
  }

  void enter(Node& n, const std::string& state) {
    n.state = state;
    emit(EventKind::state_entered, n.name).state = state;
  }

  void send(const Node& from, const std::string& port, const std::string& message, const std::vector<SimValue>& args) {
    auto it = routes_.find({from.name, port});
    if (it == routes_.end()) {
      auto& e = emit(EventKind::message_sent, from.name);
      e.port = port;
      e.message = message;
      e.args = args;
      e.peer = "env";
      return;
    }
    for (const auto& r : it->second) {
      auto& e = emit(EventKind::message_sent, from.name);
      e.port = port;
      e.message = message;
      e.args = args;
      e.peer = r.instance + "." + r.port;
      Delivery d;
      d.time = now_ + r.latency;
      d.order = order_++;
      d.target = r.instance;
      d.port = r.port;
      // Tensor ports carry the port name as message name.
      const Node& target = nodes_.at(r.instance);
      d.message = target.kind == Kind::thing ? message : r.port;
      d.args = args;
      d.peer = from.name + "." + port;
      queue_.push(std::move(d));
    }
  }

  void deliver(const Delivery& d) {
    Node& n = nodes_.at(d.target);
    if (d.emission) {
      send(n, d.port, d.message, d.args);
      return;
    }
    auto& e = emit(EventKind::message_received, n.name);
    e.port = d.port;
    e.message = d.message;
    e.args = d.args;
    e.peer = d.peer;
    if (n.kind == Kind::thing) {
      const State* state = n.thing->statechart.state(n.state);
      const MessageDef* msg = n.thing->message(d.message);
      for (const auto& t : state->transitions) {
        if (!t.trigger || t.trigger->port != d.port || t.trigger->message != d.message) continue;
        std::map<std::string, SimValue> locals;
        for (std::size_t i = 0; i < t.trigger->params.size() && i < d.args.size(); ++i)
          locals[t.trigger->params[i]] = msg && i < msg->params.size() ? coerce(d.args[i], msg->params[i].type) : d.args[i];
        if (t.guard && !as_bool(eval(*t.guard, n, locals))) continue;
        fire(n, t, locals);
        run_auto(n);
        return;
      }
    } else if (n.kind == Kind::network) {
      const SimValue& input = d.args.at(0);
      std::vector<double> out = predict(n, n.network->name, input);
      SimValue v = make(out);
      send(n, n.network->body.output, n.network->body.output, {v});
    }
  }

  void run_auto(Node& n) {
    for (;;) {
      const State* state = n.thing->statechart.state(n.state);
      const Transition* enabled = nullptr;
      for (const auto& t : state->transitions) {
        if (t.trigger) continue;
        if (t.guard && !as_bool(eval(*t.guard, n, {}))) continue;
        enabled = &t;
        break;
      }
      if (enabled == nullptr) return;
      step();
      fire(n, *enabled, {});
    }
  }

  void fire(Node& n, const Transition& t, const std::map<std::string, SimValue>& locals) {
    for (const auto& a : t.actions) {
      emit(EventKind::action_executed, n.name).action = frontend::print_action(a);
      if (const auto* send_action = std::get_if<SendAction>(&a.kind)) {
        std::vector<SimValue> args;
        const MessageDef* m = n.thing->message(send_action->message);
        for (std::size_t i = 0; i < send_action->args.size(); ++i) {
          SimValue v = eval(send_action->args[i], n, locals);
          args.push_back(m && i < m->params.size() ? coerce(v, m->params[i].type) : v);
        }
        send(n, send_action->port, send_action->message, args);
      } else if (const auto* assign = std::get_if<AssignAction>(&a.kind)) {
        const Property* p = n.thing->property(assign->target);
        SimValue v = eval(assign->value, n, locals);
        n.props[assign->target] = p ? coerce(v, p->type) : v;
      } else if (const auto* pred = std::get_if<PredictAction>(&a.kind)) {
        SimValue input;
        if (pred->inputs.size() == 1) {
          input = eval(pred->inputs.front(), n, locals);
          if (!input.is_tensor()) input = make(flatten(input));
        } else {
          std::vector<double> all;
          for (const auto& e : pred->inputs) {
            auto part = flatten(eval(e, n, locals));
            all.insert(all.end(), part.begin(), part.end());
          }
          input = make(all);
        }
        std::vector<double> out = predict(n, n.thing->name, input);
        const Property* p = n.thing->property(pred->result);
        SimValue result = make(out);
        if (p != nullptr) {
          auto type = analysis::type_of(p->type);
          if (type == analysis::ExprType::integer) {
            std::int64_t cls = out.size() == 1 ? std::llround(out[0])
                                               : std::max_element(out.begin(), out.end()) - out.begin();
            result = make(cls);
          } else if (type == analysis::ExprType::real) {
            result = make(out.empty() ? 0.0 : out[0]);
          }
        }
        n.props[pred->result] = result;
      }
      // da_preprocess and da_train are recorded only; training happens in the build.
    }
    if (t.target) enter(n, *t.target);
  }

  std::vector<double> predict(const Node& n, const std::string& unit, const SimValue& input) {
    const PredictorBinding& b = scenario_.predictors.at(n.name);
    std::vector<double> out;
    if (b.kind == PredictorBinding::Kind::oracle) {
      auto it = input.tag.empty() ? b.table.end() : b.table.find(input.tag);
      if (it == b.table.end()) it = b.table.find("default");
      if (it == b.table.end())
        throw Abort{"OracleMiss", fmt::format("oracle for '{}' has no entry for {}", n.name, format_value(input))};
      out = it->second;
    } else {
      out = trained(n, unit, b, flatten(input));
    }
    auto& e = emit(EventKind::prediction_made, n.name);
    e.unit = unit;
    e.input = input;
    e.output = out;
    return out;
  }

  std::vector<double> trained(const Node& n, const std::string& unit, const PredictorBinding& b,
                              const std::vector<double>& x) {
    SimValue key_value = make(x);
    auto key = std::make_pair(unit, format_value(key_value));
    if (auto it = sim_.cache_.find(key); it != sim_.cache_.end()) return it->second;
    if (sim_.bridge_ == nullptr) throw Abort{"BridgeFailure", fmt::format("'{}' is bound to a trained model but no bridge is available", n.name)};
    std::string archive = b.archive.empty() && sim_.resolver_ ? sim_.resolver_(unit) : b.archive;
    if (archive.empty()) throw Abort{"UnboundPredictor", fmt::format("no trained archive for '{}'", unit)};
    try {
      if (sim_.loaded_[unit] != archive) {
        ConfigTree req;
        req.set("unit", unit);
        req.set("archive", archive);
        auto res = sim_.bridge_->call("LOAD", frontend::print_inline(req));
        if (!res.ok) throw Abort{"BridgeFailure", fmt::format("LOAD {}: {}", unit, res.payload)};
        sim_.loaded_[unit] = archive;
      }
      ConfigTree req;
      req.set("unit", unit);
      ConfigList l;
      for (double v : x) l.items.emplace_back(v);
      req.set("input", l);
      auto res = sim_.bridge_->call("PREDICT", frontend::print_inline(req));
      if (!res.ok) throw Abort{"BridgeFailure", fmt::format("PREDICT {}: {}", unit, res.payload)};
      auto parsed = frontend::parse_value(res.payload);
      const ConfigTree* tree = parsed.value ? parsed.value->get_if<ConfigTree>() : nullptr;
      const ConfigValue* output = tree ? tree->find("output") : nullptr;
      std::vector<double> out;
      if (output != nullptr) {
        if (auto num = output->as_number()) out.push_back(*num);
        if (const auto* list = output->get_if<ConfigList>())
          for (const auto& item : list->items) out.push_back(item.as_number().value_or(0));
      } else {
        throw Abort{"BridgeFailure", "PREDICT reply lacks 'output'"};
      }
      sim_.cache_[key] = out;
      return out;
    } catch (const support::BridgeError& e) {
      throw Abort{"BridgeFailure", e.what()};
    }
  }

  SimValue eval(const Expr& e, const Node& n, const std::map<std::string, SimValue>& locals) {
    switch (e.kind) {
      case Expr::Kind::int_lit: return make(e.int_value);
      case Expr::Kind::real_lit: return make(e.real_value);
      case Expr::Kind::bool_lit: return make(e.bool_value);
      case Expr::Kind::string_lit: return make(e.text);
      case Expr::Kind::name: {
        if (auto it = locals.find(e.text); it != locals.end()) return it->second;
        if (auto it = n.props.find(e.text); it != n.props.end()) return it->second;
        throw Abort{"RuntimeError", fmt::format("unknown name '{}'", e.text)};
      }
      case Expr::Kind::unary: {
        SimValue v = eval(e.operands.at(0), n, locals);
        if (e.text == "!") return make(!as_bool(v));
        if (const auto* i = std::get_if<std::int64_t>(&v.data)) return make(-*i);
        return make(-as_double(v));
      }
      case Expr::Kind::binary: break;
    }
    const std::string& op = e.text;
    if (op == "&&" || op == "||") {
      bool lhs = as_bool(eval(e.operands.at(0), n, locals));
      if (op == "&&" && !lhs) return make(false);
      if (op == "||" && lhs) return make(true);
      return make(as_bool(eval(e.operands.at(1), n, locals)));
    }
    SimValue a = eval(e.operands.at(0), n, locals);
    SimValue b = eval(e.operands.at(1), n, locals);
    if (op == "==" || op == "!=") {
      bool eq = is_number(a) && is_number(b) ? as_double(a) == as_double(b) : a.data == b.data;
      return make(op == "==" ? eq : !eq);
    }
    if (const auto* sa = std::get_if<std::string>(&a.data)) {
      const auto* sb = std::get_if<std::string>(&b.data);
      if (sb == nullptr) throw Abort{"RuntimeError", "string operand expected"};
      if (op == "+") return make(*sa + *sb);
      if (op == "<") return make(*sa < *sb);
      if (op == "<=") return make(*sa <= *sb);
      if (op == ">") return make(*sa > *sb);
      if (op == ">=") return make(*sa >= *sb);
      throw Abort{"RuntimeError", fmt::format("operator '{}' is not defined on strings", op)};
    }
    const auto* ia = std::get_if<std::int64_t>(&a.data);
    const auto* ib = std::get_if<std::int64_t>(&b.data);
    if (ia && ib) {
      if (op == "+") return make(*ia + *ib);
      if (op == "-") return make(*ia - *ib);
      if (op == "*") return make(*ia * *ib);
      if (op == "/" || op == "%") {
        if (*ib == 0) throw Abort{"RuntimeError", "integer division by zero"};
        return make(op == "/" ? *ia / *ib : *ia % *ib);
      }
    }
    double x = as_double(a), y = as_double(b);
    if (op == "+") return make(x + y);
    if (op == "-") return make(x - y);
    if (op == "*") return make(x * y);
    if (op == "/") return make(x / y);
    if (op == "%") return make(std::fmod(x, y));
    if (op == "<") return make(x < y);
    if (op == "<=") return make(x <= y);
    if (op == ">") return make(x > y);
    if (op == ">=") return make(x >= y);
    throw Abort{"RuntimeError", fmt::format("unsupported operator '{}'", op)};
  }

  Simulator& sim_;
  const ModelUnit& unit_;
  Scenario scenario_;
  std::map<std::string, Node> nodes_;
  std::vector<std::string> order_names_;
  std::map<std::pair<std::string, std::string>, std::vector<Route>> routes_;
  std::priority_queue<Delivery, std::vector<Delivery>, Later> queue_;
  std::vector<TraceEvent> trace_;
  std::uint64_t order_ = 0;
  std::uint64_t steps_ = 0;
  std::int64_t now_ = 0;
};

Simulator::Simulator(const ModelUnit& unit, support::BridgeClient* bridge) : unit_(unit), bridge_(bridge) {}

SimResult Simulator::run(const Scenario& scenario) {
  return Run(*this, scenario).execute();
}

SimResult run_scenario(const ModelUnit& unit, const Scenario& scenario, support::BridgeClient* bridge) {
  return Simulator(unit, bridge).run(scenario);
}

bool replay_determinism(const ModelUnit& unit, const Scenario& scenario, int n, support::BridgeClient* bridge) {
  if (n < 2) throw ModelError("InvalidArgument", "replay needs at least two runs");
  Simulator sim(unit, bridge);
  auto render = [](const SimResult& r) {
    std::string text = format_trace(r.trace);
    if (r.error) text += fmt::format("error\t{}\t{}\n", r.error->code, r.error->seq);
    return text;
  };
  const std::string first = render(sim.run(scenario));
  for (int i = 1; i < n; ++i)
    if (render(sim.run(scenario)) != first) return false;
  return true;
}

namespace {

const std::vector<std::string>& pattern_keys() {
  static const std::vector<std::string> keys{"kind", "thing", "state", "port", "message",
                                             "args", "action", "peer", "unit", "input"};
  return keys;
}

bool arg_matches(const SimValue& arg, const ConfigValue& want) {
  if (const auto* tok = want.get_if<Token>()) {
    if (tok->name == "true" || tok->name == "false") {
      const auto* b = std::get_if<bool>(&arg.data);
      return b && *b == (tok->name == "true");
    }
    return arg.tag == tok->name;
  }
  if (auto n = want.as_number()) {
    if (is_number(arg)) return as_double(arg) == *n;
    const auto* t = std::get_if<std::vector<double>>(&arg.data);
    return t && t->size() == 1 && (*t)[0] == *n;
  }
  if (const auto* b = want.get_if<bool>()) {
    const auto* a = std::get_if<bool>(&arg.data);
    return a && *a == *b;
  }
  if (const auto* str = want.get_if<std::string>()) {
    const auto* a = std::get_if<std::string>(&arg.data);
    return a && *a == *str;
  }
  if (const auto* list = want.get_if<ConfigList>()) {
    const auto* t = std::get_if<std::vector<double>>(&arg.data);
    if (t == nullptr || t->size() != list->items.size()) return false;
    for (std::size_t i = 0; i < t->size(); ++i)
      if (list->items[i].as_number() != (*t)[i]) return false;
    return true;
  }
  return false;
}

std::optional<std::string> invalid_pattern(const ConfigValue& v) {
  const auto* tree = v.get_if<ConfigTree>();
  if (tree == nullptr) return std::string("pattern must be a block");
  for (const auto& e : tree->entries) {
    if (std::find(pattern_keys().begin(), pattern_keys().end(), e.key) == pattern_keys().end())
      return fmt::format("unknown pattern key '{}'", e.key);
    if (e.key == "kind" && !parse_event_kind(e.value.as_text().value_or("")))
      return fmt::format("unknown event kind '{}'", e.value.as_text().value_or(""));
  }
  return std::nullopt;
}

std::string describe(const ConfigValue& v) { return frontend::print_value(v); }

}  // namespace

bool matches(const TraceEvent& e, const ConfigTree& pattern) {
  for (const auto& entry : pattern.entries) {
    const auto& key = entry.key;
    const ConfigValue& want = entry.value;
    if (key == "args") {
      const auto* list = want.get_if<ConfigList>();
      std::vector<ConfigValue> single{want};
      const auto& items = list ? list->items : single;
      if (items.size() != e.args.size()) return false;
      for (std::size_t i = 0; i < items.size(); ++i)
        if (!arg_matches(e.args[i], items[i])) return false;
      continue;
    }
    if (key == "input") {
      if (!arg_matches(e.input, want)) return false;
      continue;
    }
    auto text = want.as_text();
    if (!text) return false;
    if (key == "kind") {
      if (*text != to_string(e.kind)) return false;
    } else if (key == "action") {
      if (e.action != *text && e.action.rfind(*text + "(", 0) != 0) return false;
    } else {
      const std::string* field = key == "thing"     ? &e.thing
                                 : key == "state"   ? &e.state
                                 : key == "port"    ? &e.port
                                 : key == "message" ? &e.message
                                 : key == "peer"    ? &e.peer
                                 : key == "unit"    ? &e.unit
                                                    : nullptr;
      if (field == nullptr || *field != *text) return false;
    }
  }
  return true;
}

std::vector<AssertionResult> assert_trace(const std::vector<TraceEvent>& trace, const std::vector<ConfigTree>& assertions) {
  std::vector<AssertionResult> out;
  for (std::size_t i = 0; i < assertions.size(); ++i) {
    AssertionResult r;
    r.index = i;
    const ConfigTree& a = assertions[i];
    if (a.entries.size() != 1) {
      r.message = "an assertion has exactly one form";
      out.push_back(r);
      continue;
    }
    r.form = a.entries[0].key;
    const ConfigValue& body = a.entries[0].value;
    std::vector<ConfigValue> patterns;
    if (r.form == "eventually" || r.form == "never") {
      patterns.push_back(body);
    } else if (r.form == "order" || r.form == "next") {
      if (const auto* list = body.get_if<ConfigList>()) patterns = list->items;
      if (r.form == "next" && patterns.size() != 2) {
        r.message = "next takes exactly two patterns";
        out.push_back(r);
        continue;
      }
    } else {
      r.message = fmt::format("unknown assertion form '{}'", r.form);
      out.push_back(r);
      continue;
    }
    std::optional<std::string> bad;
    for (const auto& p : patterns)
      if (!bad) bad = invalid_pattern(p);
    if (patterns.empty()) bad = "no patterns given";
    if (bad) {
      r.message = *bad;
      out.push_back(r);
      continue;
    }
    auto first_match = [&](const ConfigTree& p, std::size_t from) -> std::optional<std::size_t> {
      for (std::size_t k = from; k < trace.size(); ++k)
        if (matches(trace[k], p)) return k;
      return std::nullopt;
    };
    if (r.form == "eventually") {
      auto k = first_match(*patterns[0].get_if<ConfigTree>(), 0);
      r.passed = k.has_value();
      if (k) r.position = trace[*k].seq;
      r.message = r.passed ? "matched" : fmt::format("no event matches {}", describe(patterns[0]));
    } else if (r.form == "never") {
      auto k = first_match(*patterns[0].get_if<ConfigTree>(), 0);
      r.passed = !k.has_value();
      if (k) {
        r.position = trace[*k].seq;
        r.message = fmt::format("event {} matches {}", trace[*k].seq, describe(patterns[0]));
      } else {
        r.message = "no match";
      }
    } else if (r.form == "order") {
      r.passed = true;
      std::optional<std::size_t> prev;
      for (const auto& p : patterns) {
        auto k = first_match(*p.get_if<ConfigTree>(), 0);
        if (!k) {
          r.passed = false;
          r.message = fmt::format("no event matches {}", describe(p));
          break;
        }
        if (prev && *k <= *prev) {
          r.passed = false;
          r.position = trace[*k].seq;
          r.message = fmt::format("{} first occurs at {}, before the preceding pattern", describe(p), trace[*k].seq);
          break;
        }
        prev = k;
        r.position = trace[*k].seq;
      }
      if (r.passed) r.message = "in order";
    } else {
      const ConfigTree& pa = *patterns[0].get_if<ConfigTree>();
      const ConfigTree& pb = *patterns[1].get_if<ConfigTree>();
      std::optional<EventKind> kind_b;
      if (const auto* k = pb.find("kind")) kind_b = parse_event_kind(k->as_text().value_or(""));
      r.passed = true;
      std::size_t seen = 0;
      for (std::size_t k = 0; k < trace.size() && r.passed; ++k) {
        if (!matches(trace[k], pa)) continue;
        ++seen;
        std::optional<std::size_t> next;
        for (std::size_t j = k + 1; j < trace.size(); ++j) {
          if (trace[j].thing != trace[k].thing) continue;
          if (kind_b && trace[j].kind != *kind_b) continue;
          next = j;
          break;
        }
        if (!next || !matches(trace[*next], pb)) {
          r.passed = false;
          r.position = trace[next.value_or(k)].seq;
          r.message = next ? fmt::format("event {} after {} does not match {}", trace[*next].seq, trace[k].seq, describe(patterns[1]))
                           : fmt::format("nothing follows event {}", trace[k].seq);
        }
      }
      if (r.passed && seen == 0) {
        r.passed = false;
        r.message = fmt::format("no event matches {}", describe(patterns[0]));
      } else if (r.passed) {
        r.message = fmt::format("{} occurrence(s) checked", seen);
      }
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace mlc::simulator
