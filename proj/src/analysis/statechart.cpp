#include "mlcforge/analysis/statechart.hpp"

#include <deque>
#include <set>

#include <fmt/format.h>

namespace mlc::analysis {

const char* to_string(ExprType t) {
  switch (t) {
    case ExprType::integer: return "int";
    case ExprType::real: return "real";
    case ExprType::boolean: return "bool";
    case ExprType::string: return "string";
    case ExprType::tensor: return "tensor";
    case ExprType::unknown: return "unknown";
  }
  return "unknown";
}

ExprType type_of(const ValueType& t) {
  if (const auto* tensor = t.tensor()) {
    bool scalar = tensor->dims.size() == 1 && tensor->dims[0].concrete() && tensor->dims[0].extent() == 1;
    if (!scalar) return ExprType::tensor;
    return tensor->range.kind == ElementKind::integer ? ExprType::integer : ExprType::real;
  }
  switch (std::get<PrimitiveType>(t.type)) {
    case PrimitiveType::integer: return ExprType::integer;
    case PrimitiveType::real: return ExprType::real;
    case PrimitiveType::boolean: return ExprType::boolean;
    case PrimitiveType::string: return ExprType::string;
  }
  return ExprType::unknown;
}

namespace {

bool numeric(ExprType t) { return t == ExprType::integer || t == ExprType::real; }

}  // namespace

ExprType check_expr(const Expr& e, const Scope& scope, Diagnostics& diags) {
  auto type_error = [&](std::string msg) {
    diags.push_back(make_error("TypeError", std::move(msg), e.span));
    return ExprType::unknown;
  };
  switch (e.kind) {
    case Expr::Kind::int_lit: return ExprType::integer;
    case Expr::Kind::real_lit: return ExprType::real;
    case Expr::Kind::bool_lit: return ExprType::boolean;
    case Expr::Kind::string_lit: return ExprType::string;
    case Expr::Kind::name: {
      auto it = scope.find(e.text);
      if (it == scope.end()) {
        diags.push_back(make_error("UnknownName", fmt::format("unknown name '{}'", e.text), e.span));
        return ExprType::unknown;
      }
      return it->second;
    }
    case Expr::Kind::unary: {
      ExprType t = check_expr(e.operands.at(0), scope, diags);
      if (t == ExprType::unknown) return t;
      if (e.text == "!") return t == ExprType::boolean ? t : type_error(fmt::format("'!' needs bool, found {}", to_string(t)));
      return numeric(t) ? t : type_error(fmt::format("unary '-' needs a number, found {}", to_string(t)));
    }
    case Expr::Kind::binary: {
      ExprType l = check_expr(e.operands.at(0), scope, diags);
      ExprType r = check_expr(e.operands.at(1), scope, diags);
      if (l == ExprType::unknown || r == ExprType::unknown) return ExprType::unknown;
      const std::string& op = e.text;
      auto mismatch = [&] {
        return type_error(fmt::format("operator '{}' cannot combine {} and {}", op, to_string(l), to_string(r)));
      };
      if (op == "&&" || op == "||") return l == ExprType::boolean && r == ExprType::boolean ? ExprType::boolean : mismatch();
      if (op == "==" || op == "!=") {
        bool ok = (numeric(l) && numeric(r)) || (l == r && l != ExprType::tensor);
        return ok ? ExprType::boolean : mismatch();
      }
      if (op == "<" || op == "<=" || op == ">" || op == ">=")
        return numeric(l) && numeric(r) ? ExprType::boolean : mismatch();
      if (op == "+" && l == ExprType::string && r == ExprType::string) return ExprType::string;
      if (!numeric(l) || !numeric(r)) return mismatch();
      if (op == "%" && (l != ExprType::integer || r != ExprType::integer)) return mismatch();
      return l == ExprType::real || r == ExprType::real ? ExprType::real : ExprType::integer;
    }
  }
  return ExprType::unknown;
}

namespace {

const Expr& strip_not(const Expr& e, bool& negated) {
  const Expr* cur = &e;
  negated = false;
  while (cur->kind == Expr::Kind::unary && cur->text == "!") {
    negated = !negated;
    cur = &cur->operands[0];
  }
  return *cur;
}

bool is_literal(const Expr& e) {
  return e.kind == Expr::Kind::int_lit || e.kind == Expr::Kind::real_lit || e.kind == Expr::Kind::bool_lit ||
         e.kind == Expr::Kind::string_lit;
}

/// `x == lit` or `lit == x` as (name, literal).
std::optional<std::pair<std::string, const Expr*>> equality(const Expr& e) {
  if (e.kind != Expr::Kind::binary || e.text != "==") return std::nullopt;
  const Expr& l = e.operands[0];
  const Expr& r = e.operands[1];
  if (l.kind == Expr::Kind::name && is_literal(r)) return std::make_pair(l.text, &r);
  if (r.kind == Expr::Kind::name && is_literal(l)) return std::make_pair(r.text, &l);
  return std::nullopt;
}

}  // namespace

bool guards_exclusive(const Expr& a, const Expr& b) {
  bool na = false, nb = false;
  const Expr& ca = strip_not(a, na);
  const Expr& cb = strip_not(b, nb);
  if (na != nb && ca == cb) return true;
  if (na || nb) return false;
  auto ea = equality(ca);
  auto eb = equality(cb);
  return ea && eb && ea->first == eb->first && !(*ea->second == *eb->second) && ea->second->kind == eb->second->kind;
}

Diagnostics check_statechart(const ThingDef& thing) {
  Diagnostics d;
  const StateMachine& sm = thing.statechart;

  std::size_t initials = 0;
  for (const auto& s : sm.states) initials += s.initial ? 1 : 0;
  if (sm.states.empty()) {
    d.push_back(make_error("MissingInitial", fmt::format("statechart of '{}' declares no states", thing.name), sm.span));
  } else if (initials == 0) {
    d.push_back(make_error("MissingInitial", fmt::format("statechart of '{}' has no initial state", thing.name), sm.span));
  } else if (initials > 1) {
    d.push_back(make_error("MultipleInitial", fmt::format("statechart of '{}' has {} initial states", thing.name, initials), sm.span));
  }

  Scope props;
  for (const auto& p : thing.properties) {
    props[p.name] = type_of(p.type);
    if (p.init) {
      ExprType t = check_expr(*p.init, {}, d);
      ExprType want = props[p.name];
      if (t != ExprType::unknown && t != want && !(want == ExprType::real && t == ExprType::integer))
        d.push_back(make_error("TypeError", fmt::format("property '{}' of type {} initialized with {}", p.name,
                                                        to_string(want), to_string(t)), p.span));
    }
  }

  for (const auto& state : sm.states) {
    std::size_t autos = 0;
    for (const auto& tr : state.transitions) {
      Scope scope = props;
      if (tr.target && !sm.state(*tr.target))
        d.push_back(make_error("UnknownState", fmt::format("transition targets unknown state '{}'", *tr.target), tr.span));
      if (!tr.trigger) {
        ++autos;
      } else {
        const Trigger& trig = *tr.trigger;
        const ThingPort* port = thing.port(trig.port);
        const MessageDef* msg = thing.message(trig.message);
        if (port == nullptr || port->direction == Direction::out) {
          d.push_back(make_error("UnknownMessage",
                                 fmt::format("'{}' is not an input port of '{}'", trig.port, thing.name), trig.span));
        } else if (msg == nullptr ||
                   std::find(port->messages.begin(), port->messages.end(), trig.message) == port->messages.end()) {
          d.push_back(make_error("UnknownMessage",
                                 fmt::format("port '{}' does not carry message '{}'", trig.port, trig.message), trig.span));
        } else if (!trig.params.empty() && trig.params.size() != msg->params.size()) {
          d.push_back(make_error("UnknownMessage",
                                 fmt::format("message '{}' has {} parameters, trigger binds {}", msg->name,
                                             msg->params.size(), trig.params.size()), trig.span));
        } else {
          for (std::size_t i = 0; i < trig.params.size(); ++i) scope[trig.params[i]] = type_of(msg->params[i].type);
        }
      }
      if (tr.guard) {
        Diagnostics gd;
        ExprType t = check_expr(*tr.guard, scope, gd);
        for (auto& g : gd) g.code = g.code == "UnknownName" ? g.code : "GuardTypeError";
        append(d, std::move(gd));
        if (t != ExprType::boolean && t != ExprType::unknown)
          d.push_back(make_error("GuardTypeError", fmt::format("guard has type {}, expected bool", to_string(t)),
                                 tr.guard->span));
      }
      for (const auto& action : tr.actions) {
        if (action.is_ml() && !thing.ml) {
          d.push_back(make_error("MlActionWithoutMlBlock",
                                 fmt::format("ML action in thing '{}' which has no ml block", thing.name), action.span));
          continue;
        }
        if (const auto* send = std::get_if<SendAction>(&action.kind)) {
          const ThingPort* port = thing.port(send->port);
          const MessageDef* msg = thing.message(send->message);
          if (port == nullptr || port->direction == Direction::in) {
            d.push_back(make_error("UnknownMessage",
                                   fmt::format("'{}' is not an output port of '{}'", send->port, thing.name), action.span));
          } else if (msg == nullptr ||
                     std::find(port->messages.begin(), port->messages.end(), send->message) == port->messages.end()) {
            d.push_back(make_error("UnknownMessage",
                                   fmt::format("port '{}' does not carry message '{}'", send->port, send->message),
                                   action.span));
          } else if (msg->params.size() != send->args.size()) {
            d.push_back(make_error("UnknownMessage",
                                   fmt::format("message '{}' takes {} arguments, {} given", msg->name,
                                               msg->params.size(), send->args.size()), action.span));
          } else {
            for (std::size_t i = 0; i < send->args.size(); ++i) {
              ExprType got = check_expr(send->args[i], scope, d);
              ExprType want = type_of(msg->params[i].type);
              if (got != ExprType::unknown && got != want && !(want == ExprType::real && got == ExprType::integer))
                d.push_back(make_error("TypeError",
                                       fmt::format("argument {} of '{}' has type {}, expected {}", i + 1, msg->name,
                                                   to_string(got), to_string(want)), send->args[i].span));
            }
          }
        } else if (const auto* pred = std::get_if<PredictAction>(&action.kind)) {
          for (const auto& in : pred->inputs) check_expr(in, scope, d);
          if (!props.count(pred->result))
            d.push_back(make_error("UnknownProperty", fmt::format("unknown result property '{}'", pred->result), action.span));
        } else if (const auto* as = std::get_if<AssignAction>(&action.kind)) {
          ExprType got = check_expr(as->value, scope, d);
          auto it = props.find(as->target);
          if (it == props.end()) {
            d.push_back(make_error("UnknownProperty", fmt::format("unknown property '{}'", as->target), action.span));
          } else if (got != ExprType::unknown && got != it->second &&
                     !(it->second == ExprType::real && got == ExprType::integer)) {
            d.push_back(make_error("TypeError", fmt::format("cannot assign {} to property '{}' of type {}",
                                                            to_string(got), as->target, to_string(it->second)),
                                   action.span));
          }
        }
      }
    }
    if (autos > 1)
      d.push_back(make_error("NondeterministicChoice",
                             fmt::format("state '{}' has {} triggerless transitions", state.name, autos), state.span));
    // Transitions sharing a trigger must be provably exclusive.
    for (std::size_t i = 0; i < state.transitions.size(); ++i) {
      const auto& a = state.transitions[i];
      if (!a.trigger) continue;
      for (std::size_t j = i + 1; j < state.transitions.size(); ++j) {
        const auto& b = state.transitions[j];
        if (!b.trigger || a.trigger->port != b.trigger->port || a.trigger->message != b.trigger->message) continue;
        bool exclusive = a.guard && b.guard && a.trigger->params == b.trigger->params && guards_exclusive(*a.guard, *b.guard);
        if (!exclusive)
          d.push_back(make_error("NondeterministicChoice",
                                 fmt::format("state '{}' has overlapping transitions on {}?{}", state.name,
                                             a.trigger->port, a.trigger->message), b.span));
      }
    }
  }

  // Reachability from the initial state.
  if (const State* init = sm.initial_state()) {
    std::set<std::string> seen{init->name};
    std::deque<const State*> work{init};
    while (!work.empty()) {
      const State* s = work.front();
      work.pop_front();
      for (const auto& tr : s->transitions) {
        if (!tr.target || seen.count(*tr.target)) continue;
        if (const State* t = sm.state(*tr.target)) {
          seen.insert(t->name);
          work.push_back(t);
        }
      }
    }
    for (const auto& s : sm.states)
      if (!seen.count(s.name))
        d.push_back(make_warning("Unreachable", fmt::format("state '{}' is unreachable from '{}'", s.name, init->name), s.span));
  }
  return d;
}

}  // namespace mlc::analysis
