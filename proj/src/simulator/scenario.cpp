#include "mlcforge/simulator/scenario.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/frontend/project.hpp"

namespace mlc::simulator {

std::string format_value(const SimValue& v) {
  if (!v.tag.empty()) return "@" + v.tag;
  if (const auto* i = std::get_if<std::int64_t>(&v.data)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v.data)) return frontend::format_real(*d);
  if (const auto* b = std::get_if<bool>(&v.data)) return *b ? "true" : "false";
  if (const auto* s = std::get_if<std::string>(&v.data)) return frontend::quote(*s);
  const auto& t = std::get<std::vector<double>>(v.data);
  std::string out = "(";
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? ", " : "") + frontend::format_number(t[i]);
  return out + ")";
}

std::string format_args(const std::vector<SimValue>& args) {
  std::string out = "(";
  for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ", " : "") + format_value(args[i]);
  return out + ")";
}

namespace {

class Reader {
 public:
  Reader(Diagnostics& diags) : diags_(diags) {}

  void error(const std::string& code, const std::string& message, const SourceSpan& span) {
    diags_.push_back(make_error(code, message, span));
  }

  std::optional<std::vector<double>> numbers(const ConfigValue& v) {
    std::vector<double> out;
    if (auto n = v.as_number()) return std::vector<double>{*n};
    if (const auto* l = v.get_if<ConfigList>()) {
      for (const auto& item : l->items) {
        auto inner = numbers(item);
        if (!inner) return std::nullopt;
        out.insert(out.end(), inner->begin(), inner->end());
      }
      return out;
    }
    return std::nullopt;
  }

  std::optional<SimValue> arg(const ConfigValue& v, const std::map<std::string, std::vector<double>>& inputs) {
    SimValue out;
    if (const auto* t = v.get_if<Token>()) {
      auto it = inputs.find(t->name);
      if (it == inputs.end()) {
        error("UnknownInput", fmt::format("'{}' is not declared in inputs", t->name), v.span);
        return std::nullopt;
      }
      out.data = it->second;
      out.tag = t->name;
    } else if (const auto* i = v.get_if<std::int64_t>()) {
      out.data = *i;
    } else if (const auto* d = v.get_if<double>()) {
      out.data = *d;
    } else if (const auto* b = v.get_if<bool>()) {
      out.data = *b;
    } else if (const auto* s = v.get_if<std::string>()) {
      out.data = *s;
    } else if (auto n = numbers(v)) {
      out.data = *n;
    } else {
      error("TypeError", "unsupported argument value", v.span);
      return std::nullopt;
    }
    return out;
  }

 private:
  Diagnostics& diags_;
};

std::string text_of(const ConfigTree& t, const char* key) {
  const auto* v = t.find(key);
  return v && v->as_text() ? *v->as_text() : std::string{};
}

}  // namespace

ScenarioResult parse_scenario(std::string_view text, const std::string& file) {
  ScenarioResult result;
  auto parsed = frontend::parse_config(text, file);
  for (auto& d : parsed.diagnostics) {
    if (d.severity == Severity::error) d.code = "ScenarioSyntax";
    result.diagnostics.push_back(std::move(d));
  }
  if (!parsed.tree) return result;
  const ConfigTree& root = *parsed.tree;
  Reader r(result.diagnostics);
  Scenario s;

  static const char* kKeys[] = {"name", "seed", "pipeline", "step_limit", "inputs", "events", "predictors",
                                "connectors", "assertions"};
  for (const auto& e : root.entries) {
    if (std::find(std::begin(kKeys), std::end(kKeys), e.key) == std::end(kKeys))
      r.error("UnknownKey", fmt::format("unknown scenario key '{}'", e.key), e.key_span);
  }
  s.name = text_of(root, "name");
  s.pipeline = text_of(root, "pipeline");
  if (const auto* v = root.find("seed")) {
    if (auto i = v->as_int(); i && *i >= 0) s.seed = static_cast<std::uint64_t>(*i);
    else r.error("TypeError", "seed must be a non-negative integer", v->span);
  }
  if (const auto* v = root.find("step_limit")) {
    if (auto i = v->as_int(); i && *i > 0) s.step_limit = static_cast<std::uint64_t>(*i);
    else r.error("TypeError", "step_limit must be a positive integer", v->span);
  }
  if (const auto* v = root.find("inputs")) {
    if (const auto* t = v->get_if<ConfigTree>()) {
      for (const auto& e : t->entries) {
        if (auto n = r.numbers(e.value)) s.inputs[e.key] = *n;
        else r.error("TypeError", fmt::format("input '{}' must be numeric", e.key), e.value.span);
      }
    } else {
      r.error("TypeError", "inputs must be a block", v->span);
    }
  }
  if (const auto* v = root.find("events")) {
    const auto* list = v->get_if<ConfigList>();
    if (list == nullptr) r.error("TypeError", "events must be a list", v->span);
    std::int64_t last = 0;
    for (const auto& item : list ? list->items : std::vector<ConfigValue>{}) {
      const auto* t = item.get_if<ConfigTree>();
      if (t == nullptr) {
        r.error("TypeError", "each event must be a block", item.span);
        continue;
      }
      InjectedEvent ev;
      if (const auto* time = t->find("time")) ev.time = time->as_int().value_or(-1);
      if (ev.time < 0) r.error("TypeError", "event time must be a non-negative integer", item.span);
      if (ev.time < last) r.error("TimeOrder", "event times must be non-decreasing", item.span);
      last = std::max(last, ev.time);
      ev.thing = text_of(*t, "thing");
      ev.port = text_of(*t, "port");
      ev.message = text_of(*t, "message");
      if (ev.thing.empty() || ev.port.empty()) r.error("TypeError", "events need 'thing' and 'port'", item.span);
      if (const auto* args = t->find("args")) {
        if (const auto* l = args->get_if<ConfigList>()) {
          for (const auto& a : l->items)
            if (auto sv = r.arg(a, s.inputs)) ev.args.push_back(*sv);
        } else if (auto sv = r.arg(*args, s.inputs)) {
          ev.args.push_back(*sv);
        }
      }
      s.events.push_back(std::move(ev));
    }
  }
  if (const auto* v = root.find("predictors")) {
    const auto* t = v->get_if<ConfigTree>();
    if (t == nullptr) r.error("TypeError", "predictors must be a block", v->span);
    for (const auto& e : t ? t->entries : std::vector<ConfigEntry>{}) {
      PredictorBinding b;
      if (auto word = e.value.as_text()) {
        if (*word == "trained") b.kind = PredictorBinding::Kind::trained;
        else r.error("TypeError", fmt::format("unknown predictor '{}'", *word), e.value.span);
      } else if (const auto* body = e.value.get_if<ConfigTree>()) {
        if (const auto* oracle = body->find("oracle")) {
          const auto* table = oracle->get_if<ConfigTree>();
          if (table == nullptr) r.error("TypeError", "oracle must be a block", oracle->span);
          for (const auto& row : table ? table->entries : std::vector<ConfigEntry>{}) {
            if (row.key != "default" && !s.inputs.count(row.key))
              r.error("UnknownInput", fmt::format("'{}' is not declared in inputs", row.key), row.key_span);
            if (auto n = r.numbers(row.value)) b.table[row.key] = *n;
            else r.error("TypeError", "oracle outputs must be numeric", row.value.span);
          }
        } else if (const auto* trained = body->find("trained")) {
          b.kind = PredictorBinding::Kind::trained;
          if (const auto* tt = trained->get_if<ConfigTree>()) b.archive = text_of(*tt, "archive");
        } else {
          r.error("TypeError", fmt::format("predictor '{}' needs 'oracle' or 'trained'", e.key), e.value.span);
        }
      } else {
        r.error("TypeError", fmt::format("predictor '{}' needs 'oracle' or 'trained'", e.key), e.value.span);
      }
      s.predictors[e.key] = std::move(b);
    }
  }
  if (const auto* v = root.find("connectors")) {
    const auto* list = v->get_if<ConfigList>();
    if (list == nullptr) r.error("TypeError", "connectors must be a list", v->span);
    for (const auto& item : list ? list->items : std::vector<ConfigValue>{}) {
      const auto* t = item.get_if<ConfigTree>();
      if (t == nullptr) {
        r.error("TypeError", "each connector must be a block", item.span);
        continue;
      }
      ConnectorOverride c{text_of(*t, "from"), text_of(*t, "to"), 1};
      if (const auto* l = t->find("latency")) c.latency = l->as_int().value_or(-1);
      if (c.latency < 0) r.error("TypeError", "latency must be a non-negative integer", item.span);
      s.connectors.push_back(std::move(c));
    }
  }
  if (const auto* v = root.find("assertions")) {
    const auto* list = v->get_if<ConfigList>();
    if (list == nullptr) r.error("TypeError", "assertions must be a list", v->span);
    for (const auto& item : list ? list->items : std::vector<ConfigValue>{}) {
      const auto* t = item.get_if<ConfigTree>();
      if (t == nullptr || t->entries.size() != 1) {
        r.error("TypeError", "each assertion must be a block with one form", item.span);
        continue;
      }
      s.assertions.push_back(*t);
    }
  }
  if (!has_errors(result.diagnostics)) result.scenario = std::move(s);
  return result;
}

ScenarioResult load_scenario(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    ScenarioResult r;
    r.diagnostics.push_back(make_error("ScenarioSyntax", fmt::format("cannot read '{}'", path.string())));
    return r;
  }
  return parse_scenario(frontend::read_source(path), path.generic_string());
}

}  // namespace mlc::simulator
