#include "mlcforge/core/schema.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "mlcforge/core/error.hpp"

namespace mlc {

const char* to_string(EntryType t) {
  switch (t) {
    case EntryType::integer: return "int";
    case EntryType::real: return "real";
    case EntryType::boolean: return "bool";
    case EntryType::string: return "string";
    case EntryType::token: return "token";
    case EntryType::int_list: return "int list";
    case EntryType::real_list: return "real list";
    case EntryType::token_list: return "token list";
    case EntryType::tree: return "nested block";
  }
  return "?";
}

namespace {

SchemaEntry entry(std::string key, EntryType type, std::optional<ConfigValue> def = std::nullopt) {
  SchemaEntry e;
  e.key = std::move(key);
  e.type = type;
  e.default_value = std::move(def);
  return e;
}

SchemaEntry ranged(SchemaEntry e, std::optional<Bound> lo, std::optional<Bound> hi) {
  e.min = lo;
  e.max = hi;
  return e;
}

SchemaEntry choice(SchemaEntry e, std::vector<std::string> allowed) {
  e.allowed = std::move(allowed);
  return e;
}

ConfigValue token_list(std::vector<std::string> names) {
  ConfigList list;
  for (auto& n : names) list.items.emplace_back(Token{std::move(n)});
  return ConfigValue(std::move(list));
}

SchemaRegistry make_builtin() {
  SchemaRegistry r;
  const Bound zero_incl{0, true};
  const Bound zero_excl{0, false};
  const Bound one_incl{1, true};
  const Bound one_excl{1, false};

  r.add({"trainer",
         std::nullopt,
         {
             ranged(entry("num_epoch", EntryType::integer, std::int64_t{10}), zero_incl, std::nullopt),
             ranged(entry("batch_size", EntryType::integer, std::int64_t{32}), one_incl, std::nullopt),
             entry("shuffle", EntryType::boolean, true),
             ranged(entry("seed", EntryType::integer, std::int64_t{42}), zero_incl, std::nullopt),
             choice(entry("loss", EntryType::token), {"categorical_crossentropy", "mse"}),
             ranged(entry("dropout", EntryType::real), zero_incl, one_incl),
             choice(entry("scaling", EntryType::token, Token{"none"}), {"none", "standardize", "normalize"}),
         }});
  r.add({"optimizer",
         std::nullopt,
         {
             choice(entry("type", EntryType::token, Token{"adam"}), {"sgd", "adam"}),
             ranged(entry("learning_rate", EntryType::real, 0.001), zero_excl, std::nullopt),
             ranged(entry("beta1", EntryType::real, 0.9), zero_incl, one_excl),
             ranged(entry("beta2", EntryType::real, 0.999), zero_incl, one_excl),
             ranged(entry("epsilon", EntryType::real, 1e-8), zero_excl, std::nullopt),
         }});
  {
    SchemaEntry opt = entry("optimizer", EntryType::tree);
    opt.nested = "optimizer";
    r.add({"supervised", "trainer", {opt}});
  }
  auto flat_optimizer = [&](const char* default_kind, double lr) {
    return std::vector<SchemaEntry>{
        choice(entry("optimizer", EntryType::token, Token{default_kind}), {"sgd", "adam"}),
        ranged(entry("learning_rate", EntryType::real, lr), zero_excl, std::nullopt),
    };
  };
  {
    auto entries = flat_optimizer("adam", 0.001);
    entries.push_back(ranged(entry("hidden_layer_sizes", EntryType::int_list, int_list({100})),
                             one_incl, std::nullopt));
    entries.push_back(choice(entry("hidden_layers_activation_functions", EntryType::token_list,
                                   token_list({"relu"})),
                             {"relu", "sigmoid", "tanh", "identity"}));
    r.add({"mlp", "trainer", std::move(entries)});
  }
  r.add({"linear_regression", "trainer", flat_optimizer("sgd", 0.01)});
  r.add({"logistic_regression", "trainer", flat_optimizer("sgd", 0.01)});
  return r;
}

bool narrower_or_equal(const std::optional<Bound>& child, const std::optional<Bound>& parent,
                       bool is_min) {
  if (!parent) return true;
  if (!child) return false;
  if (child->value == parent->value) return parent->inclusive || !child->inclusive;
  return is_min ? child->value > parent->value : child->value < parent->value;
}

}  // namespace

const SchemaRegistry& SchemaRegistry::builtin() {
  static const SchemaRegistry registry = make_builtin();
  return registry;
}

void SchemaRegistry::add(ConfigSchema schema) {
  std::set<std::string> keys;
  for (const auto& e : schema.entries) {
    if (!keys.insert(e.key).second)
      throw ModelError("SchemaConflict", fmt::format("schema '{}' declares '{}' twice", schema.name, e.key));
  }
  if (schema.parent) {
    // Walk the chain: it must exist and must not lead back to this schema.
    std::set<std::string> seen{schema.name};
    for (std::optional<std::string> p = schema.parent; p;) {
      if (!seen.insert(*p).second)
        throw ModelError("CyclicSchema", fmt::format("schema '{}' inherits from itself", schema.name));
      const ConfigSchema* ps = find(*p);
      if (ps == nullptr)
        throw ModelError("UnknownParentSchema",
                         fmt::format("schema '{}' extends unknown schema '{}'", schema.name, *p));
      p = ps->parent;
    }
    for (const auto& inherited : effective_entries(*schema.parent)) {
      auto it = std::find_if(schema.entries.begin(), schema.entries.end(),
                             [&](const SchemaEntry& e) { return e.key == inherited.key; });
      if (it == schema.entries.end()) continue;
      auto conflict = [&](const std::string& why) {
        throw ModelError("SchemaConflict",
                         fmt::format("schema '{}' contradicts '{}' on '{}': {}", schema.name,
                                     *schema.parent, it->key, why));
      };
      if (it->type != inherited.type) conflict("type changed");
      if (inherited.required && !it->required) conflict("required entry made optional");
      if (!narrower_or_equal(it->min, inherited.min, true)) conflict("lower bound widened");
      if (!narrower_or_equal(it->max, inherited.max, false)) conflict("upper bound widened");
      if (!inherited.allowed.empty()) {
        if (it->allowed.empty()) conflict("choices widened");
        for (const auto& a : it->allowed) {
          if (std::find(inherited.allowed.begin(), inherited.allowed.end(), a) == inherited.allowed.end())
            conflict("choice '" + a + "' not allowed by parent");
        }
      }
      if (it->nested != inherited.nested) conflict("nested schema changed");
    }
  }
  auto name = schema.name;
  schemas_[name] = std::move(schema);
}

const ConfigSchema* SchemaRegistry::find(const std::string& name) const {
  auto it = schemas_.find(name);
  return it == schemas_.end() ? nullptr : &it->second;
}

std::vector<SchemaEntry> SchemaRegistry::effective_entries(const std::string& name) const {
  const ConfigSchema* s = find(name);
  if (s == nullptr) return {};
  std::vector<SchemaEntry> out = s->parent ? effective_entries(*s->parent) : std::vector<SchemaEntry>{};
  for (const auto& e : s->entries) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SchemaEntry& x) { return x.key == e.key; });
    if (it != out.end())
      *it = e;
    else
      out.push_back(e);
  }
  return out;
}

std::vector<std::string> SchemaRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : schemas_) out.push_back(n);
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_score = std::numeric_limits<std::size_t>::max();
  std::size_t best_full = best_score;
  for (const auto& c : candidates) {
    std::size_t full = edit_distance(key, c);
    std::size_t score = full;
    std::size_t start = 0;
    while (start <= c.size()) {
      auto end = c.find('_', start);
      if (end == std::string::npos) end = c.size();
      if (end > start) score = std::min(score, edit_distance(key, c.substr(start, end - start)));
      start = end + 1;
    }
    if (score < best_score || (score == best_score && full < best_full)) {
      best = c;
      best_score = score;
      best_full = full;
    }
  }
  // Accept at most roughly half the key length in edits.
  if (best_score > std::max<std::size_t>(2, key.size() / 2)) return {};
  return best;
}

namespace {

class Validator {
 public:
  explicit Validator(const SchemaRegistry& registry) : registry_(registry) {}

  ConfigTree run(const ConfigTree& config, const std::string& schema, const std::string& path) {
    ConfigTree effective = config;
    auto entries = registry_.effective_entries(schema);
    std::vector<std::string> known;
    for (const auto& e : entries) known.push_back(e.key);

    for (auto& item : effective.entries) {
      auto it = std::find_if(entries.begin(), entries.end(),
                             [&](const SchemaEntry& e) { return e.key == item.key; });
      if (it == entries.end()) {
        auto d = make_error("UnknownKey", fmt::format("unknown key '{}{}'", path, item.key), item.key_span);
        if (auto near = nearest_key(item.key, known); !near.empty()) {
          d.message += fmt::format("; did you mean '{}'?", near);
          d.hint = near;
        }
        diags_.push_back(std::move(d));
        continue;
      }
      check_value(*it, item.value, path + item.key);
    }

    for (const auto& e : entries) {
      if (effective.contains(e.key)) continue;
      if (e.required) {
        diags_.push_back(make_error("MissingKey", fmt::format("required key '{}{}' is missing", path, e.key),
                                    config.entries.empty() ? SourceSpan{} : config.entries.front().key_span));
        continue;
      }
      if (e.default_value) {
        effective.entries.push_back(ConfigEntry{e.key, *e.default_value, {}});
      } else if (e.type == EntryType::tree && !e.nested.empty()) {
        ConfigTree nested = Validator(registry_).run(ConfigTree{}, e.nested, path + e.key + ".");
        if (!nested.empty()) effective.entries.push_back(ConfigEntry{e.key, ConfigValue(std::move(nested)), {}});
      }
    }
    return effective;
  }

  Diagnostics take() { return std::move(diags_); }

 private:
  void type_error(const std::string& key, const SchemaEntry& e, const ConfigValue& v) {
    diags_.push_back(make_error("TypeError", fmt::format("'{}' expects {}", key, to_string(e.type)), v.span));
  }

  void check_range(const std::string& key, const SchemaEntry& e, double x, const SourceSpan& span) {
    bool ok = true;
    if (e.min) ok = ok && (e.min->inclusive ? x >= e.min->value : x > e.min->value);
    if (e.max) ok = ok && (e.max->inclusive ? x <= e.max->value : x < e.max->value);
    if (ok) return;
    std::string lo = e.min ? fmt::format("{}{}", e.min->inclusive ? "[" : "(", e.min->value) : "(-inf";
    std::string hi = e.max ? fmt::format("{}{}", e.max->value, e.max->inclusive ? "]" : ")") : "inf)";
    diags_.push_back(make_error("RangeError", fmt::format("'{}' = {} is outside {}, {}", key, x, lo, hi), span));
  }

  void check_token(const std::string& key, const SchemaEntry& e, const std::string& t, const SourceSpan& span) {
    if (e.allowed.empty() || std::find(e.allowed.begin(), e.allowed.end(), t) != e.allowed.end()) return;
    std::string options;
    for (const auto& a : e.allowed) options += (options.empty() ? "" : ", ") + a;
    diags_.push_back(make_error("InvalidChoice", fmt::format("'{}' = {} is not one of {}", key, t, options), span));
  }

  void check_scalar(const std::string& key, const SchemaEntry& e, EntryType type, const ConfigValue& v) {
    switch (type) {
      case EntryType::integer:
        if (auto i = v.as_int()) check_range(key, e, static_cast<double>(*i), v.span);
        else type_error(key, e, v);
        break;
      case EntryType::real:
        if (auto x = v.as_number()) check_range(key, e, *x, v.span);
        else type_error(key, e, v);
        break;
      case EntryType::boolean:
        if (!v.is<bool>()) type_error(key, e, v);
        break;
      case EntryType::string:
        if (!v.is<std::string>()) type_error(key, e, v);
        break;
      case EntryType::token:
        if (auto t = v.as_text()) check_token(key, e, *t, v.span);
        else type_error(key, e, v);
        break;
      default:
        break;
    }
  }

  void check_value(const SchemaEntry& e, const ConfigValue& v, const std::string& key) {
    switch (e.type) {
      case EntryType::int_list:
      case EntryType::real_list:
      case EntryType::token_list: {
        EntryType item = e.type == EntryType::int_list    ? EntryType::integer
                         : e.type == EntryType::real_list ? EntryType::real
                                                          : EntryType::token;
        if (const auto* list = v.get_if<ConfigList>()) {
          for (const auto& x : list->items) check_scalar(key, e, item, x);
        } else {
          // A single scalar is accepted as a one-element list.
          check_scalar(key, e, item, v);
        }
        break;
      }
      case EntryType::tree:
        if (const auto* tree = v.get_if<ConfigTree>()) {
          Validator nested(registry_);
          nested.run(*tree, e.nested, key + ".");
          for (auto& d : nested.take()) diags_.push_back(std::move(d));
        } else {
          type_error(key, e, v);
        }
        break;
      default:
        check_scalar(key, e, e.type, v);
    }
  }

  const SchemaRegistry& registry_;
  Diagnostics diags_;
};

}  // namespace

ValidationResult validate_config(const ConfigTree& config, const std::string& schema,
                                 const SchemaRegistry& registry) {
  ValidationResult result;
  if (registry.find(schema) == nullptr) {
    result.effective = config;
    result.diagnostics.push_back(make_error("UnknownSchema", fmt::format("unknown config schema '{}'", schema)));
    return result;
  }
  Validator v(registry);
  ConfigTree effective = v.run(config, schema, "");
  // Nested trees present in the input also get their defaults.
  for (const auto& e : registry.effective_entries(schema)) {
    if (e.type != EntryType::tree) continue;
    auto* value = effective.find(e.key);
    if (value == nullptr || !value->is<ConfigTree>() || !config.contains(e.key)) continue;
    Validator nested(registry);
    value->data = nested.run(*value->get_if<ConfigTree>(), e.nested, e.key + ".");
  }
  result.effective = std::move(effective);
  result.diagnostics = v.take();
  return result;
}

}  // namespace mlc
