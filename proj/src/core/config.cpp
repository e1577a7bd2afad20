#include "mlcforge/core/config.hpp"

#include <algorithm>

namespace mlc {

const ConfigValue* ConfigTree::find(std::string_view key) const {
  const auto* e = entry(key);
  return e ? &e->value : nullptr;
}

ConfigValue* ConfigTree::find(std::string_view key) {
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const ConfigEntry& e) { return e.key == key; });
  return it == entries.end() ? nullptr : &it->value;
}

const ConfigEntry* ConfigTree::entry(std::string_view key) const {
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const ConfigEntry& e) { return e.key == key; });
  return it == entries.end() ? nullptr : &*it;
}

const ConfigValue* ConfigTree::find_path(std::string_view dotted) const {
  const ConfigTree* tree = this;
  while (true) {
    auto dot = dotted.find('.');
    const ConfigValue* v = tree->find(dotted.substr(0, dot));
    if (dot == std::string_view::npos || v == nullptr) return v;
    tree = v->get_if<ConfigTree>();
    if (tree == nullptr) return nullptr;
    dotted.remove_prefix(dot + 1);
  }
}

void ConfigTree::set(std::string key, ConfigValue value) {
  if (auto* v = find(key)) {
    *v = std::move(value);
    return;
  }
  entries.push_back(ConfigEntry{std::move(key), std::move(value), {}});
}

std::optional<double> ConfigValue::as_number() const {
  if (const auto* i = get_if<std::int64_t>()) return static_cast<double>(*i);
  if (const auto* d = get_if<double>()) return *d;
  return std::nullopt;
}

std::optional<std::int64_t> ConfigValue::as_int() const {
  if (const auto* i = get_if<std::int64_t>()) return *i;
  return std::nullopt;
}

std::optional<std::string> ConfigValue::as_text() const {
  if (const auto* s = get_if<std::string>()) return *s;
  if (const auto* t = get_if<Token>()) return t->name;
  return std::nullopt;
}

std::optional<bool> ConfigValue::as_bool() const {
  if (const auto* b = get_if<bool>()) return *b;
  return std::nullopt;
}

ConfigValue int_list(const std::vector<std::int64_t>& values) {
  ConfigList list;
  for (auto v : values) list.items.emplace_back(v);
  return ConfigValue(std::move(list));
}

}  // namespace mlc
