#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mlcforge/core/source.hpp"

namespace mlc {

struct ConfigValue;
struct ConfigEntry;

/// Bare identifier value such as `adam` or `ON`.
struct Token {
  std::string name;
  bool operator==(const Token&) const = default;
};

struct ConfigList {
  std::vector<ConfigValue> items;
  bool operator==(const ConfigList&) const;
};

/// Ordered key -> value map; keys are unique per level.
struct ConfigTree {
  std::vector<ConfigEntry> entries;

  [[nodiscard]] const ConfigValue* find(std::string_view key) const;
  ConfigValue* find(std::string_view key);
  [[nodiscard]] const ConfigEntry* entry(std::string_view key) const;
  /// Dotted lookup, e.g. "optimizer.learning_rate".
  [[nodiscard]] const ConfigValue* find_path(std::string_view dotted) const;
  [[nodiscard]] bool contains(std::string_view key) const { return find(key) != nullptr; }
  /// Replaces an existing value or appends a new entry.
  void set(std::string key, ConfigValue value);
  [[nodiscard]] bool empty() const { return entries.empty(); }

  bool operator==(const ConfigTree&) const;
};

struct ConfigValue {
  using Data = std::variant<std::int64_t, double, bool, std::string, Token, ConfigList, ConfigTree>;
  Data data;
  SourceSpan span;

  ConfigValue() : data(std::int64_t{0}) {}
  ConfigValue(Data d) : data(std::move(d)) {}  // NOLINT(google-explicit-constructor)
  ConfigValue(std::int64_t v) : data(v) {}      // NOLINT
  ConfigValue(int v) : data(std::int64_t{v}) {}  // NOLINT
  ConfigValue(double v) : data(v) {}            // NOLINT
  ConfigValue(bool v) : data(v) {}              // NOLINT
  ConfigValue(std::string v) : data(std::move(v)) {}  // NOLINT
  ConfigValue(const char* v) : data(std::string(v)) {}  // NOLINT
  ConfigValue(Token v) : data(std::move(v)) {}  // NOLINT
  ConfigValue(ConfigList v) : data(std::move(v)) {}  // NOLINT
  ConfigValue(ConfigTree v) : data(std::move(v)) {}  // NOLINT

  template <class T>
  [[nodiscard]] bool is() const {
    return std::holds_alternative<T>(data);
  }
  template <class T>
  [[nodiscard]] const T* get_if() const {
    return std::get_if<T>(&data);
  }
  template <class T>
  T* get_if() {
    return std::get_if<T>(&data);
  }

  /// Integer or real as double.
  [[nodiscard]] std::optional<double> as_number() const;
  [[nodiscard]] std::optional<std::int64_t> as_int() const;
  /// String literal or bare token text.
  [[nodiscard]] std::optional<std::string> as_text() const;
  [[nodiscard]] std::optional<bool> as_bool() const;

  bool operator==(const ConfigValue& o) const { return data == o.data; }
};

struct ConfigEntry {
  std::string key;
  ConfigValue value;
  SourceSpan key_span;

  bool operator==(const ConfigEntry& o) const { return key == o.key && value == o.value; }
};

inline bool ConfigList::operator==(const ConfigList& o) const { return items == o.items; }
inline bool ConfigTree::operator==(const ConfigTree& o) const { return entries == o.entries; }

/// Builds a list value from integers.
ConfigValue int_list(const std::vector<std::int64_t>& values);

}  // namespace mlc
