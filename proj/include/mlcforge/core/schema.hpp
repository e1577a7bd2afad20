#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlcforge/core/config.hpp"
#include "mlcforge/core/source.hpp"

namespace mlc {

enum class EntryType { integer, real, boolean, string, token, int_list, real_list, token_list, tree };
const char* to_string(EntryType t);

struct Bound {
  double value = 0;
  bool inclusive = true;
};

struct SchemaEntry {
  std::string key;
  EntryType type = EntryType::integer;
  bool required = false;
  std::optional<ConfigValue> default_value;
  std::optional<Bound> min;
  std::optional<Bound> max;
  /// Permitted tokens for token and token_list entries (empty: any).
  std::vector<std::string> allowed;
  /// Schema name validating a tree entry.
  std::string nested;
  std::string doc;
};

struct ConfigSchema {
  std::string name;
  std::optional<std::string> parent;
  std::vector<SchemaEntry> entries;
};

/// Named schemas with single inheritance. A child may add entries or narrow
/// inherited ones (tighter range, fewer tokens, required instead of
/// optional) but never change an entry's type.
class SchemaRegistry {
 public:
  /// Schemas shipped for the reference backend: trainer, optimizer,
  /// supervised, mlp, linear_regression, logistic_regression.
  static const SchemaRegistry& builtin();

  /// Throws ModelError (UnknownParentSchema, CyclicSchema, SchemaConflict).
  void add(ConfigSchema schema);

  [[nodiscard]] const ConfigSchema* find(const std::string& name) const;
  /// Entries after applying inheritance, parent entries first.
  [[nodiscard]] std::vector<SchemaEntry> effective_entries(const std::string& name) const;
  [[nodiscard]] std::vector<std::string> names() const;

 private:
  std::map<std::string, ConfigSchema> schemas_;
};

struct ValidationResult {
  Diagnostics diagnostics;
  /// Input plus schema defaults for absent optional keys.
  ConfigTree effective;
};

/// Never throws for bad configs; every finding is a diagnostic. An unknown
/// schema name yields an UnknownSchema error.
ValidationResult validate_config(const ConfigTree& config, const std::string& schema,
                                 const SchemaRegistry& registry = SchemaRegistry::builtin());

/// Closest candidate by edit distance over the whole key and its
/// `_`-separated words; empty when nothing is reasonably close.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace mlc
