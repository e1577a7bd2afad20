#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlcforge/core/config.hpp"
#include "mlcforge/core/model.hpp"

namespace mlc::frontend {

struct NetworksResult {
  std::vector<NetworkArch> networks;
  Diagnostics diagnostics;
};

struct NetworkResult {
  std::optional<NetworkArch> arch;
  Diagnostics diagnostics;
};

struct ConfigResult {
  std::optional<ConfigTree> tree;
  Diagnostics diagnostics;
};

struct ValueResult {
  std::optional<ConfigValue> value;
  Diagnostics diagnostics;
};

struct SystemResult {
  SystemModel model;
  Diagnostics diagnostics;
};

/// All `component` declarations of a `.nal` file. Components with syntax
/// errors are dropped; parsing resumes at the next `component`.
NetworksResult parse_networks(std::string_view text, const std::string& file);

/// The first component of a `.nal` file; empty when any error was reported.
NetworkResult parse_network(std::string_view text, const std::string& file);

/// A `.tcl` document: `key: value` and `key { ... }` entries.
ConfigResult parse_config(std::string_view text, const std::string& file);

/// A single value in `.tcl` syntax, e.g. `{ a: 1 }`, `(1, 2)` or `adam`.
ValueResult parse_value(std::string_view text, const std::string& file = "<payload>");

/// Things, stubs and pipelines of a `.scl` file.
SystemResult parse_system(std::string_view text, const std::string& file);

/// Names reserved for primitive layers.
bool is_primitive_layer(std::string_view name);

}  // namespace mlc::frontend
