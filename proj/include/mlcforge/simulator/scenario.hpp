#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mlcforge/core/config.hpp"
#include "mlcforge/core/model.hpp"

namespace mlc::simulator {

/// Runtime value. Tensors taken from the scenario's input table keep the id
/// they were declared under; the tag travels with the value.
struct SimValue {
  std::variant<std::int64_t, double, bool, std::string, std::vector<double>> data = std::int64_t{0};
  std::string tag;

  [[nodiscard]] bool is_tensor() const { return std::holds_alternative<std::vector<double>>(data); }
  bool operator==(const SimValue&) const = default;
};

/// `@<tag>` for tagged tensors, `(a, b)` for other tensors, .tcl literals otherwise.
std::string format_value(const SimValue& v);
std::string format_args(const std::vector<SimValue>& args);

struct InjectedEvent {
  std::int64_t time = 0;
  std::string thing;  // pipeline instance
  std::string port;
  std::string message;  // defaults to the port name for tensor ports
  std::vector<SimValue> args;
};

struct PredictorBinding {
  enum class Kind { oracle, trained };
  Kind kind = Kind::oracle;
  /// Oracle: input id -> output vector; the id `default` matches anything.
  std::map<std::string, std::vector<double>> table;
  /// Trained: archive path, or empty for the unit's latest stored archive.
  std::string archive;
};

struct ConnectorOverride {
  std::string from;  // instance.port
  std::string to;
  std::int64_t latency = 1;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::string pipeline;  // empty: the unit's only pipeline
  std::uint64_t step_limit = 100000;
  std::map<std::string, std::vector<double>> inputs;
  std::vector<InjectedEvent> events;
  std::map<std::string, PredictorBinding> predictors;  // by instance name
  std::vector<ConnectorOverride> connectors;
  std::vector<ConfigTree> assertions;
};

struct ScenarioResult {
  std::optional<Scenario> scenario;
  Diagnostics diagnostics;
};

/// Parses `.scn` text (`.tcl` syntax). Diagnostics: ScenarioSyntax,
/// UnknownInput, TimeOrder (non-decreasing times required), TypeError.
ScenarioResult parse_scenario(std::string_view text, const std::string& file);
ScenarioResult load_scenario(const std::filesystem::path& path);

}  // namespace mlc::simulator
