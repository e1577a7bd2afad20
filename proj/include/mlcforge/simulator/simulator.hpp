#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlcforge/simulator/scenario.hpp"
#include "mlcforge/support/bridge.hpp"

namespace mlc::simulator {

enum class EventKind { state_entered, message_sent, message_received, action_executed, prediction_made };
const char* to_string(EventKind k);  // StateEntered, MessageSent, ...
std::optional<EventKind> parse_event_kind(std::string_view text);

struct TraceEvent {
  std::uint64_t seq = 0;
  std::int64_t time = 0;
  EventKind kind = EventKind::state_entered;
  std::string thing;
  std::string state;
  std::string port;
  std::string message;
  std::vector<SimValue> args;
  std::string action;  // canonical action text
  std::string peer;    // MessageSent: `instance.port` or `env`; MessageReceived: sender or `scenario`
  std::string unit;    // PredictionMade
  SimValue input;
  std::vector<double> output;
};

/// `seq<TAB>time<TAB>kind<TAB>thing<TAB>details`
std::string format_event(const TraceEvent& e);
std::string format_trace(const std::vector<TraceEvent>& trace);

struct SimError {
  std::string code;  // StepLimitExceeded, UnboundPredictor, BridgeFailure, RuntimeError
  std::string message;
  std::uint64_t seq = 0;  // trace position at which the run stopped
};

struct SimResult {
  std::vector<TraceEvent> trace;
  std::optional<SimError> error;
  std::uint64_t steps = 0;
  std::uint64_t injected = 0;
  [[nodiscard]] bool ok() const { return !error.has_value(); }
};

/// Executes scenarios against one unit. Predictions from trained models are
/// cached per (unit, input) so that repeated runs see identical outputs.
class Simulator {
 public:
  /// `bridge` is only needed for trained-model bindings.
  explicit Simulator(const ModelUnit& unit, support::BridgeClient* bridge = nullptr);

  /// Throws ModelError for scenarios naming undeclared things, ports or messages.
  SimResult run(const Scenario& scenario);

  /// Maps a unit name to its archive for trained bindings that name none.
  void set_archive_resolver(std::function<std::string(const std::string&)> resolver) { resolver_ = std::move(resolver); }

 private:
  friend class Run;
  const ModelUnit& unit_;
  support::BridgeClient* bridge_;
  std::function<std::string(const std::string&)> resolver_;
  std::map<std::string, std::string> loaded_;  // unit -> archive
  std::map<std::pair<std::string, std::string>, std::vector<double>> cache_;
};

SimResult run_scenario(const ModelUnit& unit, const Scenario& scenario, support::BridgeClient* bridge = nullptr);

/// True when `n` runs (n >= 2) produce byte-identical traces.
bool replay_determinism(const ModelUnit& unit, const Scenario& scenario, int n, support::BridgeClient* bridge = nullptr);

struct AssertionResult {
  std::size_t index = 0;
  std::string form;  // eventually, never, order, next
  bool passed = false;
  std::string message;
  std::optional<std::uint64_t> position;  // first violating or last inspected seq
};

/// Forms, each a one-entry tree:
///   { eventually: <pattern> }        some event matches
///   { never: <pattern> }             no event matches
///   { order: (<p1>, <p2>, ...) }     each pattern occurs, first matches in this order
///   { next: (<a>, <b>) }             after every match of a, the next event of b's kind
///                                    on the same thing matches b
/// Pattern keys: kind, thing, state, port, message, args, action, peer, unit.
std::vector<AssertionResult> assert_trace(const std::vector<TraceEvent>& trace, const std::vector<ConfigTree>& assertions);

bool matches(const TraceEvent& e, const ConfigTree& pattern);

}  // namespace mlc::simulator
