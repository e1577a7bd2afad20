#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlcforge/core/model.hpp"

namespace mlc::analysis {

/// What an instance port is after resolving the instance type.
struct PortInfo {
  enum class Kind { tensor, message } kind = Kind::tensor;
  Direction direction = Direction::in;
  std::optional<TensorType> tensor;  // concrete for network instances with bindings
  std::vector<const MessageDef*> messages;
};

enum class InstanceKind { network, thing, stub, unknown };

InstanceKind instance_kind(const Instance& inst, const ModelUnit& unit);

/// Port of an instance; nullopt when the instance or port does not exist.
std::optional<PortInfo> resolve_port(const PipelineGraph& pipeline, const Endpoint& ep, const ModelUnit& unit);

/// Connector endpoints, directions, same-kind typing, fan-in and connected
/// network inputs. Codes: DanglingConnector, TypeMismatch, UnconnectedInput,
/// MultipleWriters, MissingBinding / NonPositiveBinding for bad instance arguments.
Diagnostics check_wiring(const PipelineGraph& pipeline, const ModelUnit& unit);

}  // namespace mlc::analysis
