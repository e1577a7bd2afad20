#include "mlcforge/analysis/wiring.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "mlcforge/analysis/shapes.hpp"
#include "mlcforge/core/elaborate.hpp"
#include "mlcforge/core/error.hpp"

namespace mlc::analysis {

InstanceKind instance_kind(const Instance& inst, const ModelUnit& unit) {
  if (unit.network(inst.type_name)) return InstanceKind::network;
  if (unit.thing(inst.type_name)) return InstanceKind::thing;
  if (unit.stub(inst.type_name)) return InstanceKind::stub;
  return InstanceKind::unknown;
}

namespace {

std::optional<PortInfo> tensor_port(const TensorPort* p) {
  if (p == nullptr) return std::nullopt;
  PortInfo info;
  info.kind = PortInfo::Kind::tensor;
  info.direction = p->direction;
  info.tensor = p->type;
  return info;
}

std::optional<NetworkArch> concrete_network(const NetworkArch& arch, const Instance& inst) {
  try {
    return resolve_generics(arch, bindings_for(arch, inst));
  } catch (const ModelError&) {
    return std::nullopt;
  }
}

bool same_tensor(const TensorType& a, const TensorType& b) {
  if (!a.concrete() || !b.concrete()) return false;
  return a.extents() == b.extents() && a.range == b.range;
}

std::string describe(const Endpoint& e) { return e.instance + "." + e.port; }

}  // namespace

std::optional<PortInfo> resolve_port(const PipelineGraph& pipeline, const Endpoint& ep, const ModelUnit& unit) {
  const Instance* inst = pipeline.instance(ep.instance);
  if (inst == nullptr) return std::nullopt;
  if (const NetworkArch* arch = unit.network(inst->type_name)) {
    auto concrete = concrete_network(*arch, *inst);
    return tensor_port(concrete ? concrete->port(ep.port) : arch->port(ep.port));
  }
  if (const StubDef* stub = unit.stub(inst->type_name)) return tensor_port(stub->port(ep.port));
  if (const ThingDef* thing = unit.thing(inst->type_name)) {
    const ThingPort* p = thing->port(ep.port);
    if (p == nullptr) return std::nullopt;
    PortInfo info;
    info.kind = PortInfo::Kind::message;
    info.direction = p->direction;
    for (const auto& m : p->messages)
      if (const MessageDef* def = thing->message(m)) info.messages.push_back(def);
    return info;
  }
  return std::nullopt;
}

Diagnostics check_wiring(const PipelineGraph& pipeline, const ModelUnit& unit) {
  Diagnostics d;
  for (const auto& inst : pipeline.instances) {
    if (const NetworkArch* arch = unit.network(inst.type_name)) {
      try {
        resolve_generics(*arch, bindings_for(*arch, inst));
      } catch (const ModelError& e) {
        d.push_back(make_error(e.code(), fmt::format("instance '{}': {}", inst.name, e.what()), inst.span));
      }
    } else if (!inst.bindings.empty()) {
      d.push_back(make_error("UnknownGeneric",
                             fmt::format("instance '{}' passes generic arguments to non-network '{}'", inst.name,
                                         inst.type_name), inst.span));
    }
  }

  std::map<std::pair<std::string, std::string>, std::vector<const Connector*>> writers;
  for (const auto& c : pipeline.connectors) {
    auto from = resolve_port(pipeline, c.from, unit);
    auto to = resolve_port(pipeline, c.to, unit);
    if (!from || !to) {
      const Endpoint& bad = !from ? c.from : c.to;
      d.push_back(make_error("DanglingConnector", fmt::format("connector endpoint '{}' does not exist", describe(bad)), c.span));
      continue;
    }
    if (from->direction == Direction::in || to->direction == Direction::out) {
      d.push_back(make_error("DanglingConnector",
                             fmt::format("connector {} ({}) -> {} ({}) must run from an output to an input",
                                         describe(c.from), to_string(from->direction), describe(c.to),
                                         to_string(to->direction)), c.span));
      continue;
    }
    if (from->kind != to->kind) {
      d.push_back(make_error("TypeMismatch",
                             fmt::format("connector {} -> {} joins a tensor port and a message port", describe(c.from),
                                         describe(c.to)), c.span));
      continue;
    }
    if (from->kind == PortInfo::Kind::tensor) {
      if (!same_tensor(*from->tensor, *to->tensor)) {
        auto show = [](const TensorType& t) {
          return t.concrete() ? format_dims(t.extents()) : std::string("<symbolic>");
        };
        d.push_back(make_error("TypeMismatch",
                               fmt::format("connector {} {} -> {} {}: tensor types differ", describe(c.from),
                                           show(*from->tensor), describe(c.to), show(*to->tensor)), c.span));
      }
      writers[{c.to.instance, c.to.port}].push_back(&c);
    } else {
      for (const MessageDef* m : from->messages) {
        auto it = std::find_if(to->messages.begin(), to->messages.end(),
                               [&](const MessageDef* x) { return x->name == m->name; });
        bool ok = it != to->messages.end() && (*it)->params.size() == m->params.size();
        for (std::size_t i = 0; ok && i < m->params.size(); ++i) ok = (*it)->params[i].type == m->params[i].type;
        if (!ok)
          d.push_back(make_error("TypeMismatch",
                                 fmt::format("message '{}' sent on {} is not accepted with the same signature by {}",
                                             m->name, describe(c.from), describe(c.to)), c.span));
      }
    }
  }

  for (const auto& [key, list] : writers) {
    if (list.size() < 2) continue;
    auto diag = make_error("MultipleWriters",
                           fmt::format("input {}.{} has {} producers", key.first, key.second, list.size()), list[1]->span);
    diag.related.push_back(list[0]->span);
    d.push_back(std::move(diag));
  }

  for (const auto& inst : pipeline.instances) {
    std::vector<const TensorPort*> inputs;
    bool network = false;
    if (const NetworkArch* arch = unit.network(inst.type_name)) {
      inputs = arch->ports_with(Direction::in);
      network = true;
    } else if (const StubDef* stub = unit.stub(inst.type_name)) {
      for (const auto& p : stub->ports)
        if (p.direction == Direction::in) inputs.push_back(&p);
    }
    for (const TensorPort* p : inputs) {
      if (writers.count({inst.name, p->name})) continue;
      auto msg = fmt::format("input {}.{} is not connected", inst.name, p->name);
      d.push_back(network ? make_error("UnconnectedInput", msg, inst.span) : make_warning("UnconnectedInput", msg, inst.span));
    }
  }
  return d;
}

}  // namespace mlc::analysis
