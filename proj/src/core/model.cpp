#include "mlcforge/core/model.hpp"

#include <algorithm>

#include "mlcforge/core/error.hpp"

namespace mlc {

namespace {
template <class Range, class Pred>
auto find_ptr(Range& r, Pred pred) -> decltype(&*r.begin()) {
  auto it = std::find_if(r.begin(), r.end(), pred);
  return it == r.end() ? nullptr : &*it;
}
}  // namespace

bool TensorType::concrete() const {
  return std::all_of(dims.begin(), dims.end(), [](const DimExpr& d) { return d.concrete(); });
}

std::vector<std::int64_t> TensorType::extents() const {
  std::vector<std::int64_t> out;
  out.reserve(dims.size());
  for (const auto& d : dims) {
    if (!d.concrete()) throw ModelError("UnresolvedDim", "dimension '" + d.symbol() + "' is symbolic", span);
    out.push_back(d.extent());
  }
  return out;
}

std::int64_t TensorType::element_count() const {
  std::int64_t n = 1;
  for (auto e : extents()) n *= e;
  return n;
}

const char* layer_name(const LayerKind& kind) {
  struct Namer {
    const char* operator()(const Convolution&) const { return "Convolution"; }
    const char* operator()(const Pooling&) const { return "Pooling"; }
    const char* operator()(const FullyConnected&) const { return "FullyConnected"; }
    const char* operator()(const Flatten&) const { return "Flatten"; }
    const char* operator()(const Relu&) const { return "Relu"; }
    const char* operator()(const Sigmoid&) const { return "Sigmoid"; }
    const char* operator()(const Tanh&) const { return "Tanh"; }
    const char* operator()(const Softmax&) const { return "Softmax"; }
    const char* operator()(const Dropout&) const { return "Dropout"; }
    const char* operator()(const ImportPretrained&) const { return "ImportPretrained"; }
  };
  return std::visit(Namer{}, kind);
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::in: return "in";
    case Direction::out: return "out";
    case Direction::inout: return "inout";
  }
  return "in";
}

const char* to_string(LabelsMode m) {
  switch (m) {
    case LabelsMode::on: return "ON";
    case LabelsMode::off: return "OFF";
    case LabelsMode::semi: return "SEMI";
  }
  return "ON";
}

const char* to_string(PreprocessStep::Kind k) {
  switch (k) {
    case PreprocessStep::Kind::standardize: return "standardize";
    case PreprocessStep::Kind::normalize: return "normalize";
    case PreprocessStep::Kind::one_hot: return "one_hot";
  }
  return "standardize";
}

bool PreprocessPlan::scales(const std::string& column) const {
  return std::any_of(steps.begin(), steps.end(), [&](const PreprocessStep& s) {
    return s.kind != PreprocessStep::Kind::one_hot &&
           std::find(s.columns.begin(), s.columns.end(), column) != s.columns.end();
  });
}

const TensorPort* NetworkArch::port(const std::string& n) const {
  return find_ptr(ports, [&](const TensorPort& p) { return p.name == n; });
}

std::vector<const TensorPort*> NetworkArch::ports_with(Direction d) const {
  std::vector<const TensorPort*> out;
  for (const auto& p : ports)
    if (p.direction == d) out.push_back(&p);
  return out;
}

const DefBlock* NetworkArch::def_block(const std::string& n) const {
  return find_ptr(def_blocks, [&](const DefBlock& b) { return b.name == n; });
}

bool Action::is_ml() const {
  return std::holds_alternative<PreprocessAction>(kind) || std::holds_alternative<TrainAction>(kind) ||
         std::holds_alternative<PredictAction>(kind);
}

const State* StateMachine::state(const std::string& n) const {
  return find_ptr(states, [&](const State& s) { return s.name == n; });
}

const State* StateMachine::initial_state() const {
  return find_ptr(states, [](const State& s) { return s.initial; });
}

const MessageDef* ThingDef::message(const std::string& n) const {
  return find_ptr(messages, [&](const MessageDef& m) { return m.name == n; });
}

const ThingPort* ThingDef::port(const std::string& n) const {
  return find_ptr(ports, [&](const ThingPort& p) { return p.name == n; });
}

const Property* ThingDef::property(const std::string& n) const {
  return find_ptr(properties, [&](const Property& p) { return p.name == n; });
}

const TensorPort* StubDef::port(const std::string& n) const {
  return find_ptr(ports, [&](const TensorPort& p) { return p.name == n; });
}

const Instance* PipelineGraph::instance(const std::string& n) const {
  return find_ptr(instances, [&](const Instance& i) { return i.name == n; });
}

bool ProjectManifest::is_sequential(const std::string& dataset) const {
  auto it = sequential.find(dataset);
  return it != sequential.end() && it->second;
}

const NetworkArch* ModelUnit::network(const std::string& n) const {
  return find_ptr(networks, [&](const NetworkArch& a) { return a.name == n; });
}

const NamedConfig* ModelUnit::config(const std::string& n) const {
  return find_ptr(configs, [&](const NamedConfig& c) { return c.name == n; });
}

const ThingDef* ModelUnit::thing(const std::string& n) const {
  return find_ptr(things, [&](const ThingDef& t) { return t.name == n; });
}

ThingDef* ModelUnit::thing(const std::string& n) {
  return find_ptr(things, [&](const ThingDef& t) { return t.name == n; });
}

const StubDef* ModelUnit::stub(const std::string& n) const {
  return find_ptr(stubs, [&](const StubDef& s) { return s.name == n; });
}

const PipelineGraph* ModelUnit::pipeline(const std::string& n) const {
  if (n.empty()) return pipelines.size() == 1 ? &pipelines.front() : nullptr;
  return find_ptr(pipelines, [&](const PipelineGraph& p) { return p.name == n; });
}

}  // namespace mlc
