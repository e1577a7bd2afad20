#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mlcforge/core/config.hpp"
#include "mlcforge/core/source.hpp"

namespace mlc {

// ---------------------------------------------------------------------------
// Tensor types

enum class ElementKind { integer, real };

/// `Z(lo:hi)` is an integer-quantized range, `Q(lo:hi)` a real one.
struct ElementRange {
  ElementKind kind = ElementKind::real;
  double lower = 0;
  double upper = 1;
  bool operator==(const ElementRange&) const = default;
};

/// A dimension: either a concrete extent or a symbolic reference to a generic
/// parameter (or, inside a def block, to a block parameter).
struct DimExpr {
  std::variant<std::int64_t, std::string> value = std::int64_t{1};

  DimExpr() = default;
  DimExpr(std::int64_t v) : value(v) {}              // NOLINT(google-explicit-constructor)
  DimExpr(std::string symbol) : value(std::move(symbol)) {}  // NOLINT

  [[nodiscard]] bool concrete() const { return std::holds_alternative<std::int64_t>(value); }
  [[nodiscard]] std::int64_t extent() const { return std::get<std::int64_t>(value); }
  [[nodiscard]] const std::string& symbol() const { return std::get<std::string>(value); }
  bool operator==(const DimExpr&) const = default;
};

struct TensorType {
  ElementRange range;
  std::vector<DimExpr> dims;
  /// Written without `^{...}`; dims is then [1].
  bool scalar_form = false;
  SourceSpan span;

  [[nodiscard]] bool concrete() const;
  /// Concrete extents; throws ModelError when a dim is still symbolic.
  [[nodiscard]] std::vector<std::int64_t> extents() const;
  [[nodiscard]] std::int64_t element_count() const;
  bool operator==(const TensorType&) const = default;
};

// ---------------------------------------------------------------------------
// Layers

enum class Padding { valid, same };
enum class PoolKind { max, avg };

struct Convolution {
  DimExpr kernel_h = std::int64_t{1};
  DimExpr kernel_w = std::int64_t{1};
  DimExpr channels = std::int64_t{1};
  DimExpr stride = std::int64_t{1};
  Padding padding = Padding::valid;
  bool operator==(const Convolution&) const = default;
};

struct Pooling {
  PoolKind kind = PoolKind::max;
  DimExpr window = std::int64_t{2};
  DimExpr stride = std::int64_t{2};
  bool operator==(const Pooling&) const = default;
};

struct FullyConnected {
  DimExpr units = std::int64_t{1};
  bool operator==(const FullyConnected&) const = default;
};

struct Flatten { bool operator==(const Flatten&) const = default; };
struct Relu { bool operator==(const Relu&) const = default; };
struct Sigmoid { bool operator==(const Sigmoid&) const = default; };
struct Tanh { bool operator==(const Tanh&) const = default; };
struct Softmax { bool operator==(const Softmax&) const = default; };

struct Dropout {
  double rate = 0.5;
  bool operator==(const Dropout&) const = default;
};

/// A previously trained network used as a (by default frozen) layer. The
/// reference is either a weight-archive path or `unit:<Name>`.
struct ImportPretrained {
  std::string archive;
  bool frozen = true;
  bool operator==(const ImportPretrained&) const = default;
};

using LayerKind = std::variant<Convolution, Pooling, FullyConnected, Flatten, Relu, Sigmoid, Tanh,
                               Softmax, Dropout, ImportPretrained>;

struct LayerSpec {
  LayerKind kind;
  SourceSpan span;
  bool operator==(const LayerSpec&) const = default;
};

/// Canonical layer name as written in sources, e.g. "Convolution".
const char* layer_name(const LayerKind& kind);

struct BlockArg {
  std::optional<std::string> name;
  DimExpr value;
  SourceSpan span;
  bool operator==(const BlockArg&) const = default;
};

/// Use of a def block inside a net body or another def block.
struct BlockCall {
  std::string name;
  std::vector<BlockArg> args;
  SourceSpan span;
  bool operator==(const BlockCall&) const = default;
};

using LayerStep = std::variant<LayerSpec, BlockCall>;

struct DefBlock {
  std::string name;
  std::vector<std::string> params;
  std::vector<LayerStep> body;
  SourceSpan span;
  bool operator==(const DefBlock&) const = default;
};

enum class Direction { in, out, inout };
const char* to_string(Direction d);

struct TensorPort {
  std::string name;
  Direction direction = Direction::in;
  TensorType type;
  SourceSpan span;
  bool operator==(const TensorPort&) const = default;
};

struct GenericParam {
  std::string name;
  SourceSpan span;
  bool operator==(const GenericParam&) const = default;
};

struct NetBody {
  std::string input;
  std::vector<LayerStep> steps;
  std::string output;
  SourceSpan span;
  bool operator==(const NetBody&) const = default;
};

struct NetworkArch {
  std::string name;
  std::vector<GenericParam> generics;
  std::vector<TensorPort> ports;
  std::vector<DefBlock> def_blocks;
  NetBody body;
  SourceSpan span;

  [[nodiscard]] const TensorPort* port(const std::string& name) const;
  [[nodiscard]] std::vector<const TensorPort*> ports_with(Direction d) const;
  [[nodiscard]] const DefBlock* def_block(const std::string& name) const;
  bool operator==(const NetworkArch&) const = default;
};

// ---------------------------------------------------------------------------
// Things and statecharts

enum class PrimitiveType { integer, real, boolean, string };

/// Type of a property or message parameter.
struct ValueType {
  std::variant<PrimitiveType, TensorType> type = PrimitiveType::integer;
  [[nodiscard]] bool is_tensor() const { return std::holds_alternative<TensorType>(type); }
  [[nodiscard]] const TensorType* tensor() const { return std::get_if<TensorType>(&type); }
  bool operator==(const ValueType&) const = default;
};

struct Expr {
  enum class Kind { int_lit, real_lit, bool_lit, string_lit, name, unary, binary };
  Kind kind = Kind::int_lit;
  std::int64_t int_value = 0;
  double real_value = 0;
  bool bool_value = false;
  std::string text;  // identifier, string literal, or operator spelling
  std::vector<Expr> operands;
  SourceSpan span;
  bool operator==(const Expr&) const = default;
};

struct SendAction {
  std::string port;
  std::string message;
  std::vector<Expr> args;
  bool operator==(const SendAction&) const = default;
};
struct PreprocessAction { bool operator==(const PreprocessAction&) const = default; };
struct TrainAction { bool operator==(const TrainAction&) const = default; };
struct PredictAction {
  std::vector<Expr> inputs;
  std::string result;
  bool operator==(const PredictAction&) const = default;
};
struct AssignAction {
  std::string target;
  Expr value;
  bool operator==(const AssignAction&) const = default;
};

struct Action {
  std::variant<SendAction, PreprocessAction, TrainAction, PredictAction, AssignAction> kind;
  SourceSpan span;

  [[nodiscard]] bool is_ml() const;
  bool operator==(const Action&) const = default;
};

struct Trigger {
  std::string port;
  std::string message;
  std::vector<std::string> params;
  SourceSpan span;
  bool operator==(const Trigger&) const = default;
};

struct Transition {
  std::optional<Trigger> trigger;
  std::optional<Expr> guard;
  /// Absent target: internal transition, the state is kept and not re-entered.
  std::optional<std::string> target;
  std::vector<Action> actions;
  SourceSpan span;
  bool operator==(const Transition&) const = default;
};

struct State {
  std::string name;
  bool initial = false;
  std::vector<Transition> transitions;
  SourceSpan span;
  bool operator==(const State&) const = default;
};

struct StateMachine {
  std::string name;
  std::vector<State> states;
  SourceSpan span;

  [[nodiscard]] const State* state(const std::string& name) const;
  [[nodiscard]] const State* initial_state() const;
  bool operator==(const StateMachine&) const = default;
};

enum class LabelsMode { on, off, semi };
const char* to_string(LabelsMode m);

struct PreprocessStep {
  enum class Kind { standardize, normalize, one_hot };
  Kind kind = Kind::standardize;
  std::vector<std::string> columns;
  bool operator==(const PreprocessStep&) const = default;
};
const char* to_string(PreprocessStep::Kind k);

struct PreprocessPlan {
  std::vector<PreprocessStep> steps;
  /// True when `column` already appears in a standardize/normalize step.
  [[nodiscard]] bool scales(const std::string& column) const;
  bool operator==(const PreprocessPlan&) const = default;
};

struct MLBlock {
  std::vector<std::string> features;
  LabelsMode labels = LabelsMode::on;
  std::string label_name;
  std::string dataset;
  std::string algorithm;
  ConfigTree hyperparameters;
  std::string backend = "reference";
  PreprocessPlan preprocess;
  std::string prediction_results;
  std::string training_results;
  SourceSpan span;
  bool operator==(const MLBlock&) const = default;
};

struct MessageParam {
  std::string name;
  ValueType type;
  bool operator==(const MessageParam&) const = default;
};

struct MessageDef {
  std::string name;
  std::vector<MessageParam> params;
  SourceSpan span;
  bool operator==(const MessageDef&) const = default;
};

struct ThingPort {
  std::string name;
  Direction direction = Direction::in;
  std::vector<std::string> messages;
  SourceSpan span;
  bool operator==(const ThingPort&) const = default;
};

struct Property {
  std::string name;
  ValueType type;
  std::optional<Expr> init;
  SourceSpan span;
  bool operator==(const Property&) const = default;
};

struct ThingDef {
  std::string name;
  std::vector<MessageDef> messages;
  std::vector<ThingPort> ports;
  std::vector<Property> properties;
  std::optional<MLBlock> ml;
  StateMachine statechart;
  SourceSpan span;

  [[nodiscard]] const MessageDef* message(const std::string& name) const;
  [[nodiscard]] const ThingPort* port(const std::string& name) const;
  [[nodiscard]] const Property* property(const std::string& name) const;
  bool operator==(const ThingDef&) const = default;
};

/// Pipeline component whose realization is handcrafted; only its interface is declared.
struct StubDef {
  std::string name;
  std::vector<TensorPort> ports;
  SourceSpan span;

  [[nodiscard]] const TensorPort* port(const std::string& name) const;
  bool operator==(const StubDef&) const = default;
};

struct GenericBinding {
  std::optional<std::string> name;
  std::int64_t value = 0;
  SourceSpan span;
  bool operator==(const GenericBinding&) const = default;
};

struct Instance {
  std::string name;
  std::string type_name;
  std::vector<GenericBinding> bindings;
  SourceSpan span;
  bool operator==(const Instance&) const = default;
};

struct Endpoint {
  std::string instance;
  std::string port;
  bool operator==(const Endpoint&) const = default;
};

struct Connector {
  Endpoint from;
  Endpoint to;
  SourceSpan span;
  bool operator==(const Connector&) const = default;
};

struct PipelineGraph {
  std::string name;
  std::vector<Instance> instances;
  std::vector<Connector> connectors;
  SourceSpan span;

  [[nodiscard]] const Instance* instance(const std::string& name) const;
  bool operator==(const PipelineGraph&) const = default;
};

/// Everything declared in one `.scl` file.
struct SystemModel {
  std::vector<ThingDef> things;
  std::vector<StubDef> stubs;
  std::vector<PipelineGraph> pipelines;
  bool operator==(const SystemModel&) const = default;
};

// ---------------------------------------------------------------------------
// Project

struct ProjectManifest {
  std::string name;
  std::string backend = "reference";
  bool automl = false;
  std::string store = ".mlc-store";
  std::vector<std::string> network_globs{"**/*.nal"};
  std::vector<std::string> config_globs{"**/*.tcl"};
  std::vector<std::string> system_globs{"**/*.scl"};
  /// Network name -> dataset path (project relative).
  std::map<std::string, std::string> network_data;
  /// Dataset path -> sequential flag.
  std::map<std::string, bool> sequential;
  /// Default bridge launch command; overridable from the CLI.
  std::string bridge;
  SourceSpan span;

  [[nodiscard]] bool is_sequential(const std::string& dataset) const;
};

struct NamedConfig {
  std::string name;  // file stem; matches the network it configures
  ConfigTree tree;
  SourceSpan span;
};

/// All parsed artifacts of one project.
struct ModelUnit {
  std::string root;  // project directory
  ProjectManifest manifest;
  std::vector<NetworkArch> networks;
  std::vector<NamedConfig> configs;
  std::vector<ThingDef> things;
  std::vector<StubDef> stubs;
  std::vector<PipelineGraph> pipelines;
  std::vector<std::string> files;  // project-relative, sorted
  bool valid = true;

  [[nodiscard]] const NetworkArch* network(const std::string& name) const;
  [[nodiscard]] const NamedConfig* config(const std::string& name) const;
  [[nodiscard]] const ThingDef* thing(const std::string& name) const;
  ThingDef* thing(const std::string& name);
  [[nodiscard]] const StubDef* stub(const std::string& name) const;
  [[nodiscard]] const PipelineGraph* pipeline(const std::string& name = {}) const;
};

}  // namespace mlc
