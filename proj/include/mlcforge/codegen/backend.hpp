#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mlcforge/analysis/units.hpp"

namespace mlc::codegen {

/// One trainable stage of the emitted model.
struct ModelLayer {
  enum class Kind { dense, pretrained };
  Kind kind = Kind::dense;
  std::int64_t in = 0;
  std::int64_t out = 0;
  std::string activation = "identity";
  double dropout = 0;  // applied to this layer's output during training
  std::string archive;  // pretrained reference
  bool frozen = true;
};

struct ModelSpec {
  std::vector<std::int64_t> layer_sizes;
  std::vector<std::string> activations;  // one per layer
  std::vector<ModelLayer> layers;
  std::string loss;
};

struct Capabilities {
  std::set<std::string> algorithms;
  std::set<std::string> layers;
  std::set<LabelsMode> labels;
};

class BackendAdapter {
 public:
  virtual ~BackendAdapter() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual Capabilities capabilities() const = 0;

  /// UnsupportedCapability diagnostics for everything the unit needs but the backend lacks.
  [[nodiscard]] Diagnostics check(const analysis::TrainableUnit& unit) const;

  /// Throws ModelError(UnsupportedCapability) when the unit cannot be mapped.
  [[nodiscard]] virtual ModelSpec model_spec(const analysis::TrainableUnit& unit,
                                             const analysis::ImportResolver& imports) const;

  /// Body of `gen/train/<unit>/train.py`.
  [[nodiscard]] virtual std::string emit_training_program(const analysis::TrainableUnit& unit, const ModelSpec& spec,
                                                          const std::string& spec_path) const = 0;

  /// C++ statement performing a prediction through the bridge; `input` is an
  /// expression of type mlc_gen::Tensor, `result` a Tensor lvalue.
  [[nodiscard]] virtual std::string emit_predict_call(const std::string& unit, const std::string& input,
                                                      const std::string& result) const = 0;
};

/// MLP family (mlp, linear_regression, logistic_regression) and dense networks.
class ReferenceBackend final : public BackendAdapter {
 public:
  [[nodiscard]] std::string id() const override { return "reference"; }
  [[nodiscard]] Capabilities capabilities() const override;
  [[nodiscard]] std::string emit_training_program(const analysis::TrainableUnit& unit, const ModelSpec& spec,
                                                  const std::string& spec_path) const override;
  [[nodiscard]] std::string emit_predict_call(const std::string& unit, const std::string& input,
                                              const std::string& result) const override;
};

class BackendRegistry {
 public:
  /// Holds the reference backend.
  static const BackendRegistry& builtin();
  void add(std::unique_ptr<BackendAdapter> backend);
  [[nodiscard]] const BackendAdapter* find(const std::string& id) const;

 private:
  std::map<std::string, std::shared_ptr<const BackendAdapter>> backends_;
};

}  // namespace mlc::codegen
