#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mlcforge/core/model.hpp"

namespace mlc::analysis {

using Dims = std::vector<std::int64_t>;

/// dims[0] is the input port shape, dims[i + 1] the output of layer i.
/// Rank-3 shapes are channel-last [H, W, C].
struct ShapeAnnotation {
  std::vector<Dims> dims;
  std::vector<std::string> layers;
};

/// Input and output shape of a pretrained network referenced by ImportPretrained.
struct ImportedShape {
  Dims input;
  Dims output;
};

using ImportResolver = std::function<std::optional<ImportedShape>(const std::string& ref)>;

struct ShapeResult {
  ShapeAnnotation annotation;
  Diagnostics diagnostics;
  [[nodiscard]] bool ok() const { return !has_errors(diagnostics); }
};

/// `arch` must be generic-free and def-flat. Diagnostics: ShapeMismatch, RankError,
/// UnresolvedImport. Propagation stops at the first failing layer.
ShapeResult infer_shapes(const NetworkArch& arch, const ImportResolver& imports = {});

/// Output shape of one layer, or nullopt with `error` set (code, message).
std::optional<Dims> propagate(const LayerKind& layer, const Dims& in, const ImportResolver& imports,
                              std::string& error_code, std::string& error_message);

std::string format_dims(const Dims& d);

}  // namespace mlc::analysis
