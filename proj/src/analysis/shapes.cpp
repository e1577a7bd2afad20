#include "mlcforge/analysis/shapes.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace mlc::analysis {

std::string format_dims(const Dims& d) { return fmt::format("[{}]", fmt::join(d, ", ")); }

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::int64_t extent(const DimExpr& d) { return d.concrete() ? d.extent() : 0; }

/// Rank-2 inputs are treated as a single channel.
std::optional<Dims> spatial(const Dims& in) {
  if (in.size() == 3) return in;
  if (in.size() == 2) return Dims{in[0], in[1], 1};
  return std::nullopt;
}

}  // namespace

std::optional<Dims> propagate(const LayerKind& layer, const Dims& in, const ImportResolver& imports,
                              std::string& code, std::string& message) {
  auto fail = [&](const char* c, std::string m) -> std::optional<Dims> {
    code = c;
    message = std::move(m);
    return std::nullopt;
  };
  if (const auto* c = std::get_if<Convolution>(&layer)) {
    auto s = spatial(in);
    if (!s) return fail("RankError", fmt::format("Convolution needs a rank-2 or rank-3 input, found {}", format_dims(in)));
    std::int64_t kh = extent(c->kernel_h), kw = extent(c->kernel_w), st = extent(c->stride), ch = extent(c->channels);
    if (kh < 1 || kw < 1 || st < 1 || ch < 1) return fail("ShapeMismatch", "Convolution arguments must be concrete positive integers");
    if (c->padding == Padding::same) return Dims{ceil_div((*s)[0], st), ceil_div((*s)[1], st), ch};
    if (kh > (*s)[0] || kw > (*s)[1])
      return fail("ShapeMismatch", fmt::format("Convolution kernel {}x{} exceeds input {}", kh, kw, format_dims(in)));
    return Dims{(((*s)[0] - kh) / st) + 1, (((*s)[1] - kw) / st) + 1, ch};
  }
  if (const auto* p = std::get_if<Pooling>(&layer)) {
    auto s = spatial(in);
    if (!s) return fail("RankError", fmt::format("Pooling needs a rank-2 or rank-3 input, found {}", format_dims(in)));
    std::int64_t w = extent(p->window), st = extent(p->stride);
    if (w < 1 || st < 1) return fail("ShapeMismatch", "Pooling arguments must be concrete positive integers");
    if (w > (*s)[0] || w > (*s)[1])
      return fail("ShapeMismatch", fmt::format("Pooling window {} exceeds input {}", w, format_dims(in)));
    return Dims{(((*s)[0] - w) / st) + 1, (((*s)[1] - w) / st) + 1, (*s)[2]};
  }
  if (const auto* f = std::get_if<FullyConnected>(&layer)) {
    if (in.size() != 1)
      return fail("RankError", fmt::format("FullyConnected needs a rank-1 input, found {}", format_dims(in)));
    if (extent(f->units) < 1) return fail("ShapeMismatch", "FullyConnected units must be a concrete positive integer");
    return Dims{extent(f->units)};
  }
  if (std::holds_alternative<Flatten>(layer)) {
    std::int64_t n = 1;
    for (auto d : in) n *= d;
    return Dims{n};
  }
  if (const auto* imp = std::get_if<ImportPretrained>(&layer)) {
    std::optional<ImportedShape> shape;
    if (imports) shape = imports(imp->archive);
    if (!shape) return fail("UnresolvedImport", fmt::format("cannot resolve pretrained network '{}'", imp->archive));
    if (shape->input != in)
      return fail("ShapeMismatch", fmt::format("pretrained network '{}' expects {}, found {}", imp->archive,
                                               format_dims(shape->input), format_dims(in)));
    return shape->output;
  }
  return in;  // activations, Softmax, Dropout
}

ShapeResult infer_shapes(const NetworkArch& arch, const ImportResolver& imports) {
  ShapeResult r;
  const TensorPort* in = arch.port(arch.body.input);
  const TensorPort* out = arch.port(arch.body.output);
  if (in == nullptr || out == nullptr || !in->type.concrete() || !out->type.concrete()) {
    r.diagnostics.push_back(make_error("ShapeMismatch", "network ports must be declared with concrete dimensions", arch.span));
    return r;
  }
  Dims cur = in->type.extents();
  r.annotation.dims.push_back(cur);
  for (std::size_t i = 0; i < arch.body.steps.size(); ++i) {
    const auto* layer = std::get_if<LayerSpec>(&arch.body.steps[i]);
    if (layer == nullptr) {
      r.diagnostics.push_back(make_error("ShapeMismatch", fmt::format("layer {} is an unexpanded def block", i),
                                         std::get<BlockCall>(arch.body.steps[i]).span));
      return r;
    }
    std::string code, message;
    auto next = propagate(layer->kind, cur, imports, code, message);
    if (!next) {
      r.diagnostics.push_back(make_error(code, fmt::format("layer {} ({}): {}", i, layer_name(layer->kind), message), layer->span));
      return r;
    }
    r.annotation.layers.emplace_back(layer_name(layer->kind));
    r.annotation.dims.push_back(*next);
    cur = std::move(*next);
  }
  Dims declared = out->type.extents();
  if (cur != declared) {
    r.diagnostics.push_back(make_error(
        "ShapeMismatch",
        fmt::format("layer {} (output port '{}'): expected {}, found {}", arch.body.steps.size(), out->name,
                    format_dims(declared), format_dims(cur)),
        out->span));
  }
  return r;
}

}  // namespace mlc::analysis
