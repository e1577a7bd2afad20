#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "mlcforge/core/model.hpp"

namespace mlc {

using Bindings = std::map<std::string, std::int64_t>;

/// Substitutes generic parameters everywhere in `arch` (ports, def blocks,
/// body). Throws ModelError with code MissingBinding, NonPositiveBinding,
/// UnknownGeneric or UnknownSymbol.
NetworkArch resolve_generics(const NetworkArch& arch, const Bindings& bindings);

/// Inlines all def-block uses so the body holds primitive layers only; the
/// returned arch has no def blocks. Throws ModelError with code
/// CyclicDefBlock, UnknownDefBlock, BlockArity or UnresolvedDim.
NetworkArch expand_def_blocks(const NetworkArch& arch);

/// Bindings from an instance's `<...>` arguments, matched by name or position.
Bindings bindings_for(const NetworkArch& arch, const Instance& instance);

/// Calls `fn` on every dimension argument of a layer.
void for_each_dim(LayerKind& kind, const std::function<void(DimExpr&)>& fn);
void for_each_dim(const LayerKind& kind, const std::function<void(const DimExpr&)>& fn);

}  // namespace mlc
