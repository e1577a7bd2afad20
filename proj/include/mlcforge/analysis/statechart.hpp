#pragma once

#include <map>
#include <optional>
#include <string>

#include "mlcforge/core/model.hpp"

namespace mlc::analysis {

enum class ExprType { integer, real, boolean, string, tensor, unknown };
const char* to_string(ExprType t);

/// Scalar-form `Z(..)` behaves as int and scalar-form `Q(..)` as real.
ExprType type_of(const ValueType& t);

using Scope = std::map<std::string, ExprType>;

/// Infers the type of `e`; appends UnknownName / TypeError diagnostics.
ExprType check_expr(const Expr& e, const Scope& scope, Diagnostics& diags);

/// Checks one thing: initial state, reachability, triggers, sends, ML actions,
/// nondeterminism and guard types.
Diagnostics check_statechart(const ThingDef& thing);

/// True when the two guards can never hold together. Recognized forms:
/// `x == a` against `x == b` with distinct literals, and `g` against `!g`.
bool guards_exclusive(const Expr& a, const Expr& b);

}  // namespace mlc::analysis
