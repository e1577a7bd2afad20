#pragma once

#include <string>
#include <vector>

#include "mlcforge/core/config.hpp"
#include "mlcforge/core/model.hpp"

namespace mlc::frontend {

// Canonical printers. For every valid source s:
//   parse(print(parse(s))) == parse(s)   (structural equality, spans ignored)
// Output uses LF line endings and two-space indentation.

std::string print_network(const NetworkArch& arch);
std::string print_networks(const std::vector<NetworkArch>& archs);
std::string print_layer(const LayerStep& step);
std::string print_tensor_type(const TensorType& type);
std::string print_value_type(const ValueType& type);

/// Document form: one entry per line, nested blocks indented.
std::string print_config(const ConfigTree& tree);
/// Single-line form used in protocol frames and reports, e.g. `{ a: 1 b { c: (1, 2) } }`.
std::string print_inline(const ConfigTree& tree);
std::string print_value(const ConfigValue& value);

std::string print_expr(const Expr& expr);
std::string print_action(const Action& action);
std::string print_thing(const ThingDef& thing);
std::string print_stub(const StubDef& stub);
std::string print_pipeline(const PipelineGraph& pipeline);
std::string print_system(const SystemModel& model);

/// Every declaration of the unit, grouped by sub-language.
std::string print_unit(const ModelUnit& unit);

/// Shortest round-trip text that still lexes as a real literal (always has '.' or an exponent).
std::string format_real(double v);
/// Integral values print without a fraction.
std::string format_number(double v);
/// Quoted string literal with escapes.
std::string quote(const std::string& s);
bool is_identifier(const std::string& s);

}  // namespace mlc::frontend
