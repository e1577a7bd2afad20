#include "mlcforge/frontend/parser.hpp"
#include "config_grammar.hpp"

namespace mlc::frontend {

using detail::ConfigParser;

ConfigResult parse_config(std::string_view text, const std::string& file) {
  ConfigParser parser(text, file);
  ConfigResult r;
  ConfigTree tree = parser.parse_document();
  r.diagnostics = parser.take_diagnostics();
  if (!has_errors(r.diagnostics)) r.tree = std::move(tree);
  return r;
}

ValueResult parse_value(std::string_view text, const std::string& file) {
  ConfigParser parser(text, file);
  ValueResult r;
  auto v = parser.parse_single_value();
  r.diagnostics = parser.take_diagnostics();
  if (!has_errors(r.diagnostics)) r.value = std::move(v);
  return r;
}

}  // namespace mlc::frontend
