#pragma once

#include <set>
#include <string>
#include <string_view>

namespace mlc::codegen {

bool is_cpp_keyword(std::string_view word);
bool is_python_keyword(std::string_view word);

/// Non-alphanumeric characters become '_', a leading digit gets a '_'
/// prefix and C++ keywords get a '_' suffix.
std::string sanitize_identifier(std::string_view name);

/// Hands out sanitized identifiers, appending `_2`, `_3`, ... on collision.
class IdentifierPool {
 public:
  std::string claim(std::string_view name);
  /// Reserves a name without sanitizing (e.g. fixed helper names).
  void reserve(const std::string& name) { used_.insert(name); }

 private:
  std::set<std::string> used_;
};

}  // namespace mlc::codegen
