#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mlc {

/// 1-based line/column position plus byte offset inside a named file.
struct SourcePos {
  std::string file;
  std::uint32_t line = 1;
  std::uint32_t column = 1;
  std::size_t offset = 0;
};

/// A byte range inside one file. Spans never take part in structural
/// equality of AST nodes, so two trees parsed from differently formatted
/// sources compare equal when they mean the same thing.
struct SourceSpan {
  std::string file;
  std::uint32_t line = 0;
  std::uint32_t column = 0;
  std::size_t offset = 0;
  std::size_t length = 0;

  [[nodiscard]] bool known() const { return line != 0; }

  friend bool operator==(const SourceSpan&, const SourceSpan&) { return true; }
};

enum class Severity { error, warning, info };

const char* to_string(Severity s);

struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  SourceSpan span;
  std::string hint;
  std::vector<SourceSpan> related;
};

using Diagnostics = std::vector<Diagnostic>;

Diagnostic make_error(std::string code, std::string message, SourceSpan span = {});
Diagnostic make_warning(std::string code, std::string message, SourceSpan span = {});
Diagnostic make_info(std::string code, std::string message, SourceSpan span = {});

[[nodiscard]] bool has_errors(const Diagnostics& diags);
[[nodiscard]] std::size_t count(const Diagnostics& diags, Severity s);

/// `file:line:col: severity[code]: message`
std::string render(const Diagnostic& d);
std::string render(const Diagnostics& diags);

/// Stable sort by (file, offset); entries without a span keep their order at the front of their file.
void sort_diagnostics(Diagnostics& diags);

void append(Diagnostics& into, Diagnostics from);

}  // namespace mlc
