#include "mlcforge/core/source.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace mlc {

const char* to_string(Severity s) {
  switch (s) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
  }
  return "error";
}

namespace {
Diagnostic make(Severity sev, std::string code, std::string message, SourceSpan span) {
  Diagnostic d;
  d.severity = sev;
  d.code = std::move(code);
  d.message = std::move(message);
  d.span = std::move(span);
  return d;
}
}  // namespace

Diagnostic make_error(std::string code, std::string message, SourceSpan span) {
  return make(Severity::error, std::move(code), std::move(message), std::move(span));
}
Diagnostic make_warning(std::string code, std::string message, SourceSpan span) {
  return make(Severity::warning, std::move(code), std::move(message), std::move(span));
}
Diagnostic make_info(std::string code, std::string message, SourceSpan span) {
  return make(Severity::info, std::move(code), std::move(message), std::move(span));
}

bool has_errors(const Diagnostics& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::error; });
}

std::size_t count(const Diagnostics& diags, Severity s) {
  return static_cast<std::size_t>(std::count_if(
      diags.begin(), diags.end(), [s](const Diagnostic& d) { return d.severity == s; }));
}

std::string render(const Diagnostic& d) {
  std::string where;
  if (!d.span.file.empty()) {
    where = d.span.known() ? fmt::format("{}:{}:{}: ", d.span.file, d.span.line, d.span.column)
                           : fmt::format("{}: ", d.span.file);
  }
  std::string out = fmt::format("{}{}[{}]: {}", where, to_string(d.severity), d.code, d.message);
  if (!d.hint.empty()) out += fmt::format(" (hint: {})", d.hint);
  return out;
}

std::string render(const Diagnostics& diags) {
  std::string out;
  for (const auto& d : diags) {
    out += render(d);
    out += '\n';
  }
  return out;
}

void sort_diagnostics(Diagnostics& diags) {
  std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
    if (a.span.file != b.span.file) return a.span.file < b.span.file;
    return a.span.offset < b.span.offset;
  });
}

void append(Diagnostics& into, Diagnostics from) {
  into.insert(into.end(), std::make_move_iterator(from.begin()),
              std::make_move_iterator(from.end()));
}

}  // namespace mlc
