#pragma once

#include <stdexcept>
#include <string>

#include "mlcforge/core/source.hpp"

namespace mlc {

/// Thrown by model operations whose failures are not diagnostics (for
/// example elaboration of generics or def blocks). `code()` is the stable
/// diagnostic id.
class ModelError : public std::runtime_error {
 public:
  ModelError(std::string code, const std::string& message, SourceSpan span = {})
      : std::runtime_error(message), code_(std::move(code)), span_(std::move(span)) {}

  [[nodiscard]] const std::string& code() const { return code_; }
  [[nodiscard]] const SourceSpan& span() const { return span_; }
  [[nodiscard]] Diagnostic diagnostic() const { return make_error(code_, what(), span_); }

 private:
  std::string code_;
  SourceSpan span_;
};

}  // namespace mlc
