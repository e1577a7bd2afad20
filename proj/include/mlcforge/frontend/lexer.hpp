#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mlcforge/core/source.hpp"

namespace mlc::frontend {

enum class TokenKind { identifier, integer, real, string, punct, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;  // identifier / punctuation spelling / decoded string literal
  std::int64_t int_value = 0;
  double real_value = 0;
  SourceSpan span;

  [[nodiscard]] bool is(std::string_view punct) const { return kind == TokenKind::punct && text == punct; }
  [[nodiscard]] bool is_word(std::string_view word) const {
    return kind == TokenKind::identifier && text == word;
  }
};

/// Shared lexer for all sub-languages. Accepts arbitrary bytes: anything
/// it cannot tokenize becomes a diagnostic and is skipped. CRLF and LF
/// line endings are both accepted. `//` and `/* */` comments are skipped.
class Lexer {
 public:
  Lexer(std::string_view text, std::string file);

  /// Always ends with a TokenKind::end token whose span sits at EOF.
  std::vector<Token> tokenize();
  Diagnostics take_diagnostics() { return std::move(diags_); }

 private:
  [[nodiscard]] bool eof() const { return pos_ >= text_.size(); }
  [[nodiscard]] char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  void advance();
  SourceSpan span_from(std::size_t start, std::uint32_t line, std::uint32_t col) const;
  void skip_trivia();
  Token lex_number();
  Token lex_string();

  std::string_view text_;
  std::string file_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1;
  std::uint32_t col_ = 1;
  Diagnostics diags_;
};

}  // namespace mlc::frontend
