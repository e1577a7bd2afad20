#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "mlcforge/core/model.hpp"
#include "mlcforge/frontend/lexer.hpp"

namespace mlc::frontend::detail {

/// Unwinds to the nearest recovery point; the diagnostic is already recorded.
struct SyntaxError {};

inline constexpr int kMaxDepth = 200;

class ParserBase {
 public:
  ParserBase(std::string_view text, std::string file) : file_(std::move(file)) {
    Lexer lexer(text, file_);
    tokens_ = lexer.tokenize();
    diags_ = lexer.take_diagnostics();
  }

  Diagnostics take_diagnostics() { return std::move(diags_); }

 protected:
  [[nodiscard]] const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }
  [[nodiscard]] bool at_end() const { return peek().kind == TokenKind::end; }
  [[nodiscard]] bool at(std::string_view punct) const { return peek().is(punct); }
  [[nodiscard]] bool at_word(std::string_view word) const { return peek().is_word(word); }
  [[nodiscard]] bool at_ident() const { return peek().kind == TokenKind::identifier; }

  const Token& next() {
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }

  bool accept(std::string_view punct) {
    if (!at(punct)) return false;
    next();
    return true;
  }
  bool accept_word(std::string_view word) {
    if (!at_word(word)) return false;
    next();
    return true;
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case TokenKind::end: return "end of file";
      case TokenKind::identifier: return fmt::format("'{}'", t.text);
      case TokenKind::integer:
      case TokenKind::real: return fmt::format("number '{}'", t.text);
      case TokenKind::string: return "string literal";
      case TokenKind::punct: return fmt::format("'{}'", t.text);
    }
    return "token";
  }

  [[noreturn]] void fail(const std::string& expected) {
    const Token& t = peek();
    diags_.push_back(make_error("SyntaxError", fmt::format("expected {}, found {}", expected, describe(t)), t.span));
    throw SyntaxError{};
  }

  const Token& expect(std::string_view punct) {
    if (!at(punct)) fail(fmt::format("'{}'", punct));
    return next();
  }
  const Token& expect_word(std::string_view word) {
    if (!at_word(word)) fail(fmt::format("'{}'", word));
    return next();
  }
  const Token& expect_ident(std::string_view what = "identifier") {
    if (!at_ident()) fail(std::string(what));
    return next();
  }
  std::int64_t expect_integer(std::string_view what = "integer") {
    bool negative = accept("-");
    if (peek().kind != TokenKind::integer) fail(std::string(what));
    auto v = next().int_value;
    return negative ? -v : v;
  }
  double expect_number(std::string_view what = "number") {
    bool negative = accept("-");
    const Token& t = peek();
    double v = 0;
    if (t.kind == TokenKind::integer)
      v = static_cast<double>(t.int_value);
    else if (t.kind == TokenKind::real)
      v = t.real_value;
    else
      fail(std::string(what));
    next();
    return negative ? -v : v;
  }

  /// Span from `start` up to the end of the previous token.
  [[nodiscard]] SourceSpan span_since(const SourceSpan& start) const {
    SourceSpan s = start;
    const Token& prev = pos_ > 0 ? tokens_[pos_ - 1] : tokens_.front();
    std::size_t end = prev.span.offset + prev.span.length;
    s.length = end > s.offset ? end - s.offset : s.length;
    return s;
  }

  void error(std::string code, std::string message, SourceSpan span) {
    diags_.push_back(make_error(std::move(code), std::move(message), std::move(span)));
  }

  /// Skips to the next token that begins a top-level declaration.
  void recover_to(std::initializer_list<std::string_view> keywords) {
    if (!at_end()) next();
    while (!at_end()) {
      for (auto k : keywords)
        if (at_word(k)) return;
      next();
    }
  }

  struct DepthGuard {
    ParserBase& p;
    explicit DepthGuard(ParserBase& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) {
        --p.depth_;
        p.fail("shallower nesting (maximum depth exceeded)");
      }
    }
    ~DepthGuard() { --p.depth_; }
    DepthGuard(const DepthGuard&) = delete;
    DepthGuard& operator=(const DepthGuard&) = delete;
  };

  // Shared grammar fragments -------------------------------------------------

  /// `Q(lo:hi)` or `Z(lo:hi)`, optionally followed by `^{d1, d2, ...}`.
  TensorType parse_tensor_type() {
    TensorType t;
    const Token& head = peek();
    t.span = head.span;
    if (head.is_word("Q"))
      t.range.kind = ElementKind::real;
    else if (head.is_word("Z"))
      t.range.kind = ElementKind::integer;
    else
      fail("tensor type 'Q(lo:hi)' or 'Z(lo:hi)'");
    next();
    expect("(");
    t.range.lower = expect_number("range lower bound");
    expect(":");
    t.range.upper = expect_number("range upper bound");
    expect(")");
    if (!(t.range.lower < t.range.upper))
      error("InvalidRange", fmt::format("range lower bound {} must be below upper bound {}", t.range.lower,
                                        t.range.upper),
            span_since(t.span));
    if (accept("^")) {
      expect("{");
      do {
        const Token& d = peek();
        if (d.kind == TokenKind::integer) {
          if (d.int_value < 1) error("InvalidDimension", "tensor dimensions must be positive", d.span);
          t.dims.emplace_back(d.int_value);
          next();
        } else if (d.kind == TokenKind::identifier) {
          t.dims.emplace_back(d.text);
          next();
        } else {
          fail("dimension");
        }
      } while (accept(","));
      expect("}");
    } else {
      t.scalar_form = true;
      t.dims.emplace_back(std::int64_t{1});
    }
    t.span = span_since(t.span);
    return t;
  }

  std::string file_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  Diagnostics diags_;
  int depth_ = 0;
};

}  // namespace mlc::frontend::detail
