#include "mlcforge/frontend/lexer.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include <fmt/format.h>

namespace mlc::frontend {

namespace {
bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_continue(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

constexpr std::array<std::string_view, 7> kTwoCharPunct = {"->", "==", "!=", "<=", ">=", "&&", "||"};
constexpr std::string_view kOneCharPunct = "{}()[]<>,;:=?!/^.+-*%@";
}  // namespace

Lexer::Lexer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

void Lexer::advance() {
  if (eof()) return;
  if (text_[pos_] == '\n') {
    ++line_;
    col_ = 1;
  } else {
    ++col_;
  }
  ++pos_;
}

SourceSpan Lexer::span_from(std::size_t start, std::uint32_t line, std::uint32_t col) const {
  return SourceSpan{file_, line, col, start, pos_ - start};
}

void Lexer::skip_trivia() {
  while (!eof()) {
    char c = peek();
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      advance();
    } else if (c == '/' && peek(1) == '/') {
      while (!eof() && peek() != '\n') advance();
    } else if (c == '/' && peek(1) == '*') {
      std::size_t start = pos_;
      auto line = line_, col = col_;
      advance();
      advance();
      while (!eof() && !(peek() == '*' && peek(1) == '/')) advance();
      if (eof()) {
        diags_.push_back(make_error("UnterminatedComment", "unterminated block comment",
                                    span_from(start, line, col)));
        return;
      }
      advance();
      advance();
    } else {
      return;
    }
  }
}

Token Lexer::lex_number() {
  std::size_t start = pos_;
  auto line = line_, col = col_;
  bool is_real = false;
  while (digit(peek())) advance();
  if (peek() == '.' && digit(peek(1))) {
    is_real = true;
    advance();
    while (digit(peek())) advance();
  }
  if ((peek() == 'e' || peek() == 'E') &&
      (digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && digit(peek(2))))) {
    is_real = true;
    advance();
    if (peek() == '+' || peek() == '-') advance();
    while (digit(peek())) advance();
  }
  Token t;
  t.span = span_from(start, line, col);
  t.text = std::string(text_.substr(start, pos_ - start));
  if (is_real) {
    t.kind = TokenKind::real;
    t.real_value = std::strtod(t.text.c_str(), nullptr);
  } else {
    t.kind = TokenKind::integer;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.int_value);
    if (ec != std::errc{}) {
      diags_.push_back(make_error("NumberOutOfRange", fmt::format("integer literal '{}' is too large", t.text),
                                  t.span));
      t.int_value = 0;
    }
  }
  return t;
}

Token Lexer::lex_string() {
  std::size_t start = pos_;
  auto line = line_, col = col_;
  advance();  // opening quote
  std::string value;
  bool closed = false;
  while (!eof()) {
    char c = peek();
    if (c == '"') {
      advance();
      closed = true;
      break;
    }
    if (c == '\n') break;
    if (c == '\\') {
      advance();
      char e = peek();
      switch (e) {
        case 'n': value += '\n'; break;
        case 't': value += '\t'; break;
        case 'r': value += '\r'; break;
        case '"': value += '"'; break;
        case '\\': value += '\\'; break;
        default:
          diags_.push_back(make_error("BadEscape", fmt::format("unknown escape sequence '\\{}'", e),
                                      span_from(pos_ - 1, line_, col_ - 1)));
          if (e != '\0') value += e;
      }
      if (!eof()) advance();
      continue;
    }
    value += c;
    advance();
  }
  Token t;
  t.kind = TokenKind::string;
  t.text = std::move(value);
  t.span = span_from(start, line, col);
  if (!closed) diags_.push_back(make_error("UnterminatedString", "unterminated string literal", t.span));
  return t;
}

std::vector<Token> Lexer::tokenize() {
  std::vector<Token> out;
  while (true) {
    skip_trivia();
    if (eof()) break;
    char c = peek();
    if (ident_start(c)) {
      std::size_t start = pos_;
      auto line = line_, col = col_;
      while (ident_continue(peek())) advance();
      Token t;
      t.kind = TokenKind::identifier;
      t.text = std::string(text_.substr(start, pos_ - start));
      t.span = span_from(start, line, col);
      out.push_back(std::move(t));
    } else if (digit(c)) {
      out.push_back(lex_number());
    } else if (c == '"') {
      out.push_back(lex_string());
    } else {
      std::size_t start = pos_;
      auto line = line_, col = col_;
      std::string_view two = text_.substr(pos_, 2);
      bool matched = false;
      for (auto p : kTwoCharPunct) {
        if (two == p) {
          advance();
          advance();
          out.push_back(Token{TokenKind::punct, std::string(p), 0, 0, span_from(start, line, col)});
          matched = true;
          break;
        }
      }
      if (matched) continue;
      advance();
      if (kOneCharPunct.find(c) != std::string_view::npos) {
        out.push_back(Token{TokenKind::punct, std::string(1, c), 0, 0, span_from(start, line, col)});
      } else {
        auto byte = static_cast<unsigned char>(c);
        std::string shown = std::isprint(byte) ? fmt::format("'{}'", c) : fmt::format("0x{:02x}", byte);
        diags_.push_back(make_error("UnexpectedCharacter", "unexpected character " + shown,
                                    span_from(start, line, col)));
      }
    }
  }
  Token end;
  end.kind = TokenKind::end;
  end.span = SourceSpan{file_, line_, col_, pos_, 0};
  out.push_back(std::move(end));
  return out;
}

}  // namespace mlc::frontend
