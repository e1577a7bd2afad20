#pragma once

#include "mlcforge/core/config.hpp"
#include "parser_base.hpp"

namespace mlc::frontend::detail {

/// Grammar of `.tcl` documents and values, shared by every parser that
/// embeds configuration blocks.
class ConfigParser : public ParserBase {
 public:
  using ParserBase::ParserBase;

  ConfigTree parse_document() {
    ConfigTree tree;
    parse_entries(tree, /*top_level=*/true);
    return tree;
  }

  std::optional<ConfigValue> parse_single_value() {
    try {
      if (at_end()) fail("value");
      ConfigValue v = parse_value();
      if (!at_end()) fail("end of input");
      return v;
    } catch (const SyntaxError&) {
      return std::nullopt;
    }
  }

  /// Used by the system parser for embedded `{ ... }` blocks.
  void parse_block_entries(ConfigTree& tree) { parse_entries(tree, false); }

 protected:
  static bool is_key_token(const Token& t) {
    return t.kind == TokenKind::identifier || t.kind == TokenKind::string;
  }

  void parse_entries(ConfigTree& tree, bool top_level) {
    while (true) {
      while (accept(",") || accept(";")) {
      }
      if (at_end()) {
        if (!top_level) fail("'}'");
        return;
      }
      if (at("}")) {
        if (top_level) {
          try {
            fail("key");
          } catch (const SyntaxError&) {
            next();
            continue;
          }
        }
        return;
      }
      if (top_level) {
        try {
          parse_entry(tree);
        } catch (const SyntaxError&) {
          recover_entry();
        }
      } else {
        parse_entry(tree);
      }
    }
  }

  /// Skips to an identifier at brace depth zero on a later line.
  void recover_entry() {
    std::uint32_t line = peek().span.line;
    int depth = 0;
    if (!at_end()) {
      if (at("{")) ++depth;
      if (at("}") && depth > 0) --depth;
      next();
    }
    while (!at_end()) {
      const Token& t = peek();
      if (depth == 0 && is_key_token(t) && t.span.line > line) return;
      if (t.is("{")) ++depth;
      if (t.is("}") && depth > 0) --depth;
      next();
    }
  }

  void parse_entry(ConfigTree& tree) {
    DepthGuard guard(*this);
    const Token& key_tok = peek();
    if (!is_key_token(key_tok)) fail("key");
    next();
    ConfigEntry entry;
    entry.key = key_tok.text;
    entry.key_span = key_tok.span;
    if (at("{")) {
      entry.value = parse_value();
    } else {
      if (!accept(":")) {
        if (!accept("=")) fail("':' or '{'");
      }
      entry.value = parse_value();
    }
    if (const ConfigEntry* prior = tree.entry(entry.key)) {
      auto d = make_error("DuplicateKey", fmt::format("duplicate key '{}'", entry.key), entry.key_span);
      d.related.push_back(prior->key_span);
      diags_.push_back(std::move(d));
      return;
    }
    tree.entries.push_back(std::move(entry));
  }

  ConfigValue parse_value() {
    DepthGuard guard(*this);
    const Token& t = peek();
    SourceSpan start = t.span;
    ConfigValue v;
    if (accept("{")) {
      ConfigTree nested;
      parse_entries(nested, false);
      expect("}");
      v = ConfigValue(std::move(nested));
    } else if (at("(") || at("[")) {
      std::string close = at("(") ? ")" : "]";
      next();
      ConfigList list;
      while (!at(close)) {
        list.items.push_back(parse_value());
        if (!accept(",")) break;
      }
      expect(close);
      v = ConfigValue(std::move(list));
    } else if (at("-")) {
      next();
      const Token& n = peek();
      if (n.kind == TokenKind::integer)
        v = ConfigValue(-n.int_value);
      else if (n.kind == TokenKind::real)
        v = ConfigValue(-n.real_value);
      else
        fail("number after '-'");
      next();
    } else {
      switch (t.kind) {
        case TokenKind::integer: v = ConfigValue(t.int_value); break;
        case TokenKind::real: v = ConfigValue(t.real_value); break;
        case TokenKind::string: v = ConfigValue(t.text); break;
        case TokenKind::identifier:
          if (t.text == "true")
            v = ConfigValue(true);
          else if (t.text == "false")
            v = ConfigValue(false);
          else
            v = ConfigValue(mlc::Token{t.text});
          break;
        default: fail("value");
      }
      next();
    }
    v.span = span_since(start);
    return v;
  }
};


}  // namespace mlc::frontend::detail
