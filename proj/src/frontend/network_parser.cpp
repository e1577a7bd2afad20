#include <algorithm>
#include <optional>
#include <set>

#include "mlcforge/frontend/parser.hpp"
#include "parser_base.hpp"

namespace mlc::frontend {

namespace {

using detail::SyntaxError;

constexpr std::string_view kPrimitiveLayers[] = {"Convolution", "Pooling", "FullyConnected", "Flatten",
                                                 "Relu",        "Sigmoid", "Tanh",           "Softmax",
                                                 "Dropout",     "ImportPretrained"};

/// Layer names reserved for architecture search; recognized so they can be rejected clearly.
constexpr std::string_view kWildcardLayers[] = {"AdaNet", "Wildcard"};

struct RawArg {
  std::optional<std::string> name;
  enum class Kind { integer, real, symbol, string, boolean, pair } kind = Kind::integer;
  std::int64_t int_value = 0;
  double real_value = 0;
  std::string text;
  bool bool_value = false;
  DimExpr first, second;
  SourceSpan span;
};

class NetworkParser : public detail::ParserBase {
 public:
  using ParserBase::ParserBase;

  std::vector<NetworkArch> parse_file() {
    std::vector<NetworkArch> out;
    if (at_end()) {
      error("SyntaxError", "expected 'component', found end of file", peek().span);
      return out;
    }
    while (!at_end()) {
      try {
        if (!at_word("component")) fail("'component'");
        out.push_back(parse_component());
      } catch (const SyntaxError&) {
        recover_to({"component"});
      }
    }
    return out;
  }

 private:
  NetworkArch parse_component() {
    NetworkArch arch;
    arch.span = expect_word("component").span;
    arch.name = expect_ident("component name").text;
    if (accept("<")) {
      do {
        const Token& g = expect_ident("generic parameter");
        arch.generics.push_back(GenericParam{g.text, g.span});
      } while (accept(","));
      expect(">");
    }
    expect("{");
    bool have_net = false;
    while (!at("}")) {
      if (at_word("ports")) {
        parse_ports(arch);
      } else if (at_word("def")) {
        auto block = parse_def();
        if (arch.def_block(block.name))
          error("DuplicateName", fmt::format("def block '{}' declared twice", block.name), block.span);
        arch.def_blocks.push_back(std::move(block));
      } else if (at_word("net")) {
        auto span = peek().span;
        if (have_net) error("DuplicateName", "component declares more than one 'net' body", span);
        arch.body = parse_net();
        have_net = true;
      } else {
        fail("'ports', 'def', 'net' or '}'");
      }
    }
    expect("}");
    arch.span = span_since(arch.span);
    if (!have_net) error("MissingNet", fmt::format("component '{}' has no 'net' body", arch.name), arch.span);
    check_ports(arch, have_net);
    return arch;
  }

  void parse_ports(NetworkArch& arch) {
    expect_word("ports");
    do {
      TensorPort port;
      const Token& dir = peek();
      if (dir.is_word("in"))
        port.direction = Direction::in;
      else if (dir.is_word("out"))
        port.direction = Direction::out;
      else
        fail("'in' or 'out'");
      port.span = next().span;
      port.name = expect_ident("port name").text;
      expect(":");
      port.type = parse_tensor_type();
      port.span = span_since(port.span);
      if (arch.port(port.name))
        error("DuplicateName", fmt::format("port '{}' declared twice", port.name), port.span);
      arch.ports.push_back(std::move(port));
    } while (accept(","));
    expect(";");
  }

  DefBlock parse_def() {
    DefBlock block;
    block.span = expect_word("def").span;
    block.name = expect_ident("def block name").text;
    if (is_primitive_layer(block.name))
      error("ReservedName", fmt::format("'{}' is a primitive layer name", block.name), peek().span);
    expect("(");
    if (!at(")")) {
      do {
        block.params.push_back(expect_ident("parameter name").text);
      } while (accept(","));
    }
    expect(")");
    expect("{");
    if (!at("}")) block.body = parse_steps();
    expect("}");
    block.span = span_since(block.span);
    return block;
  }

  NetBody parse_net() {
    NetBody body;
    body.span = expect_word("net").span;
    expect("{");
    const Token& in = expect_ident("input port name");
    body.input = in.text;
    expect("->");
    auto steps = parse_steps();
    // The last element names the output port.
    auto* last = std::get_if<BlockCall>(&steps.back());
    if (last == nullptr || !last->args.empty())
      fail("output port name at the end of the net body");
    body.output = last->name;
    steps.pop_back();
    body.steps = std::move(steps);
    expect("}");
    body.span = span_since(body.span);
    return body;
  }

  std::vector<LayerStep> parse_steps() {
    std::vector<LayerStep> steps;
    do {
      steps.push_back(parse_step());
    } while (accept("->"));
    return steps;
  }

  LayerStep parse_step() {
    const Token& name_tok = expect_ident("layer");
    std::string name = name_tok.text;
    SourceSpan span = name_tok.span;
    std::vector<RawArg> args;
    bool has_parens = false;
    if (accept("(")) {
      has_parens = true;
      if (!at(")")) {
        do {
          args.push_back(parse_arg());
        } while (accept(","));
      }
      expect(")");
    }
    span = span_since(span);
    if (std::find(std::begin(kWildcardLayers), std::end(kWildcardLayers), name) != std::end(kWildcardLayers)) {
      error("WildcardLayer",
            fmt::format("wildcard layer '{}' (architecture search) is not supported", name), span);
      return LayerSpec{Relu{}, span};
    }
    if (is_primitive_layer(name)) return LayerSpec{build_layer(name, args, span), span};
    BlockCall call;
    call.name = name;
    call.span = span;
    (void)has_parens;
    for (auto& a : args) {
      BlockArg arg;
      arg.name = a.name;
      arg.span = a.span;
      if (a.kind == RawArg::Kind::integer) {
        arg.value = DimExpr(a.int_value);
      } else if (a.kind == RawArg::Kind::symbol) {
        arg.value = DimExpr(a.text);
      } else {
        error("InvalidArgument", fmt::format("def block '{}' takes integer arguments", name), a.span);
      }
      call.args.push_back(std::move(arg));
    }
    return call;
  }

  RawArg parse_arg() {
    RawArg arg;
    arg.span = peek().span;
    if (at_ident() && peek(1).is("=")) {
      arg.name = next().text;
      next();
    }
    bool negative = accept("-");
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::integer:
        arg.kind = RawArg::Kind::integer;
        arg.int_value = negative ? -t.int_value : t.int_value;
        next();
        break;
      case TokenKind::real:
        arg.kind = RawArg::Kind::real;
        arg.real_value = negative ? -t.real_value : t.real_value;
        next();
        break;
      case TokenKind::string:
        arg.kind = RawArg::Kind::string;
        arg.text = t.text;
        next();
        break;
      case TokenKind::identifier:
        if (t.text == "true" || t.text == "false") {
          arg.kind = RawArg::Kind::boolean;
          arg.bool_value = t.text == "true";
        } else {
          arg.kind = RawArg::Kind::symbol;
          arg.text = t.text;
        }
        next();
        break;
      default:
        if (at("(")) {
          next();
          arg.kind = RawArg::Kind::pair;
          arg.first = parse_dim();
          expect(",");
          arg.second = parse_dim();
          expect(")");
        } else {
          fail("layer argument");
        }
    }
    arg.span = span_since(arg.span);
    return arg;
  }

  DimExpr parse_dim() {
    const Token& t = peek();
    if (t.kind == TokenKind::integer) {
      next();
      return DimExpr(t.int_value);
    }
    if (t.kind == TokenKind::identifier) {
      next();
      return DimExpr(t.text);
    }
    fail("dimension");
  }

  // Layer construction ------------------------------------------------------

  struct ArgBinder {
    NetworkParser& p;
    const std::string& layer;
    const std::vector<RawArg>& args;
    const SourceSpan& span;
    std::vector<std::string> names;
    std::vector<const RawArg*> bound;

    ArgBinder(NetworkParser& parser, const std::string& l, const std::vector<RawArg>& a, const SourceSpan& s,
              std::vector<std::string> n)
        : p(parser), layer(l), args(a), span(s), names(std::move(n)), bound(names.size(), nullptr) {
      std::size_t positional = 0;
      for (const auto& arg : args) {
        std::size_t slot = 0;
        if (arg.name) {
          auto it = std::find(names.begin(), names.end(), *arg.name);
          if (it == names.end()) {
            p.error("InvalidArgument", fmt::format("{} has no parameter '{}'", layer, *arg.name), arg.span);
            continue;
          }
          slot = static_cast<std::size_t>(it - names.begin());
        } else {
          if (positional >= names.size()) {
            p.error("InvalidArgument", fmt::format("too many arguments for {}", layer), arg.span);
            continue;
          }
          slot = positional++;
        }
        if (bound[slot] != nullptr)
          p.error("InvalidArgument", fmt::format("{} parameter '{}' given twice", layer, names[slot]), arg.span);
        bound[slot] = &arg;
      }
    }

    const RawArg* get(std::size_t slot) const { return bound[slot]; }

    DimExpr dim(std::size_t slot, std::optional<std::int64_t> fallback) {
      const RawArg* a = bound[slot];
      if (a == nullptr) {
        if (!fallback)
          p.error("InvalidArgument", fmt::format("{} requires '{}'", layer, names[slot]), span);
        return DimExpr(fallback.value_or(1));
      }
      if (a->kind == RawArg::Kind::symbol) return DimExpr(a->text);
      if (a->kind != RawArg::Kind::integer) {
        p.error("InvalidArgument", fmt::format("{} '{}' must be an integer", layer, names[slot]), a->span);
        return DimExpr(fallback.value_or(1));
      }
      if (a->int_value < 1) {
        p.error("InvalidArgument", fmt::format("{} '{}' must be positive", layer, names[slot]), a->span);
        return DimExpr(fallback.value_or(1));
      }
      return DimExpr(a->int_value);
    }

    std::string word(std::size_t slot, std::initializer_list<std::string_view> allowed, std::string fallback) {
      const RawArg* a = bound[slot];
      if (a == nullptr) return fallback;
      if (a->kind == RawArg::Kind::symbol || a->kind == RawArg::Kind::string) {
        for (auto w : allowed)
          if (a->text == w) return a->text;
      }
      std::string options;
      for (auto w : allowed) options += (options.empty() ? "" : ", ") + std::string(w);
      p.error("InvalidArgument", fmt::format("{} '{}' must be one of {}", layer, names[slot], options), a->span);
      return fallback;
    }
  };

  LayerKind build_layer(const std::string& name, const std::vector<RawArg>& args, const SourceSpan& span) {
    if (name == "Convolution") {
      ArgBinder b(*this, name, args, span, {"kernel", "channels", "stride", "padding"});
      Convolution c;
      if (const RawArg* k = b.get(0); k != nullptr && k->kind == RawArg::Kind::pair) {
        c.kernel_h = k->first;
        c.kernel_w = k->second;
        for (const auto* d : {&c.kernel_h, &c.kernel_w})
          if (d->concrete() && d->extent() < 1) error("InvalidArgument", "Convolution kernel must be positive", k->span);
      } else {
        c.kernel_h = b.dim(0, std::nullopt);
        c.kernel_w = c.kernel_h;
      }
      c.channels = b.dim(1, std::nullopt);
      c.stride = b.dim(2, 1);
      c.padding = b.word(3, {"valid", "same"}, "valid") == "same" ? Padding::same : Padding::valid;
      return c;
    }
    if (name == "Pooling") {
      ArgBinder b(*this, name, args, span, {"kind", "window", "stride"});
      Pooling p;
      p.kind = b.word(0, {"max", "avg"}, "max") == "avg" ? PoolKind::avg : PoolKind::max;
      if (b.get(0) == nullptr) error("InvalidArgument", "Pooling requires 'kind' (max or avg)", span);
      p.window = b.dim(1, std::nullopt);
      p.stride = b.dim(2, std::nullopt);
      if (b.get(2) == nullptr) p.stride = p.window;
      return p;
    }
    if (name == "FullyConnected") {
      ArgBinder b(*this, name, args, span, {"units"});
      return FullyConnected{b.dim(0, std::nullopt)};
    }
    if (name == "Dropout") {
      ArgBinder b(*this, name, args, span, {"rate"});
      Dropout d;
      const RawArg* r = b.get(0);
      if (r == nullptr) {
        error("InvalidArgument", "Dropout requires 'rate'", span);
      } else if (r->kind == RawArg::Kind::real || r->kind == RawArg::Kind::integer) {
        d.rate = r->kind == RawArg::Kind::real ? r->real_value : static_cast<double>(r->int_value);
        if (d.rate < 0 || d.rate > 1) error("InvalidArgument", "Dropout rate must lie in [0, 1]", r->span);
      } else {
        error("InvalidArgument", "Dropout rate must be a number", r->span);
      }
      return d;
    }
    if (name == "ImportPretrained") {
      ArgBinder b(*this, name, args, span, {"archive", "frozen"});
      ImportPretrained imp;
      if (const RawArg* a = b.get(0); a != nullptr && a->kind == RawArg::Kind::string)
        imp.archive = a->text;
      else
        error("InvalidArgument", "ImportPretrained requires an archive reference string", span);
      if (const RawArg* f = b.get(1)) {
        if (f->kind == RawArg::Kind::boolean)
          imp.frozen = f->bool_value;
        else
          error("InvalidArgument", "ImportPretrained 'frozen' must be true or false", f->span);
      }
      return imp;
    }
    if (!args.empty()) error("InvalidArgument", fmt::format("{} takes no arguments", name), span);
    if (name == "Flatten") return Flatten{};
    if (name == "Relu") return Relu{};
    if (name == "Sigmoid") return Sigmoid{};
    if (name == "Tanh") return Tanh{};
    return Softmax{};
  }

  void check_ports(const NetworkArch& arch, bool have_net) {
    std::set<std::string> generics;
    for (const auto& g : arch.generics) {
      if (!generics.insert(g.name).second)
        error("DuplicateName", fmt::format("generic parameter '{}' declared twice", g.name), g.span);
    }
    for (const auto& b : arch.def_blocks) {
      for (const auto& p : b.params) {
        if (generics.count(p))
          error("ShadowedGeneric", fmt::format("def block parameter '{}' shadows a generic parameter", p), b.span);
      }
    }
    if (!have_net) return;
    const TensorPort* in = arch.port(arch.body.input);
    if (in == nullptr || in->direction != Direction::in)
      error("UnknownPort", fmt::format("net body must start at an input port; '{}' is not one", arch.body.input),
            arch.body.span);
    const TensorPort* out = arch.port(arch.body.output);
    if (out == nullptr || out->direction != Direction::out)
      error("UnknownPort", fmt::format("net body must end at an output port; '{}' is not one", arch.body.output),
            arch.body.span);
  }
};

}  // namespace

bool is_primitive_layer(std::string_view name) {
  return std::find(std::begin(kPrimitiveLayers), std::end(kPrimitiveLayers), name) != std::end(kPrimitiveLayers);
}

NetworksResult parse_networks(std::string_view text, const std::string& file) {
  NetworkParser parser(text, file);
  NetworksResult r;
  r.networks = parser.parse_file();
  r.diagnostics = parser.take_diagnostics();
  return r;
}

NetworkResult parse_network(std::string_view text, const std::string& file) {
  auto all = parse_networks(text, file);
  NetworkResult r;
  r.diagnostics = std::move(all.diagnostics);
  if (!has_errors(r.diagnostics) && !all.networks.empty()) r.arch = std::move(all.networks.front());
  return r;
}

}  // namespace mlc::frontend
