#include "mlcforge/core/elaborate.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "mlcforge/core/error.hpp"

namespace mlc {

void for_each_dim(LayerKind& kind, const std::function<void(DimExpr&)>& fn) {
  if (auto* c = std::get_if<Convolution>(&kind)) {
    fn(c->kernel_h);
    fn(c->kernel_w);
    fn(c->channels);
    fn(c->stride);
  } else if (auto* p = std::get_if<Pooling>(&kind)) {
    fn(p->window);
    fn(p->stride);
  } else if (auto* f = std::get_if<FullyConnected>(&kind)) {
    fn(f->units);
  }
}

void for_each_dim(const LayerKind& kind, const std::function<void(const DimExpr&)>& fn) {
  auto copy = kind;
  for_each_dim(copy, [&](DimExpr& d) { fn(d); });
}

namespace {

using SymbolMap = std::map<std::string, std::int64_t>;

void substitute(DimExpr& d, const SymbolMap& symbols) {
  if (d.concrete()) return;
  if (auto it = symbols.find(d.symbol()); it != symbols.end()) d = DimExpr(it->second);
}

void substitute(std::vector<LayerStep>& steps, const SymbolMap& symbols) {
  for (auto& step : steps) {
    if (auto* layer = std::get_if<LayerSpec>(&step)) {
      for_each_dim(layer->kind, [&](DimExpr& d) { substitute(d, symbols); });
    } else {
      for (auto& arg : std::get<BlockCall>(step).args) substitute(arg.value, symbols);
    }
  }
}

void require_known(const std::vector<LayerStep>& steps, const std::set<std::string>& allowed,
                   const std::string& where) {
  auto check = [&](const DimExpr& d, const SourceSpan& span) {
    if (!d.concrete() && !allowed.count(d.symbol()))
      throw ModelError("UnknownSymbol",
                       fmt::format("unknown dimension symbol '{}' in {}", d.symbol(), where), span);
  };
  for (const auto& step : steps) {
    if (const auto* layer = std::get_if<LayerSpec>(&step)) {
      for_each_dim(layer->kind, [&](const DimExpr& d) { check(d, layer->span); });
    } else {
      for (const auto& arg : std::get<BlockCall>(step).args) check(arg.value, arg.span);
    }
  }
}

}  // namespace

NetworkArch resolve_generics(const NetworkArch& arch, const Bindings& bindings) {
  SymbolMap symbols;
  for (const auto& g : arch.generics) {
    auto it = bindings.find(g.name);
    if (it == bindings.end())
      throw ModelError("MissingBinding",
                       fmt::format("generic parameter '{}' of '{}' is not bound", g.name, arch.name),
                       g.span);
    if (it->second <= 0)
      throw ModelError("NonPositiveBinding",
                       fmt::format("generic parameter '{}' bound to non-positive value {}", g.name,
                                   it->second),
                       g.span);
    symbols.emplace(g.name, it->second);
  }
  for (const auto& [name, value] : bindings) {
    if (!symbols.count(name))
      throw ModelError("UnknownGeneric",
                       fmt::format("'{}' has no generic parameter '{}'", arch.name, name), arch.span);
  }

  NetworkArch out = arch;
  out.generics.clear();
  for (auto& port : out.ports) {
    for (auto& d : port.type.dims) {
      substitute(d, symbols);
      if (!d.concrete())
        throw ModelError("UnknownSymbol",
                         fmt::format("unknown dimension symbol '{}' in port '{}'", d.symbol(), port.name),
                         port.span);
    }
  }
  for (auto& block : out.def_blocks) {
    SymbolMap visible = symbols;
    for (const auto& p : block.params) visible.erase(p);  // block parameters shadow generics
    substitute(block.body, visible);
    std::set<std::string> allowed(block.params.begin(), block.params.end());
    require_known(block.body, allowed, fmt::format("def block '{}'", block.name));
  }
  substitute(out.body.steps, symbols);
  require_known(out.body.steps, {}, fmt::format("net body of '{}'", arch.name));
  return out;
}

namespace {

class Expander {
 public:
  explicit Expander(const NetworkArch& arch) : arch_(arch) {}

  void check_acyclic() {
    for (const auto& block : arch_.def_blocks) {
      std::vector<std::string> chain;
      visit(block.name, chain);
    }
  }

  void expand(const std::vector<LayerStep>& steps, std::vector<LayerStep>& out) {
    for (const auto& step : steps) {
      if (const auto* layer = std::get_if<LayerSpec>(&step)) {
        for_each_dim(layer->kind, [&](const DimExpr& d) {
          if (!d.concrete())
            throw ModelError("UnresolvedDim",
                             fmt::format("dimension '{}' is not concrete", d.symbol()), layer->span);
        });
        out.push_back(*layer);
        continue;
      }
      const auto& call = std::get<BlockCall>(step);
      const DefBlock* block = arch_.def_block(call.name);
      if (block == nullptr)
        throw ModelError("UnknownDefBlock", fmt::format("unknown layer or def block '{}'", call.name),
                         call.span);
      auto body = block->body;
      substitute(body, bind(*block, call));
      expand(body, out);
    }
  }

 private:
  static SymbolMap bind(const DefBlock& block, const BlockCall& call) {
    SymbolMap values;
    std::size_t positional = 0;
    for (const auto& arg : call.args) {
      std::string param;
      if (arg.name) {
        if (std::find(block.params.begin(), block.params.end(), *arg.name) == block.params.end())
          throw ModelError("BlockArity",
                           fmt::format("def block '{}' has no parameter '{}'", block.name, *arg.name),
                           arg.span);
        param = *arg.name;
      } else {
        if (positional >= block.params.size())
          throw ModelError("BlockArity",
                           fmt::format("too many arguments for def block '{}'", block.name), arg.span);
        param = block.params[positional++];
      }
      if (!arg.value.concrete())
        throw ModelError("UnresolvedDim",
                         fmt::format("argument '{}' of '{}' is not concrete", param, block.name),
                         arg.span);
      if (!values.emplace(param, arg.value.extent()).second)
        throw ModelError("BlockArity",
                         fmt::format("parameter '{}' of '{}' given twice", param, block.name), arg.span);
    }
    for (const auto& p : block.params) {
      if (!values.count(p))
        throw ModelError("BlockArity",
                         fmt::format("missing argument '{}' for def block '{}'", p, block.name),
                         call.span);
    }
    return values;
  }

  void visit(const std::string& name, std::vector<std::string>& chain) {
    if (std::find(chain.begin(), chain.end(), name) != chain.end()) {
      std::string text;
      auto start = std::find(chain.begin(), chain.end(), name);
      for (auto it = start; it != chain.end(); ++it) text += *it + " -> ";
      text += name;
      const DefBlock* b = arch_.def_block(name);
      throw ModelError("CyclicDefBlock", "cyclic def blocks: " + text, b ? b->span : arch_.span);
    }
    const DefBlock* block = arch_.def_block(name);
    if (block == nullptr) return;  // reported as UnknownDefBlock on use
    chain.push_back(name);
    for (const auto& step : block->body) {
      if (const auto* call = std::get_if<BlockCall>(&step)) visit(call->name, chain);
    }
    chain.pop_back();
  }

  const NetworkArch& arch_;
};

}  // namespace

NetworkArch expand_def_blocks(const NetworkArch& arch) {
  Expander expander(arch);
  expander.check_acyclic();
  NetworkArch out = arch;
  out.body.steps.clear();
  expander.expand(arch.body.steps, out.body.steps);
  out.def_blocks.clear();
  return out;
}

Bindings bindings_for(const NetworkArch& arch, const Instance& instance) {
  Bindings out;
  std::size_t positional = 0;
  for (const auto& b : instance.bindings) {
    if (b.name) {
      out[*b.name] = b.value;
    } else if (positional < arch.generics.size()) {
      out[arch.generics[positional++].name] = b.value;
    } else {
      throw ModelError("UnknownGeneric",
                       fmt::format("too many generic arguments for '{}'", arch.name), b.span);
    }
  }
  return out;
}

}  // namespace mlc
