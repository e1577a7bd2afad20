#include <algorithm>
#include <set>

#include "config_grammar.hpp"
#include "mlcforge/frontend/parser.hpp"

namespace mlc::frontend {

namespace {

using detail::SyntaxError;


class SystemParser : public detail::ConfigParser {
 public:
  using ConfigParser::ConfigParser;

  SystemModel parse_file() {
    SystemModel model;
    if (at_end()) {
      error("SyntaxError", "expected 'thing', 'stub' or 'pipeline', found end of file", peek().span);
      return model;
    }
    while (!at_end()) {
      try {
        if (at_word("thing")) {
          model.things.push_back(parse_thing());
        } else if (at_word("stub")) {
          model.stubs.push_back(parse_stub());
        } else if (at_word("pipeline")) {
          model.pipelines.push_back(parse_pipeline());
        } else {
          fail("'thing', 'stub' or 'pipeline'");
        }
      } catch (const SyntaxError&) {
        recover_to({"thing", "stub", "pipeline"});
      }
    }
    return model;
  }

 private:
  // Things --------------------------------------------------------------------

  ThingDef parse_thing() {
    ThingDef thing;
    thing.span = expect_word("thing").span;
    thing.name = expect_ident("thing name").text;
    expect("{");
    int statecharts = 0;
    std::set<std::string> names;
    auto unique = [&](const std::string& kind, const std::string& name, const SourceSpan& span) {
      if (!names.insert(kind + ":" + name).second)
        error("DuplicateName", fmt::format("{} '{}' declared twice in thing '{}'", kind, name, thing.name), span);
    };
    while (!at("}")) {
      if (at_word("message")) {
        auto m = parse_message();
        unique("message", m.name, m.span);
        thing.messages.push_back(std::move(m));
      } else if (at_word("port")) {
        auto p = parse_thing_port();
        unique("port", p.name, p.span);
        thing.ports.push_back(std::move(p));
      } else if (at_word("property")) {
        auto p = parse_property();
        unique("property", p.name, p.span);
        thing.properties.push_back(std::move(p));
      } else if (at_word("ml")) {
        auto span = peek().span;
        if (thing.ml) error("DuplicateName", "thing declares more than one ml block", span);
        thing.ml = parse_ml();
      } else if (at_word("statechart")) {
        auto span = peek().span;
        if (++statecharts > 1) error("MultipleStatecharts", "thing declares more than one statechart", span);
        thing.statechart = parse_statechart();
      } else {
        fail("'message', 'port', 'property', 'ml', 'statechart' or '}'");
      }
    }
    expect("}");
    thing.span = span_since(thing.span);
    if (statecharts == 0)
      error("MissingStatechart", fmt::format("thing '{}' has no statechart", thing.name), thing.span);
    return thing;
  }

  ValueType parse_value_type() {
    const Token& t = peek();
    if (t.is_word("int")) {
      next();
      return ValueType{PrimitiveType::integer};
    }
    if (t.is_word("real")) {
      next();
      return ValueType{PrimitiveType::real};
    }
    if (t.is_word("bool")) {
      next();
      return ValueType{PrimitiveType::boolean};
    }
    if (t.is_word("string")) {
      next();
      return ValueType{PrimitiveType::string};
    }
    if (t.is_word("Q") || t.is_word("Z")) return ValueType{parse_tensor_type()};
    fail("type (int, real, bool, string, Q(..) or Z(..))");
  }

  MessageDef parse_message() {
    MessageDef m;
    m.span = expect_word("message").span;
    m.name = expect_ident("message name").text;
    expect("(");
    if (!at(")")) {
      do {
        MessageParam p;
        p.name = expect_ident("parameter name").text;
        expect(":");
        p.type = parse_value_type();
        m.params.push_back(std::move(p));
      } while (accept(","));
    }
    expect(")");
    expect(";");
    m.span = span_since(m.span);
    return m;
  }

  ThingPort parse_thing_port() {
    ThingPort p;
    p.span = expect_word("port").span;
    p.name = expect_ident("port name").text;
    if (accept_word("in"))
      p.direction = Direction::in;
    else if (accept_word("out"))
      p.direction = Direction::out;
    else if (accept_word("inout"))
      p.direction = Direction::inout;
    else
      fail("'in', 'out' or 'inout'");
    expect("{");
    if (!at("}")) {
      do {
        p.messages.push_back(expect_ident("message name").text);
      } while (accept(","));
    }
    expect("}");
    accept(";");
    p.span = span_since(p.span);
    return p;
  }

  Property parse_property() {
    Property p;
    p.span = expect_word("property").span;
    p.name = expect_ident("property name").text;
    expect(":");
    p.type = parse_value_type();
    if (accept("=")) p.init = parse_expr();
    expect(";");
    p.span = span_since(p.span);
    return p;
  }

  std::string expect_string(std::string_view what) {
    if (peek().kind != TokenKind::string) fail(std::string(what));
    return next().text;
  }

  MLBlock parse_ml() {
    MLBlock ml;
    ml.span = expect_word("ml").span;
    expect("{");
    bool have_labels = false;
    while (!at("}")) {
      const Token& key = peek();
      if (accept_word("features")) {
        do {
          ml.features.push_back(expect_ident("feature name").text);
        } while (accept(","));
      } else if (accept_word("labels")) {
        have_labels = true;
        const Token& mode = expect_ident("ON, OFF or SEMI");
        if (mode.text == "ON")
          ml.labels = LabelsMode::on;
        else if (mode.text == "OFF")
          ml.labels = LabelsMode::off;
        else if (mode.text == "SEMI")
          ml.labels = LabelsMode::semi;
        else
          error("SyntaxError", fmt::format("expected ON, OFF or SEMI, found '{}'", mode.text), mode.span);
        if (at_ident()) ml.label_name = next().text;
      } else if (accept_word("dataset")) {
        ml.dataset = expect_string("dataset path string");
      } else if (accept_word("model_algorithm")) {
        ml.algorithm = expect_ident("algorithm name").text;
        expect("{");
        parse_block_entries(ml.hyperparameters);
        expect("}");
        continue;
      } else if (accept_word("prediction_results")) {
        ml.prediction_results = expect_string("path string");
      } else if (accept_word("training_results")) {
        ml.training_results = expect_string("path string");
      } else if (accept_word("da_lib")) {
        ml.backend = expect_ident("backend id").text;
      } else if (accept_word("preprocess")) {
        do {
          ml.preprocess.steps.push_back(parse_preprocess_step());
        } while (accept(","));
      } else {
        fail("ml block entry (features, labels, dataset, model_algorithm, prediction_results, "
             "training_results, da_lib, preprocess)");
      }
      (void)key;
      expect(";");
    }
    expect("}");
    ml.span = span_since(ml.span);
    if (ml.features.empty()) error("MissingFeatures", "ml block declares no features", ml.span);
    if (!have_labels) error("MissingLabels", "ml block must declare 'labels ON|OFF|SEMI'", ml.span);
    if (ml.labels != LabelsMode::off && ml.label_name.empty())
      error("MissingLabelName", fmt::format("labels {} requires a label name", to_string(ml.labels)), ml.span);
    if (ml.algorithm.empty()) error("MissingAlgorithm", "ml block declares no model_algorithm", ml.span);
    return ml;
  }

  PreprocessStep parse_preprocess_step() {
    PreprocessStep step;
    const Token& kind = expect_ident("standardize, normalize or one_hot");
    if (kind.text == "standardize")
      step.kind = PreprocessStep::Kind::standardize;
    else if (kind.text == "normalize")
      step.kind = PreprocessStep::Kind::normalize;
    else if (kind.text == "one_hot")
      step.kind = PreprocessStep::Kind::one_hot;
    else
      error("SyntaxError", fmt::format("unknown preprocessing step '{}'", kind.text), kind.span);
    expect("(");
    do {
      step.columns.push_back(expect_ident("column name").text);
    } while (accept(","));
    expect(")");
    return step;
  }

  // Statecharts ---------------------------------------------------------------

  StateMachine parse_statechart() {
    StateMachine sm;
    sm.span = expect_word("statechart").span;
    sm.name = expect_ident("statechart name").text;
    expect("{");
    while (!at("}")) {
      State st;
      st.span = peek().span;
      if (accept_word("initial")) st.initial = true;
      expect_word("state");
      st.name = expect_ident("state name").text;
      expect("{");
      while (!at("}")) st.transitions.push_back(parse_transition());
      expect("}");
      st.span = span_since(st.span);
      if (sm.state(st.name))
        error("DuplicateState", fmt::format("state '{}' declared twice", st.name), st.span);
      sm.states.push_back(std::move(st));
    }
    expect("}");
    sm.span = span_since(sm.span);
    return sm;
  }

  Transition parse_transition() {
    Transition tr;
    tr.span = peek().span;
    if (accept_word("on")) {
      Trigger trig;
      trig.span = peek().span;
      trig.port = expect_ident("port name").text;
      expect("?");
      trig.message = expect_ident("message name").text;
      if (accept("(")) {
        if (!at(")")) {
          do {
            trig.params.push_back(expect_ident("parameter name").text);
          } while (accept(","));
        }
        expect(")");
      }
      trig.span = span_since(trig.span);
      tr.trigger = std::move(trig);
    } else if (!accept_word("auto")) {
      fail("'on', 'auto' or '}'");
    }
    if (accept("[")) {
      tr.guard = parse_expr();
      expect("]");
    }
    if (accept("->")) tr.target = expect_ident("target state").text;
    if (accept("/")) {
      while (true) {
        if (at("}") || at_word("on") || at_word("auto")) break;
        tr.actions.push_back(parse_action());
        if (!accept(";")) break;
      }
    }
    accept(";");
    tr.span = span_since(tr.span);
    return tr;
  }

  Action parse_action() {
    Action a;
    a.span = peek().span;
    if (accept_word("da_preprocess")) {
      a.kind = PreprocessAction{};
    } else if (accept_word("da_train")) {
      a.kind = TrainAction{};
    } else if (accept_word("da_predict")) {
      PredictAction p;
      expect("(");
      if (!at("->")) {
        do {
          p.inputs.push_back(parse_expr());
        } while (accept(","));
      }
      expect("->");
      p.result = expect_ident("result property").text;
      expect(")");
      a.kind = std::move(p);
    } else if (at_ident() && peek(1).is("!")) {
      SendAction s;
      s.port = next().text;
      next();
      s.message = expect_ident("message name").text;
      expect("(");
      if (!at(")")) {
        do {
          s.args.push_back(parse_expr());
        } while (accept(","));
      }
      expect(")");
      a.kind = std::move(s);
    } else if (at_ident() && peek(1).is("=")) {
      AssignAction as;
      as.target = next().text;
      next();
      as.value = parse_expr();
      a.kind = std::move(as);
    } else {
      fail("action");
    }
    a.span = span_since(a.span);
    return a;
  }

  // Expressions ---------------------------------------------------------------

  Expr parse_expr() { return parse_binary(0); }

  static int precedence(const Token& t) {
    if (t.kind != TokenKind::punct) return -1;
    if (t.text == "||") return 0;
    if (t.text == "&&") return 1;
    if (t.text == "==" || t.text == "!=") return 2;
    if (t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=") return 3;
    if (t.text == "+" || t.text == "-") return 4;
    if (t.text == "*" || t.text == "/" || t.text == "%") return 5;
    return -1;
  }

  Expr parse_binary(int min_prec) {
    DepthGuard guard(*this);
    Expr lhs = parse_unary();
    while (true) {
      int prec = precedence(peek());
      if (prec < min_prec) return lhs;
      Token op = next();
      Expr rhs = parse_binary(prec + 1);
      Expr bin;
      bin.kind = Expr::Kind::binary;
      bin.text = op.text;
      bin.span = lhs.span;
      std::size_t end = rhs.span.offset + rhs.span.length;
      bin.span.length = end > bin.span.offset ? end - bin.span.offset : 0;
      bin.operands.push_back(std::move(lhs));
      bin.operands.push_back(std::move(rhs));
      lhs = std::move(bin);
    }
  }

  Expr parse_unary() {
    DepthGuard guard(*this);
    if (at("!") || at("-")) {
      Token op = next();
      Expr operand = parse_unary();
      // Fold negative literals so they print and compare as literals.
      if (op.text == "-" && operand.kind == Expr::Kind::int_lit && operand.operands.empty() &&
          operand.int_value >= 0) {
        operand.int_value = -operand.int_value;
        operand.span.offset = op.span.offset;
        operand.span.column = op.span.column;
        return operand;
      }
      if (op.text == "-" && operand.kind == Expr::Kind::real_lit && !(operand.real_value < 0)) {
        operand.real_value = -operand.real_value;
        operand.span.offset = op.span.offset;
        operand.span.column = op.span.column;
        return operand;
      }
      Expr u;
      u.kind = Expr::Kind::unary;
      u.text = op.text;
      u.span = op.span;
      u.operands.push_back(std::move(operand));
      u.span = span_since(u.span);
      return u;
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = peek();
    Expr e;
    e.span = t.span;
    switch (t.kind) {
      case TokenKind::integer:
        e.kind = Expr::Kind::int_lit;
        e.int_value = t.int_value;
        next();
        return e;
      case TokenKind::real:
        e.kind = Expr::Kind::real_lit;
        e.real_value = t.real_value;
        next();
        return e;
      case TokenKind::string:
        e.kind = Expr::Kind::string_lit;
        e.text = t.text;
        next();
        return e;
      case TokenKind::identifier:
        if (t.text == "true" || t.text == "false") {
          e.kind = Expr::Kind::bool_lit;
          e.bool_value = t.text == "true";
        } else {
          e.kind = Expr::Kind::name;
          e.text = t.text;
        }
        next();
        return e;
      default:
        break;
    }
    if (accept("(")) {
      Expr inner = parse_expr();
      expect(")");
      return inner;
    }
    fail("expression");
  }

  // Stubs and pipelines ---------------------------------------------------------

  StubDef parse_stub() {
    StubDef stub;
    stub.span = expect_word("stub").span;
    stub.name = expect_ident("stub name").text;
    expect("{");
    while (!at("}")) {
      TensorPort p;
      p.span = peek().span;
      if (accept_word("in"))
        p.direction = Direction::in;
      else if (accept_word("out"))
        p.direction = Direction::out;
      else
        fail("'in', 'out' or '}'");
      const Token& name = peek();
      if (name.kind != TokenKind::identifier && name.kind != TokenKind::string) fail("port name");
      if (name.kind == TokenKind::string && name.text.empty())
        error("SyntaxError", "port name must not be empty", name.span);
      p.name = next().text;
      expect(":");
      p.type = parse_tensor_type();
      expect(";");
      p.span = span_since(p.span);
      if (stub.port(p.name))
        error("DuplicateName", fmt::format("port '{}' declared twice in stub '{}'", p.name, stub.name), p.span);
      stub.ports.push_back(std::move(p));
    }
    expect("}");
    stub.span = span_since(stub.span);
    return stub;
  }

  Endpoint parse_endpoint() {
    Endpoint e;
    e.instance = expect_ident("instance name").text;
    expect(".");
    const Token& port = peek();
    if (port.kind != TokenKind::identifier && port.kind != TokenKind::string) fail("port name");
    e.port = next().text;
    return e;
  }

  PipelineGraph parse_pipeline() {
    PipelineGraph p;
    p.span = expect_word("pipeline").span;
    p.name = expect_ident("pipeline name").text;
    expect("{");
    while (!at("}")) {
      if (at_word("instance")) {
        Instance inst;
        inst.span = next().span;
        inst.name = expect_ident("instance name").text;
        expect(":");
        inst.type_name = expect_ident("component type").text;
        if (accept("<")) {
          do {
            GenericBinding b;
            b.span = peek().span;
            if (at_ident() && peek(1).is("=")) {
              b.name = next().text;
              next();
            }
            b.value = expect_integer("generic value");
            b.span = span_since(b.span);
            inst.bindings.push_back(std::move(b));
          } while (accept(","));
          expect(">");
        }
        expect(";");
        inst.span = span_since(inst.span);
        if (p.instance(inst.name))
          error("DuplicateName", fmt::format("instance '{}' declared twice", inst.name), inst.span);
        p.instances.push_back(std::move(inst));
      } else if (at_word("connect")) {
        Connector c;
        c.span = next().span;
        c.from = parse_endpoint();
        expect("->");
        c.to = parse_endpoint();
        expect(";");
        c.span = span_since(c.span);
        p.connectors.push_back(std::move(c));
      } else {
        fail("'instance', 'connect' or '}'");
      }
    }
    expect("}");
    p.span = span_since(p.span);
    return p;
  }
};

}  // namespace

SystemResult parse_system(std::string_view text, const std::string& file) {
  SystemParser parser(text, file);
  SystemResult r;
  r.model = parser.parse_file();
  r.diagnostics = parser.take_diagnostics();
  return r;
}

}  // namespace mlc::frontend
