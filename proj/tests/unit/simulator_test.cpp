#include <gtest/gtest.h>

#include "mlcforge/analysis/analyze.hpp"
#include "mlcforge/buildsys/execute.hpp"
#include "mlcforge/buildsys/plan.hpp"
#include "mlcforge/codegen/generate.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/project.hpp"
#include "mlcforge/simulator/simulator.hpp"
#include "mlcforge/support/mock_bridge.hpp"
#include "test_support.hpp"

namespace mlc::simulator {
namespace {

using mlc::testing::TempDir;
using mlc::testing::write_file;
namespace fs = std::filesystem;

Scenario scenario(const std::string& text) {
  auto r = parse_scenario(text, "t.scn");
  if (!r.scenario) throw std::runtime_error(render(r.diagnostics));
  return *r.scenario;
}

Scenario calculator() {
  auto r = load_scenario(mlc::testing::sample_dir() / "scenarios/calculator.scn");
  if (!r.scenario) throw std::runtime_error(render(r.diagnostics));
  return *r.scenario;
}

const ModelUnit& sample_unit() {
  static const ModelUnit unit = frontend::load_project(mlc::testing::sample_dir()).unit;
  return unit;
}

/// A one-file project holding `scl`.
class Tiny {
 public:
  explicit Tiny(const std::string& scl) {
    write_file(dir_ / "mlc.project", "name = tiny\n");
    write_file(dir_ / "s.scl", scl);
    auto r = frontend::load_project(dir_.path());
    if (has_errors(r.diagnostics)) throw std::runtime_error(render(r.diagnostics));
    unit_ = r.unit;
  }
  [[nodiscard]] const ModelUnit& unit() const { return unit_; }

 private:
  TempDir dir_{"sim"};
  ModelUnit unit_;
};

const char* const kEcho = R"(thing Echo {
  message ping(n: int);
  port in_p in { ping }
  port out_p out { ping }
  property last: int = 0;
  statechart S {
    initial state idle {
      on in_p?ping(n) / last = n; out_p!ping(n * 2)
    }
  }
}

thing Sink {
  message ping(n: int);
  port in_p in { ping }
  statechart S { initial state waiting { on in_p?ping(n) } }
}

pipeline P {
  instance echo: Echo;
  instance sink: Sink;
  connect echo.out_p -> sink.in_p;
}
)";

std::vector<TraceEvent> of_kind(const std::vector<TraceEvent>& trace, EventKind k) {
  std::vector<TraceEvent> out;
  std::copy_if(trace.begin(), trace.end(), std::back_inserter(out), [&](const TraceEvent& e) { return e.kind == k; });
  return out;
}

TEST(Simulator, CalculatorAddsTwoAndThree) {
  auto result = run_scenario(sample_unit(), calculator());
  ASSERT_TRUE(result.ok()) << result.error->message;
  std::vector<std::string> sums;
  for (const auto& e : result.trace)
    if (e.kind == EventKind::message_sent && e.thing == "device" && e.port == "display")
      sums.push_back(format_args(e.args));
  EXPECT_EQ(sums, (std::vector<std::string>{"(5)", "(1)", "(9)", "(13)", "(17)"}));
  for (const auto& a : assert_trace(result.trace, calculator().assertions))
    EXPECT_TRUE(a.passed) << a.index << " " << a.form << ": " << a.message;
}

TEST(Simulator, ServerReturnsToReadyAfterPredict) {
  auto result = run_scenario(sample_unit(), calculator());
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const auto& e = result.trace[i];
    if (e.kind != EventKind::action_executed || e.thing != "server" || !e.action.starts_with("da_predict")) continue;
    auto next_state = std::find_if(result.trace.begin() + static_cast<std::ptrdiff_t>(i), result.trace.end(),
                                   [](const TraceEvent& x) { return x.kind == EventKind::state_entered && x.thing == "server"; });
    ASSERT_NE(next_state, result.trace.end());
    EXPECT_EQ(next_state->state, "ready");
  }
}

TEST(Simulator, ReplayIsDeterministic) {
  EXPECT_TRUE(replay_determinism(sample_unit(), calculator(), 3));
  EXPECT_THROW(replay_determinism(sample_unit(), calculator(), 1), ModelError);
}

TEST(Simulator, SeedDoesNotChangeTheTrace) {
  auto a = calculator();
  auto b = a;
  b.seed = 12345;
  EXPECT_EQ(format_trace(run_scenario(sample_unit(), a).trace), format_trace(run_scenario(sample_unit(), b).trace));
}

TEST(Simulator, EmptyScenarioEntersInitialStates) {
  Tiny t(kEcho);
  auto result = run_scenario(t.unit(), scenario("name: empty"));
  ASSERT_TRUE(result.ok());
  ASSERT_EQ(result.trace.size(), 2u);
  EXPECT_EQ(format_event(result.trace[0]), "1\t0\tStateEntered\techo\tstate=idle");
  EXPECT_EQ(format_event(result.trace[1]), "2\t0\tStateEntered\tsink\tstate=waiting");
}

TEST(Simulator, MessageFlowAndLatency) {
  Tiny t(kEcho);
  auto s = scenario(R"(events: ({ time: 5 thing: echo port: in_p args: (21) })
connectors: ({ from: "echo.out_p" to: "sink.in_p" latency: 3 }))");
  auto result = run_scenario(t.unit(), s);
  ASSERT_TRUE(result.ok());
  auto received = of_kind(result.trace, EventKind::message_received);
  ASSERT_EQ(received.size(), 2u);
  EXPECT_EQ(received[0].peer, "scenario");
  EXPECT_EQ(received[1].thing, "sink");
  EXPECT_EQ(received[1].time, 8);
  EXPECT_EQ(format_args(received[1].args), "(42)");
  auto sent = of_kind(result.trace, EventKind::message_sent);
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(sent[0].peer, "sink.in_p");
  EXPECT_EQ(format_event(sent[0]).substr(format_event(sent[0]).find("MessageSent")),
            "MessageSent\techo\tport=out_p message=ping args=(42) to=sink.in_p");
}

TEST(Simulator, SimultaneousEventsKeepInsertionOrder) {
  Tiny t(kEcho);
  auto result = run_scenario(t.unit(), scenario(R"(events: (
  { time: 1 thing: echo port: in_p args: (1) },
  { time: 1 thing: echo port: in_p args: (2) },
  { time: 1 thing: echo port: in_p args: (3) }
))"));
  std::vector<std::string> at_sink;
  for (const auto& e : of_kind(result.trace, EventKind::message_received))
    if (e.thing == "sink") at_sink.push_back(format_args(e.args));
  EXPECT_EQ(at_sink, (std::vector<std::string>{"(2)", "(4)", "(6)"}));
}

TEST(Simulator, RoutedMessagesAreConserved) {
  auto result = run_scenario(sample_unit(), calculator());
  std::map<std::string, int> sent, received;
  for (const auto& e : result.trace) {
    if (e.kind == EventKind::message_sent && e.peer != "env") ++sent[e.peer + " " + format_args(e.args)];
    if (e.kind == EventKind::message_received && e.peer != "scenario")
      ++received[e.thing + "." + e.port + " " + format_args(e.args)];
  }
  EXPECT_FALSE(sent.empty());
  EXPECT_EQ(sent, received);
}

TEST(Simulator, StepLimitStopsAtTheSamePlace) {
  Tiny t(R"(thing Loop {
  statechart S {
    initial state a { auto -> b }
    state b { auto -> a }
  }
})");
  auto s = scenario("step_limit: 50");
  auto first = run_scenario(t.unit(), s);
  auto second = run_scenario(t.unit(), s);
  ASSERT_TRUE(first.error);
  EXPECT_EQ(first.error->code, "StepLimitExceeded");
  ASSERT_TRUE(second.error);
  EXPECT_EQ(first.error->seq, second.error->seq);
  EXPECT_EQ(format_trace(first.trace), format_trace(second.trace));
  EXPECT_EQ(first.steps, s.step_limit + 1);
}

TEST(Simulator, UnboundPredictorAborts) {
  auto s = calculator();
  s.predictors.clear();
  auto result = run_scenario(sample_unit(), s);
  ASSERT_TRUE(result.error);
  EXPECT_EQ(result.error->code, "UnboundPredictor");
  EXPECT_NE(result.error->message.find("server"), std::string::npos);
}

TEST(Simulator, OracleMiss) {
  auto s = calculator();
  s.predictors["server"].table.erase("img_3");
  auto result = run_scenario(sample_unit(), s);
  ASSERT_TRUE(result.error);
  EXPECT_EQ(result.error->code, "OracleMiss");
}

TEST(Simulator, DivisionByZeroIsARuntimeError) {
  Tiny t(R"(thing D {
  message m(x: int);
  port p in { m }
  property q: int = 0;
  statechart S { initial state a { on p?m(x) / q = 10 / x } }
})");
  auto result = run_scenario(t.unit(), scenario("events: ({ time: 0 thing: D port: p args: (0) })"));
  ASSERT_TRUE(result.error);
  EXPECT_EQ(result.error->code, "RuntimeError");
}

TEST(Simulator, UnknownNamesAreModelErrors) {
  Tiny t(kEcho);
  auto code = [&](const std::string& text) -> std::string {
    try {
      (void)run_scenario(t.unit(), scenario(text));
    } catch (const ModelError& e) {
      return e.code();
    }
    return "";
  };
  EXPECT_EQ(code("events: ({ time: 0 thing: nobody port: in_p args: (1) })"), "UnknownThing");
  EXPECT_EQ(code("events: ({ time: 0 thing: echo port: nowhere args: (1) })"), "UnknownPort");
  EXPECT_EQ(code("events: ({ time: 0 thing: echo port: in_p message: pong args: (1) })"), "UnknownMessage");
  EXPECT_EQ(code("events: ({ time: 0 thing: echo port: in_p args: (1, 2) })"), "ArityMismatch");
}

TEST(Scenario, Diagnostics) {
  auto code = [](const std::string& text) {
    auto r = parse_scenario(text, "t.scn");
    return r.diagnostics.empty() ? std::string() : r.diagnostics[0].code;
  };
  EXPECT_EQ(code("events: ({ time: 5 thing: a port: p }, { time: 1 thing: a port: p })"), "TimeOrder");
  EXPECT_EQ(code("events: ({ time: 0 thing: a port: p args: (img_missing) })"), "UnknownInput");
  EXPECT_EQ(code("events: {"), "ScenarioSyntax");
  EXPECT_EQ(code("seed: \"x\""), "TypeError");
  EXPECT_EQ(code(""), "");
}

TEST(Assertions, Forms) {
  auto trace = run_scenario(sample_unit(), calculator()).trace;
  auto check = [&](const std::string& text) {
    auto s = scenario("assertions: (" + text + ")");
    return assert_trace(trace, s.assertions).at(0);
  };
  EXPECT_TRUE(check("{ eventually { kind: PredictionMade unit: DAML_server input: img_9 } }").passed);
  EXPECT_FALSE(check("{ eventually { kind: MessageSent args: (99) } }").passed);
  EXPECT_TRUE(check("{ never { kind: StateEntered state: nowhere } }").passed);
  auto never = check("{ never { kind: StateEntered thing: server } }");
  EXPECT_FALSE(never.passed);
  ASSERT_TRUE(never.position);
  EXPECT_FALSE(check("{ order: ({ action: da_predict }, { action: da_train }) }").passed);
  EXPECT_FALSE(check("{ next: ({ kind: ActionExecuted action: no_such_action }, { kind: StateEntered }) }").passed);
  EXPECT_FALSE(check("{ next: ({ kind: ActionExecuted thing: server action: da_predict }, "
                     "{ kind: StateEntered state: predicting }) }")
                   .passed);
  auto bad = check("{ sometimes { kind: StateEntered } }");
  EXPECT_FALSE(bad.passed);
  EXPECT_FALSE(bad.message.empty());
  EXPECT_FALSE(check("{ eventually { colour: red } }").passed);
}

TEST(Assertions, PatternMatching) {
  TraceEvent e;
  e.kind = EventKind::message_sent;
  e.thing = "adder";
  e.args = {SimValue{std::vector<double>{1, 0}, ""}, SimValue{std::int64_t{3}, ""}, SimValue{std::string("+"), ""}};
  auto pattern = [](const std::string& text) { return *frontend::parse_config(text, "p").tree; };
  EXPECT_TRUE(matches(e, pattern("kind: MessageSent thing: adder")));
  EXPECT_TRUE(matches(e, pattern("args: ((1, 0), 3.0, \"+\")")));
  EXPECT_FALSE(matches(e, pattern("args: ((1, 1), 3, \"+\")")));
  EXPECT_FALSE(matches(e, pattern("kind: MessageReceived")));
}

TEST(Trace, KindNamesRoundTrip) {
  for (auto k : {EventKind::state_entered, EventKind::message_sent, EventKind::message_received,
                 EventKind::action_executed, EventKind::prediction_made})
    EXPECT_EQ(parse_event_kind(to_string(k)), k);
  EXPECT_FALSE(parse_event_kind("Nothing"));
}

TEST(Simulator, TrainedPredictorsThroughTheBridge) {
  TempDir dir("sim-trained");
  mlc::testing::copy_sample(dir.path());
  auto project = frontend::load_project(dir.path());
  auto a = analysis::analyze(project.unit);
  codegen::generate_all(a).files.write_to(dir.path());
  support::MockBridgeServer server(dir.path());
  auto store = buildsys::Store::open(dir / ".mlc-store");
  auto report = buildsys::execute(buildsys::plan(a, store), a, store,
                                  [&] { return std::make_unique<support::InProcessBridge>(server); });
  ASSERT_TRUE(report.ok());

  auto s = calculator();
  s.predictors["server"] = PredictorBinding{PredictorBinding::Kind::trained, {}, {}};
  support::InProcessBridge bridge(server);
  Simulator sim(a.unit, &bridge);
  sim.set_archive_resolver([&](const std::string& unit) { return store.records_for(unit).front()->archive_path; });
  auto first = sim.run(s);
  ASSERT_TRUE(first.ok()) << first.error->message;
  auto predictions = of_kind(first.trace, EventKind::prediction_made);
  ASSERT_EQ(predictions.size(), 10u);
  for (const auto& p : predictions) EXPECT_EQ(p.output.size(), 10u);
  EXPECT_EQ(server.count("LOAD"), 1);
  EXPECT_EQ(server.count("PREDICT"), 10);
  auto second = sim.run(s);
  EXPECT_EQ(format_trace(first.trace), format_trace(second.trace));
  EXPECT_EQ(server.count("PREDICT"), 10);

  Simulator no_bridge(a.unit);
  auto failed = no_bridge.run(s);
  ASSERT_TRUE(failed.error);
  EXPECT_EQ(failed.error->code, "BridgeFailure");
}

}  // namespace
}  // namespace mlc::simulator
