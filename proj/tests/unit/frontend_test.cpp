#include <gtest/gtest.h>

#include "mlcforge/frontend/lexer.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/frontend/project.hpp"
#include "test_support.hpp"

namespace mlc {
namespace {

using namespace mlc::frontend;
using mlc::testing::TempDir;
using mlc::testing::read_file;
using mlc::testing::write_file;
namespace fs = std::filesystem;

constexpr const char* kDetector = R"(component Detector<classes> {
  ports in image: Q(0:255)^{28,28},
        out digit: Q(0:1)^{classes};
  net {
    image -> Flatten -> FullyConnected(classes) -> Softmax -> digit
  }
}
)";

TEST(Lexer, SkipsCommentsAndAcceptsCrlf) {
  Lexer lx("a // note\r\n/* block\r\n */ b", "x");
  auto tokens = lx.tokenize();
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[0].text, "a");
  EXPECT_EQ(tokens[1].text, "b");
  EXPECT_EQ(tokens[1].span.line, 3u);
  EXPECT_EQ(tokens[2].kind, TokenKind::end);
  EXPECT_TRUE(lx.take_diagnostics().empty());
}

TEST(Lexer, ReportsStrayBytesAndContinues) {
  Lexer lx("a \x01 b", "x");
  auto tokens = lx.tokenize();
  EXPECT_EQ(tokens.size(), 3u);
  EXPECT_EQ(lx.take_diagnostics().size(), 1u);
}

TEST(NetworkParser, DetectorHasOneGeneric) {
  auto r = parse_network(kDetector, "detector.nal");
  ASSERT_TRUE(r.arch) << render(r.diagnostics);
  ASSERT_EQ(r.arch->generics.size(), 1u);
  EXPECT_EQ(r.arch->generics[0].name, "classes");
  const TensorPort* in = r.arch->port("image");
  ASSERT_NE(in, nullptr);
  EXPECT_EQ(in->type.range.lower, 0);
  EXPECT_EQ(in->type.range.upper, 255);
  EXPECT_EQ(in->type.extents(), (std::vector<std::int64_t>{28, 28}));
  const TensorPort* out = r.arch->port("digit");
  ASSERT_NE(out, nullptr);
  EXPECT_FALSE(out->type.concrete());
  EXPECT_EQ(out->type.dims[0].symbol(), "classes");
  EXPECT_EQ(r.arch->body.steps.size(), 3u);
}

TEST(NetworkParser, EmptyFileExpectsComponent) {
  auto r = parse_network("", "empty.nal");
  EXPECT_FALSE(r.arch);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_NE(r.diagnostics[0].message.find("expected 'component'"), std::string::npos);
}

TEST(NetworkParser, MissingClosingBraceGivesOneErrorAtEof) {
  std::string text = kDetector;
  text.erase(text.rfind('}'));
  auto r = parse_network(text, "open.nal");
  EXPECT_FALSE(r.arch);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].span.offset, text.size());
}

TEST(NetworkParser, RecoversAtNextComponent) {
  std::string text = "component A { ports in x: Q(0:1)^{2}; oops }\n" + std::string(kDetector) +
                     "component B { net { } garbage }\n";
  auto r = parse_networks(text, "many.nal");
  ASSERT_EQ(r.networks.size(), 1u);
  EXPECT_EQ(r.networks[0].name, "Detector");
  EXPECT_GE(r.diagnostics.size(), 2u);
}

TEST(NetworkParser, LayerArgumentsByNameAndPosition) {
  auto r = parse_network(R"(component C {
  ports in x: Q(0:255)^{28,28,1}, out y: Q(0:1)^{10};
  net { x -> Convolution(5, 20) -> Pooling(kind=max, window=2, stride=2)
          -> Convolution(kernel=(3, 1), channels=4, stride=1, padding=same) -> Dropout(0.5) -> Flatten
          -> FullyConnected(units=10) -> Softmax -> y }
})", "c.nal");
  ASSERT_TRUE(r.arch) << render(r.diagnostics);
  const auto& conv = std::get<Convolution>(std::get<LayerSpec>(r.arch->body.steps[0]).kind);
  EXPECT_EQ(conv.kernel_h.extent(), 5);
  EXPECT_EQ(conv.channels.extent(), 20);
  EXPECT_EQ(conv.stride.extent(), 1);
  EXPECT_EQ(conv.padding, Padding::valid);
  const auto& conv2 = std::get<Convolution>(std::get<LayerSpec>(r.arch->body.steps[2]).kind);
  EXPECT_EQ(conv2.kernel_h.extent(), 3);
  EXPECT_EQ(conv2.kernel_w.extent(), 1);
  EXPECT_EQ(conv2.padding, Padding::same);
  EXPECT_DOUBLE_EQ(std::get<Dropout>(std::get<LayerSpec>(r.arch->body.steps[3]).kind).rate, 0.5);
}

TEST(NetworkParser, RejectsBadLayerArguments) {
  for (const char* layer : {"Dropout(1.5)", "FullyConnected(0)", "Pooling(kind=median, window=2)", "Convolution(3)"}) {
    std::string text = std::string("component C { ports in x: Q(0:1)^{8,8,1}, out y: Q(0:1)^{4}; net { x -> ") + layer +
                       " -> y } }";
    auto r = parse_network(text, "bad.nal");
    EXPECT_FALSE(r.arch) << layer;
    EXPECT_TRUE(has_errors(r.diagnostics)) << layer;
  }
}

TEST(ConfigParser, NestedOptimizerTree) {
  auto r = parse_config("optimizer { type: adam learning_rate: 0.001 }", "c.tcl");
  ASSERT_TRUE(r.tree) << render(r.diagnostics);
  const auto* opt = r.tree->find("optimizer");
  ASSERT_NE(opt, nullptr);
  const auto* tree = opt->get_if<ConfigTree>();
  ASSERT_NE(tree, nullptr);
  EXPECT_EQ(tree->find("type")->as_text(), "adam");
  EXPECT_DOUBLE_EQ(*tree->find("learning_rate")->as_number(), 0.001);
  EXPECT_EQ(r.tree->find_path("optimizer.learning_rate"), tree->find("learning_rate"));
}

TEST(ConfigParser, DuplicateKeyIsAnError) {
  auto r = parse_config("num_epoch: 5 num_epoch: 6", "c.tcl");
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, "DuplicateKey");
  EXPECT_EQ(r.diagnostics[0].severity, Severity::error);
}

TEST(ConfigParser, SingletonParenthesesAreAList) {
  auto r = parse_config("hidden_layer_sizes: (128)", "c.tcl");
  ASSERT_TRUE(r.tree);
  const auto* list = r.tree->find("hidden_layer_sizes")->get_if<ConfigList>();
  ASSERT_NE(list, nullptr);
  ASSERT_EQ(list->items.size(), 1u);
  EXPECT_EQ(list->items[0].as_int(), 128);
}

TEST(ConfigParser, ValuesOfEveryKind) {
  auto r = parse_value(R"({ i: -3 r: 2.5e-3 b: true s: "q\"x" t: adam l: ({ a: 1 }, (1, 2)) "odd key": 1 })");
  ASSERT_TRUE(r.value) << render(r.diagnostics);
  const auto& t = *r.value->get_if<ConfigTree>();
  EXPECT_EQ(t.find("i")->as_int(), -3);
  EXPECT_DOUBLE_EQ(*t.find("r")->as_number(), 2.5e-3);
  EXPECT_EQ(t.find("b")->as_bool(), true);
  EXPECT_EQ(*t.find("s")->get_if<std::string>(), "q\"x");
  EXPECT_TRUE(t.find("t")->is<mlc::Token>());
  EXPECT_EQ(t.find("l")->get_if<ConfigList>()->items.size(), 2u);
  EXPECT_NE(t.find("odd key"), nullptr);
  auto again = parse_value(print_value(*r.value));
  ASSERT_TRUE(again.value);
  EXPECT_EQ(*again.value, *r.value);
}

constexpr const char* kServer = R"(thing Server {
  message image(px: Q(0:16)^{64});
  message result(d: Z(0:9));
  port image_recognition_service in { image }
  port reply out { result }
  property digit: int = 0;
  ml {
    features image;
    labels SEMI result;
    dataset "data/digits.csv";
    model_algorithm mlp { hidden_layer_sizes: (128) }
  }
  statechart B {
    initial state ready {
      on image_recognition_service?image(px) / da_predict(px -> digit); reply!result(digit)
    }
  }
}
)";

TEST(SystemParser, TransitionWithPredictAndSend) {
  auto r = parse_system(kServer, "s.scl");
  ASSERT_FALSE(has_errors(r.diagnostics)) << render(r.diagnostics);
  ASSERT_EQ(r.model.things.size(), 1u);
  const auto& t = r.model.things[0].statechart.states[0].transitions[0];
  ASSERT_TRUE(t.trigger);
  EXPECT_EQ(t.trigger->port, "image_recognition_service");
  EXPECT_EQ(t.trigger->message, "image");
  EXPECT_EQ(t.trigger->params, std::vector<std::string>{"px"});
  EXPECT_FALSE(t.target);
  ASSERT_EQ(t.actions.size(), 2u);
  const auto* predict = std::get_if<PredictAction>(&t.actions[0].kind);
  ASSERT_NE(predict, nullptr);
  EXPECT_EQ(predict->result, "digit");
  const auto* send = std::get_if<SendAction>(&t.actions[1].kind);
  ASSERT_NE(send, nullptr);
  EXPECT_EQ(send->port, "reply");
  EXPECT_EQ(send->message, "result");
}

TEST(SystemParser, LabelsSemi) {
  auto r = parse_system(kServer, "s.scl");
  ASSERT_TRUE(r.model.things[0].ml);
  EXPECT_EQ(r.model.things[0].ml->labels, LabelsMode::semi);
  EXPECT_EQ(r.model.things[0].ml->label_name, "result");
}

TEST(SystemParser, DuplicateStateIsAnError) {
  auto r = parse_system(R"(thing T {
  statechart S {
    initial state ready { }
    state ready { }
  }
})", "d.scl");
  ASSERT_TRUE(has_errors(r.diagnostics));
  EXPECT_EQ(r.diagnostics[0].code, "DuplicateState");
}

TEST(SystemParser, GuardsAndExpressions) {
  auto r = parse_system(R"(thing T {
  message m(x: int);
  port p in { m }
  property acc: int = 1 + 2 * 3;
  statechart S {
    initial state a {
      on p?m(x) [x > 0 && !(x == 3)] -> b / acc = acc - x % 2
    }
    state b { auto -> a }
  }
})", "g.scl");
  ASSERT_FALSE(has_errors(r.diagnostics)) << render(r.diagnostics);
  const auto& prop = r.model.things[0].properties[0];
  EXPECT_EQ(print_expr(*prop.init), "1 + 2 * 3");
  const auto& t = r.model.things[0].statechart.states[0].transitions[0];
  ASSERT_TRUE(t.guard);
  EXPECT_EQ(print_expr(*t.guard), "x > 0 && !(x == 3)");
}

TEST(Project, SampleLoads) {
  auto r = load_project(mlc::testing::sample_dir());
  ASSERT_FALSE(has_errors(r.diagnostics)) << render(r.diagnostics);
  EXPECT_EQ(r.unit.networks.size(), 2u);
  EXPECT_NE(r.unit.network("Detector"), nullptr);
  EXPECT_NE(r.unit.network("OperatorDetector"), nullptr);
  EXPECT_EQ(r.unit.things.size(), 3u);
  EXPECT_EQ(r.unit.pipelines.size(), 1u);
  EXPECT_EQ(r.unit.configs.size(), 2u);
  EXPECT_TRUE(r.unit.valid);
}

TEST(Project, MissingManifest) {
  TempDir dir;
  auto r = load_project(dir.path());
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, "MissingManifest");
  EXPECT_FALSE(r.unit.valid);
}

TEST(Project, DuplicateComponentAcrossFiles) {
  TempDir dir;
  write_file(dir / "mlc.project", "name = dup\n");
  write_file(dir / "a.nal", kDetector);
  write_file(dir / "b.nal", kDetector);
  auto r = load_project(dir.path());
  auto it = std::find_if(r.diagnostics.begin(), r.diagnostics.end(),
                         [](const Diagnostic& d) { return d.code == "DuplicateName"; });
  ASSERT_NE(it, r.diagnostics.end());
  std::set<std::string> files{it->span.file};
  for (const auto& s : it->related) files.insert(s.file);
  EXPECT_EQ(files, (std::set<std::string>{"a.nal", "b.nal"}));
}

TEST(Project, DiagnosticsAreDeterministic) {
  TempDir dir;
  write_file(dir / "mlc.project", "name = d\nbogus_key = 1\n");
  write_file(dir / "b.nal", "component { }");
  write_file(dir / "a.nal", "component X { net { } ");
  write_file(dir / "c.scl", "thing { }");
  auto first = render(load_project(dir.path()).diagnostics);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(render(load_project(dir.path()).diagnostics), first);
  EXPECT_LT(first.find("a.nal"), first.find("b.nal"));
}

TEST(Project, ManifestKeys) {
  auto r = parse_manifest("# comment\nname = x\nbackend = reference\nautoml = true\nstore = s\n"
                          "networks = a/*.nal, b/**/*.nal\ndata.Net = d.csv\nsequential.d.csv = true\nbridge = run me\n");
  ASSERT_FALSE(has_errors(r.diagnostics)) << render(r.diagnostics);
  EXPECT_EQ(r.manifest.name, "x");
  EXPECT_TRUE(r.manifest.automl);
  EXPECT_EQ(r.manifest.store, "s");
  EXPECT_EQ(r.manifest.network_globs, (std::vector<std::string>{"a/*.nal", "b/**/*.nal"}));
  EXPECT_EQ(r.manifest.network_data.at("Net"), "d.csv");
  EXPECT_TRUE(r.manifest.is_sequential("d.csv"));
  EXPECT_EQ(r.manifest.bridge, "run me");
}

TEST(Project, GlobMatch) {
  EXPECT_TRUE(glob_match("**/*.nal", "a.nal"));
  EXPECT_TRUE(glob_match("**/*.nal", "x/y/a.nal"));
  EXPECT_FALSE(glob_match("*.nal", "x/a.nal"));
  EXPECT_TRUE(glob_match("net?/*.nal", "net1/a.nal"));
  EXPECT_FALSE(glob_match("*.nal", "a.tcl"));
}

TEST(Printer, CorpusRoundTripsToFixpoint) {
  for (const auto& e : fs::recursive_directory_iterator(mlc::testing::sample_dir())) {
    auto ext = e.path().extension().string();
    std::string text = read_file(e.path());
    std::string file = e.path().filename().string();
    if (ext == ".nal") {
      auto a = parse_networks(text, file);
      ASSERT_FALSE(has_errors(a.diagnostics)) << file;
      auto printed = print_networks(a.networks);
      auto b = parse_networks(printed, file);
      EXPECT_EQ(a.networks, b.networks) << file;
      EXPECT_EQ(print_networks(b.networks), printed) << file;
    } else if (ext == ".tcl" || ext == ".scn") {
      auto a = parse_config(text, file);
      ASSERT_TRUE(a.tree) << file;
      auto printed = print_config(*a.tree);
      auto b = parse_config(printed, file);
      ASSERT_TRUE(b.tree) << file;
      EXPECT_EQ(*a.tree, *b.tree) << file;
      EXPECT_EQ(print_config(*b.tree), printed) << file;
    } else if (ext == ".scl") {
      auto a = parse_system(text, file);
      ASSERT_FALSE(has_errors(a.diagnostics)) << file;
      auto printed = print_system(a.model);
      auto b = parse_system(printed, file);
      EXPECT_EQ(a.model, b.model) << file;
      EXPECT_EQ(print_system(b.model), printed) << file;
    }
  }
}

TEST(Printer, EmptyStatechartBody) {
  auto r = parse_system("thing T { statechart S { } }", "t.scl");
  EXPECT_NE(print_thing(r.model.things[0]).find("statechart S { }"), std::string::npos);
}

TEST(Printer, NormalizesWhitespace) {
  auto a = parse_network(kDetector, "a.nal");
  auto b = parse_network(
      "component   Detector<classes>{ports in image:Q(0:255)^{28,28},out digit:Q(0:1)^{classes};"
      "net{image->Flatten->FullyConnected(units=classes)->Softmax->digit}}",
      "b.nal");
  ASSERT_TRUE(a.arch && b.arch);
  EXPECT_EQ(print_network(*a.arch), print_network(*b.arch));
}

TEST(Printer, NonIdentifierTokensAreQuoted) {
  ConfigTree t;
  t.set("reason", mlc::Token{"up-to-date"});
  t.set("kind", mlc::Token{"adam"});
  EXPECT_EQ(print_config(t), "reason: \"up-to-date\"\nkind: adam\n");
  auto back = parse_config(print_config(t), "r.tcl");
  ASSERT_TRUE(back.tree);
  EXPECT_EQ(back.tree->find("reason")->as_text(), "up-to-date");
}

TEST(Printer, RealFormatting) {
  EXPECT_EQ(format_real(0.001), "0.001");
  EXPECT_EQ(format_real(2.0), "2.0");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(quote("a\"b"), "\"a\\\"b\"");
  EXPECT_TRUE(is_identifier("abc_1"));
  EXPECT_FALSE(is_identifier("1abc"));
}

}  // namespace
}  // namespace mlc
