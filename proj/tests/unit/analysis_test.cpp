#include <gtest/gtest.h>

#include "mlcforge/analysis/analyze.hpp"
#include "mlcforge/analysis/lint.hpp"
#include "mlcforge/analysis/shapes.hpp"
#include "mlcforge/analysis/statechart.hpp"
#include "mlcforge/analysis/units.hpp"
#include "mlcforge/analysis/wiring.hpp"
#include "mlcforge/core/elaborate.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/project.hpp"
#include "test_support.hpp"

namespace mlc::analysis {
namespace {

using mlc::testing::TempDir;
using mlc::testing::edit_file;
namespace fs = std::filesystem;

bool has_code(const Diagnostics& diags, const std::string& code) {
  return std::any_of(diags.begin(), diags.end(), [&](const Diagnostic& d) { return d.code == code; });
}

const Diagnostic* find_code(const Diagnostics& diags, const std::string& code) {
  auto it = std::find_if(diags.begin(), diags.end(), [&](const Diagnostic& d) { return d.code == code; });
  return it == diags.end() ? nullptr : &*it;
}

Dims step(const LayerKind& layer, const Dims& in) {
  std::string code, message;
  auto out = propagate(layer, in, {}, code, message);
  return out ? *out : Dims{};
}

std::string step_error(const LayerKind& layer, const Dims& in) {
  std::string code, message;
  auto out = propagate(layer, in, {}, code, message);
  return out ? "" : code;
}

TEST(Shapes, ConvolutionAndPooling) {
  Convolution conv{5, 5, 20, 1, Padding::valid};
  EXPECT_EQ(step(conv, {28, 28, 1}), (Dims{24, 24, 20}));
  EXPECT_EQ(step(Pooling{PoolKind::max, 2, 2}, {24, 24, 20}), (Dims{12, 12, 20}));
  Convolution same{3, 3, 8, 2, Padding::same};
  EXPECT_EQ(step(same, {28, 28, 1}), (Dims{14, 14, 8}));
  EXPECT_EQ(step(same, {7, 7, 1}), (Dims{4, 4, 8}));
  Convolution strided{3, 3, 4, 2, Padding::valid};
  EXPECT_EQ(step(strided, {10, 10, 3}), (Dims{4, 4, 4}));
  EXPECT_EQ(step(conv, {28, 28}), (Dims{24, 24, 20}));
}

TEST(Shapes, FlattenAndDense) {
  EXPECT_EQ(step(Flatten{}, {12, 12, 20}), (Dims{2880}));
  EXPECT_EQ(step(FullyConnected{10}, {64}), (Dims{10}));
  EXPECT_EQ(step(Softmax{}, {10}), (Dims{10}));
  EXPECT_EQ(step(Dropout{0.5}, {3, 4}), (Dims{3, 4}));
}

TEST(Shapes, Errors) {
  EXPECT_EQ(step_error(FullyConnected{10}, {12, 12, 20}), "RankError");
  EXPECT_EQ(step_error(Convolution{5, 5, 2, 1, Padding::valid}, {3, 3, 1}), "ShapeMismatch");
  EXPECT_EQ(step_error(Convolution{3, 3, 2, 1, Padding::valid}, {10}), "RankError");
  EXPECT_EQ(step_error(ImportPretrained{"missing.mlcw", true}, {4}), "UnresolvedImport");
}

NetworkArch concrete(const std::string& text, const Bindings& b = {}) {
  auto r = frontend::parse_network(text, "n.nal");
  if (!r.arch) throw std::runtime_error(render(r.diagnostics));
  return expand_def_blocks(resolve_generics(*r.arch, b));
}

TEST(Shapes, DetectorAccepted) {
  auto project = frontend::load_project(mlc::testing::sample_dir());
  auto arch = expand_def_blocks(resolve_generics(*project.unit.network("Detector"), {{"classes", 10}}));
  auto r = infer_shapes(arch);
  ASSERT_TRUE(r.ok()) << render(r.diagnostics);
  EXPECT_EQ(r.annotation.dims.front(), (Dims{8, 8}));
  EXPECT_EQ(r.annotation.dims[1], (Dims{64}));
  EXPECT_EQ(r.annotation.dims.back(), (Dims{10}));
}

TEST(Shapes, LeNetAccepted) {
  auto r = infer_shapes(concrete(R"(component LeNet {
  ports in x: Q(0:255)^{28,28,1}, out y: Q(0:1)^{10};
  net { x -> Convolution(5, 20) -> Pooling(kind=max, window=2, stride=2) -> Convolution(5, 50)
          -> Pooling(kind=max, window=2, stride=2) -> Flatten -> FullyConnected(500) -> Relu
          -> FullyConnected(10) -> Softmax -> y }
})"));
  ASSERT_TRUE(r.ok()) << render(r.diagnostics);
  EXPECT_EQ(r.annotation.dims[4], (Dims{4, 4, 50}));
  EXPECT_EQ(r.annotation.dims[5], (Dims{800}));
}

TEST(Shapes, DeclaredOutputMismatch) {
  auto r = infer_shapes(concrete(R"(component M {
  ports in x: Q(0:1)^{8}, out y: Q(0:1)^{3};
  net { x -> FullyConnected(4) -> y }
})"));
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.diagnostics[0].code, "ShapeMismatch");
}

TEST(Shapes, RankErrorStopsPropagation) {
  auto r = infer_shapes(concrete(R"(component M {
  ports in x: Q(0:1)^{28,28,1}, out y: Q(0:1)^{10};
  net { x -> Convolution(5, 4) -> FullyConnected(10) -> y }
})"));
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, "RankError");
  EXPECT_EQ(r.diagnostics[0].span.line, 3u);
}

frontend::SystemResult system(const std::string& text) { return frontend::parse_system(text, "s.scl"); }

TEST(Statechart, SampleThingsAreClean) {
  auto project = frontend::load_project(mlc::testing::sample_dir());
  for (const auto& t : project.unit.things) EXPECT_TRUE(check_statechart(t).empty()) << t.name;
}

TEST(Statechart, UnreachableState) {
  auto r = system(R"(thing T {
  statechart S {
    initial state a { auto -> b }
    state b { }
    state island { auto -> a }
  }
})");
  auto diags = check_statechart(r.model.things[0]);
  const auto* d = find_code(diags, "Unreachable");
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->severity, Severity::warning);
  EXPECT_NE(d->message.find("island"), std::string::npos);
  EXPECT_FALSE(has_errors(diags));
}

TEST(Statechart, MlActionWithoutMlBlock) {
  auto r = system(R"(thing T {
  statechart S { initial state a { auto -> b / da_train } state b { } }
})");
  EXPECT_TRUE(has_code(check_statechart(r.model.things[0]), "MlActionWithoutMlBlock"));
}

TEST(Statechart, StructuralErrors) {
  EXPECT_TRUE(has_code(check_statechart(system("thing T { statechart S { state a { } } }").model.things[0]),
                       "MissingInitial"));
  EXPECT_TRUE(has_code(
      check_statechart(system("thing T { statechart S { initial state a { auto -> nowhere } } }").model.things[0]),
      "UnknownState"));
  auto r = system(R"(thing T {
  message m(x: int);
  port p in { m }
  port q out { m }
  statechart S {
    initial state a {
      on p?m(x) -> a / q!m(x, 2)
      on p?m(x) / q!missing(1)
    }
  }
})");
  auto diags = check_statechart(r.model.things[0]);
  EXPECT_TRUE(has_code(diags, "NondeterministicChoice")) << render(diags);
  EXPECT_TRUE(has_code(diags, "UnknownMessage")) << render(diags);
}

TEST(Statechart, ExclusiveGuardsAreDeterministic) {
  auto r = system(R"(thing T {
  message m(x: int);
  port p in { m }
  statechart S {
    initial state a {
      on p?m(x) [x == 1] -> a
      on p?m(x) [x == 2] -> a
      on p?m(x) [!(x == 2)] -> a
    }
  }
})");
  auto diags = check_statechart(r.model.things[0]);
  const auto& ts = r.model.things[0].statechart.states[0].transitions;
  EXPECT_TRUE(guards_exclusive(*ts[0].guard, *ts[1].guard));
  EXPECT_TRUE(guards_exclusive(*ts[1].guard, *ts[2].guard));
  EXPECT_FALSE(guards_exclusive(*ts[0].guard, *ts[2].guard));
  EXPECT_TRUE(has_code(diags, "NondeterministicChoice"));
}

TEST(Statechart, GuardMustBeBoolean) {
  auto r = system(R"(thing T {
  message m(x: int);
  port p in { m }
  statechart S { initial state a { on p?m(x) [x + 1] -> a } }
})");
  EXPECT_TRUE(has_code(check_statechart(r.model.things[0]), "GuardTypeError"));
}

class SampleCopy : public ::testing::Test {
 protected:
  void SetUp() override { mlc::testing::copy_sample(dir.path()); }
  AnalysisResult analyze_copy(AnalysisOptions options = {}) {
    auto project = frontend::load_project(dir.path());
    return analyze(project.unit, options);
  }
  fs::path scl() const { return dir / "system/calculator.scl"; }
  TempDir dir{"analysis"};
};

TEST_F(SampleCopy, SampleIsClean) {
  auto r = analyze_copy();
  EXPECT_TRUE(r.diagnostics.empty()) << render(r.diagnostics);
  ASSERT_EQ(r.units.size(), 3u);
  EXPECT_EQ(r.shapes.at("detector").dims.back(), (Dims{10}));
  EXPECT_EQ(r.shapes.at("op_detector").dims.back(), (Dims{4}));
}

TEST_F(SampleCopy, WiringAccepted) {
  auto project = frontend::load_project(dir.path());
  EXPECT_TRUE(check_wiring(project.unit.pipelines[0], project.unit).empty());
}

TEST_F(SampleCopy, OutToOutRejected) {
  edit_file(scl(), "connect source.image -> detector.image;", "connect detector.digit -> source.image;");
  auto r = analyze_copy();
  EXPECT_TRUE(has_errors(r.diagnostics));
  EXPECT_TRUE(has_code(r.diagnostics, "DanglingConnector") || has_code(r.diagnostics, "TypeMismatch"))
      << render(r.diagnostics);
}

TEST_F(SampleCopy, UnconnectedNetworkInput) {
  edit_file(scl(), "connect source.image -> detector.image;", "");
  auto r = analyze_copy();
  const auto* d = find_code(r.diagnostics, "UnconnectedInput");
  ASSERT_NE(d, nullptr) << render(r.diagnostics);
  EXPECT_NE(d->message.find("detector"), std::string::npos);
}

TEST_F(SampleCopy, TensorShapeMismatchOnConnector) {
  edit_file(scl(), "in operand: Q(0:1)^{10};", "in operand: Q(0:1)^{9};");
  EXPECT_TRUE(has_code(analyze_copy().diagnostics, "TypeMismatch"));
}

TEST_F(SampleCopy, MessageKindMismatch) {
  edit_file(scl(), "connect server.reply -> device.recognized;", "connect server.reply -> device.keypad;");
  EXPECT_TRUE(has_code(analyze_copy().diagnostics, "TypeMismatch"));
}

TEST_F(SampleCopy, MultipleWriters) {
  edit_file(scl(), "connect source.image -> detector.image;",
            "connect source.image -> detector.image;\n  connect source.image -> detector.image;");
  EXPECT_TRUE(has_code(analyze_copy().diagnostics, "MultipleWriters"));
}

TEST_F(SampleCopy, BadInstanceBinding) {
  edit_file(scl(), "Detector<classes=10>", "Detector<classes=0>");
  EXPECT_TRUE(has_code(analyze_copy().diagnostics, "NonPositiveBinding"));
}

TEST_F(SampleCopy, LearningRateLint) {
  edit_file(dir / "configs/Detector.tcl", "learning_rate: 0.001", "learning_rate: 5.0");
  auto r = analyze_copy();
  const auto* d = find_code(r.diagnostics, "R1");
  ASSERT_NE(d, nullptr) << render(r.diagnostics);
  EXPECT_EQ(d->severity, Severity::warning);
  EXPECT_NE(d->message.find("Detector"), std::string::npos);
  EXPECT_TRUE(r.ok());
}

TEST_F(SampleCopy, SequentialShuffleAutoFix) {
  edit_file(dir / "mlc.project", "data.OperatorDetector = data/operators.csv",
            "data.OperatorDetector = data/operators.csv\nsequential.data/operators.csv = true");
  auto off = analyze_copy();
  const auto* d = find_code(off.diagnostics, "R4");
  ASSERT_NE(d, nullptr) << render(off.diagnostics);
  EXPECT_EQ(d->severity, Severity::error);
  EXPECT_FALSE(d->hint.empty());

  auto on = analyze_copy({.automl = true});
  d = find_code(on.diagnostics, "R4");
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->severity, Severity::info);
  EXPECT_TRUE(on.ok()) << render(on.diagnostics);
  EXPECT_EQ(on.unit.config("OperatorDetector")->tree.find("shuffle")->as_bool(), false);
}

TEST_F(SampleCopy, StandardizeInsertion) {
  edit_file(scl(), "preprocess standardize(image), one_hot(digit);", "preprocess one_hot(digit);");
  auto off = analyze_copy();
  ASSERT_TRUE(has_code(off.diagnostics, "R3")) << render(off.diagnostics);
  EXPECT_EQ(off.unit.thing("DAML_server")->ml->preprocess.steps.size(), 1u);

  auto on = analyze_copy({.automl = true});
  const auto& steps = on.unit.thing("DAML_server")->ml->preprocess.steps;
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0].kind, PreprocessStep::Kind::standardize);
  EXPECT_EQ(steps[0].columns, std::vector<std::string>{"image"});
}

TEST_F(SampleCopy, AutomlOffNeverRewrites) {
  edit_file(dir / "configs/Detector.tcl", "scaling: standardize", "scaling: none");
  auto project = frontend::load_project(dir.path());
  auto r = lint_automl(project.unit, false);
  EXPECT_EQ(r.fixes, 0u);
  EXPECT_EQ(r.unit.config("Detector")->tree, project.unit.config("Detector")->tree);
  EXPECT_EQ(r.unit.things, project.unit.things);
  EXPECT_TRUE(has_code(r.diagnostics, "R3"));
  auto fixed = lint_automl(project.unit, true);
  EXPECT_EQ(fixed.fixes, 1u);
  EXPECT_EQ(fixed.unit.config("Detector")->tree.find("scaling")->as_text(), "standardize");
}

TEST_F(SampleCopy, NoEpochsIsAnError) {
  edit_file(dir / "configs/Detector.tcl", "num_epoch: 30", "num_epoch: 0");
  EXPECT_TRUE(has_code(analyze_copy().diagnostics, "R5"));
}

TEST_F(SampleCopy, TrainableUnitsInOrder) {
  auto r = analyze_copy();
  std::vector<std::string> names;
  for (const auto& u : r.units) names.push_back(u.name);
  EXPECT_EQ(names, (std::vector<std::string>{"DAML_server", "Detector", "OperatorDetector"}));
  const auto& server = r.units[0];
  EXPECT_EQ(server.kind, TrainableUnit::Kind::thing);
  EXPECT_EQ(server.n_features(), 64);
  EXPECT_EQ(server.feature_columns().front(), "image_0");
  EXPECT_EQ(server.label_column, "digit");
  ASSERT_TRUE(r.units[1].arch);
  EXPECT_TRUE(r.units[1].arch->def_blocks.empty());
}

TEST_F(SampleCopy, DiagnosticsSortedByFileAndOffset) {
  edit_file(dir / "configs/Detector.tcl", "learning_rate: 0.001", "learning_rate: 5.0");
  edit_file(scl(), "connect source.image -> detector.image;", "");
  auto r = analyze_copy();
  auto sorted = r.diagnostics;
  sort_diagnostics(sorted);
  EXPECT_EQ(render(sorted), render(r.diagnostics));
}

}  // namespace
}  // namespace mlc::analysis
