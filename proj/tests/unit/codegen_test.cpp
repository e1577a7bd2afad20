#include <gtest/gtest.h>

#include "mlcforge/analysis/analyze.hpp"
#include "mlcforge/codegen/backend.hpp"
#include "mlcforge/codegen/generate.hpp"
#include "mlcforge/codegen/identifiers.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/project.hpp"
#include "test_support.hpp"

namespace mlc::codegen {
namespace {

using analysis::AnalysisResult;
using mlc::testing::TempDir;
using mlc::testing::edit_file;
using mlc::testing::read_file;
namespace fs = std::filesystem;

AnalysisResult analyze_dir(const fs::path& dir) {
  return analysis::analyze(frontend::load_project(dir).unit);
}

const analysis::TrainableUnit& unit_named(const AnalysisResult& a, const std::string& name) {
  for (const auto& u : a.units)
    if (u.name == name) return u;
  throw std::runtime_error("no unit " + name);
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

TEST(ModelSpec, ClassifierLayerSizes) {
  auto a = analyze_dir(mlc::testing::sample_dir());
  ReferenceBackend backend;
  auto spec = backend.model_spec(unit_named(a, "DAML_server"), {});
  EXPECT_EQ(spec.layer_sizes, (std::vector<std::int64_t>{64, 128, 10}));
  EXPECT_EQ(spec.activations, (std::vector<std::string>{"relu", "softmax"}));
  EXPECT_EQ(spec.loss, "categorical_crossentropy");
  auto net = backend.model_spec(unit_named(a, "OperatorDetector"), {});
  EXPECT_EQ(net.layer_sizes, (std::vector<std::int64_t>{25, 32, 4}));
}

TEST(ModelSpec, ReconstructionLayerSizes) {
  auto a = analyze_dir(mlc::testing::sample_dir());
  auto u = unit_named(a, "DAML_server");
  u.classification = false;
  u.n_outputs = u.n_features();
  u.config.set("hidden_layer_sizes", int_list({128, 64}));
  auto spec = ReferenceBackend().model_spec(u, {});
  EXPECT_EQ(spec.layer_sizes, (std::vector<std::int64_t>{64, 128, 64, 64}));
  EXPECT_EQ(spec.activations, (std::vector<std::string>{"relu", "relu", "identity"}));
}

TEST(ModelSpec, ActivationCountMismatch) {
  auto a = analyze_dir(mlc::testing::sample_dir());
  auto u = unit_named(a, "DAML_server");
  u.config.set("hidden_layer_sizes", int_list({128, 64, 32}));
  ConfigList acts;
  acts.items = {Token{"relu"}, Token{"tanh"}};
  u.config.set("hidden_layers_activation_functions", acts);
  EXPECT_THROW((void)ReferenceBackend().model_spec(u, {}), ModelError);
}

TEST(ModelSpec, ConvolutionUnsupported) {
  TempDir dir("codegen");
  mlc::testing::copy_sample(dir.path());
  edit_file(dir / "networks/detectors.nal", "image -> Flatten -> dense(128)",
            "image -> Convolution(3, 2) -> Flatten -> dense(128)");
  auto a = analyze_dir(dir.path());
  ASSERT_TRUE(a.ok()) << render(a.diagnostics);
  try {
    (void)ReferenceBackend().model_spec(unit_named(a, "Detector"), {});
    FAIL() << "expected UnsupportedCapability";
  } catch (const ModelError& e) {
    EXPECT_EQ(e.code(), "UnsupportedCapability");
  }
  auto g = generate_all(a);
  EXPECT_FALSE(g.ok());
}

TEST(Generate, DeterministicAndMatchesGoldens) {
  auto first = generate_all(analyze_dir(mlc::testing::sample_dir()));
  auto second = generate_all(analyze_dir(mlc::testing::sample_dir()));
  ASSERT_TRUE(first.ok()) << render(first.diagnostics);
  EXPECT_EQ(first.files, second.files);
  std::size_t golden = 0;
  for (const auto& e : fs::recursive_directory_iterator(mlc::testing::golden_dir()))
    golden += e.is_regular_file();
  EXPECT_EQ(first.files.size(), golden);
  for (const auto& f : first.files.files())
    EXPECT_EQ(f.content, read_file(mlc::testing::golden_dir() / f.path)) << f.path;
}

TEST(Generate, ManifestListsEveryFile) {
  auto g = generate_all(analyze_dir(mlc::testing::sample_dir()));
  const auto* manifest = g.files.find("gen/MANIFEST");
  ASSERT_NE(manifest, nullptr);
  for (const auto& f : g.files.files())
    if (f.path != "gen/MANIFEST") EXPECT_NE(manifest->content.find("  " + f.path + "\n"), std::string::npos) << f.path;
}

TEST(Generate, WriteToLeavesUnchangedFilesAlone) {
  TempDir dir("codegen");
  auto g = generate_all(analyze_dir(mlc::testing::sample_dir()));
  g.files.write_to(dir.path());
  fs::path p = dir / "gen/train/Detector/train.py";
  auto before = fs::last_write_time(p);
  fs::last_write_time(p, before - std::chrono::hours(1));
  auto stamped = fs::last_write_time(p);
  g.files.write_to(dir.path());
  EXPECT_EQ(fs::last_write_time(p), stamped);
}

TEST(FileSet, RejectsDuplicatePaths) {
  GeneratedFileSet s;
  s.add({"b", "x"});
  s.add({"a", "y"});
  EXPECT_EQ(s.files()[0].path, "a");
  try {
    s.add({"a", "z"});
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.code(), "DuplicatePath");
  }
}

TEST(Glue, TransitionTable) {
  auto project = frontend::load_project(mlc::testing::sample_dir());
  auto files = generate_runtime_glue(*project.unit.thing("DAML_server"), ReferenceBackend());
  const auto* glue = files.find("gen/runtime/DAML_server/DAML_server_glue.hpp");
  ASSERT_NE(glue, nullptr);
  const std::string& c = glue->content;
  EXPECT_NE(c.find("enum class State { preprocessing, training, ready, predicting };"), std::string::npos);
  EXPECT_NE(c.find("std::array<TransitionRow, 4> kTransitions"), std::string::npos);
  EXPECT_NE(c.find("{State::preprocessing, \"\", \"\", \"\", \"da_preprocess\", State::training, false}"),
            std::string::npos);
  EXPECT_NE(c.find("{State::ready, \"image_recognition_service\", \"image\", \"\", \"pixels = px\", "
                   "State::predicting, false}"),
            std::string::npos);
  EXPECT_NE(c.find("kInitialState = State::preprocessing"), std::string::npos);
  EXPECT_NE(c.find("rt_.predict(\"DAML_server\", input)"), std::string::npos);
}

TEST(Glue, SingleStateThing) {
  auto project = frontend::load_project(mlc::testing::sample_dir());
  auto files = generate_runtime_glue(*project.unit.thing("Camera"), ReferenceBackend());
  const auto& c = files.files().front().content;
  EXPECT_NE(c.find("enum class State { idle };"), std::string::npos);
  EXPECT_NE(c.find("std::array<TransitionRow, 1> kTransitions"), std::string::npos);
}

TEST(Glue, NameOnlyDifference) {
  auto project = frontend::load_project(mlc::testing::sample_dir());
  ThingDef renamed = *project.unit.thing("Camera");
  renamed.name = "Webcam";
  auto a = generate_runtime_glue(*project.unit.thing("Camera"), ReferenceBackend()).files().front().content;
  auto b = generate_runtime_glue(renamed, ReferenceBackend()).files().front().content;
  EXPECT_NE(a, b);
  std::string replaced = a;
  for (auto pos = replaced.find("Camera"); pos != std::string::npos; pos = replaced.find("Camera", pos))
    replaced.replace(pos, 6, "Webcam");
  EXPECT_EQ(replaced, b);
}

TEST(Stubs, PortTypesAndSanitizedNames) {
  auto project = frontend::load_project(mlc::testing::sample_dir());
  auto files = generate_component_stubs(project.unit.pipelines[0], project.unit);
  ASSERT_EQ(files.size(), 3u);
  const auto* calc = files.find("gen/stubs/Calc/Calc_stub.hpp");
  ASSERT_NE(calc, nullptr);
  EXPECT_NE(calc->content.find("using operand_t = std::array<double, 10>;"), std::string::npos);
  EXPECT_NE(calc->content.find("using sum__t = std::array<double, 1>;"), std::string::npos);
  EXPECT_NE(calc->content.find("on_operator_("), std::string::npos);
  EXPECT_EQ(count_of(calc->content, "virtual void on_"), 2u);
  EXPECT_NE(calc->content.find("emit_sum_("), std::string::npos);
}

TEST(Stubs, NoStubsNoFiles) {
  auto project = frontend::load_project(mlc::testing::sample_dir());
  PipelineGraph pipeline = project.unit.pipelines[0];
  std::erase_if(pipeline.instances, [&](const Instance& i) { return project.unit.stub(i.type_name) != nullptr; });
  EXPECT_TRUE(generate_component_stubs(pipeline, project.unit).empty());
}

TEST(Identifiers, Sanitize) {
  EXPECT_EQ(sanitize_identifier("sum%"), "sum_");
  EXPECT_EQ(sanitize_identifier("operator"), "operator_");
  EXPECT_EQ(sanitize_identifier("9lives"), "_9lives");
  EXPECT_EQ(sanitize_identifier("ok_name"), "ok_name");
  IdentifierPool pool;
  EXPECT_EQ(pool.claim("a-b"), "a_b");
  EXPECT_EQ(pool.claim("a_b"), "a_b_2");
  EXPECT_EQ(pool.claim("a.b"), "a_b_3");
  EXPECT_TRUE(is_python_keyword("lambda"));
  EXPECT_TRUE(is_cpp_keyword("class"));
}

TEST(Generate, HeadersCompileCleanly) {
  TempDir dir("codegen");
  auto g = generate_all(analyze_dir(mlc::testing::sample_dir()));
  g.files.write_to(dir.path());
  std::string includes;
  for (const auto& f : g.files.files())
    if (f.path.ends_with(".hpp")) includes += "#include \"" + (dir / f.path).string() + "\"\n";
  ASSERT_FALSE(includes.empty());
  fs::path tu = dir / "all.cpp";
  mlc::testing::write_file(tu, includes + "int main() { return 0; }\n");
  auto r = mlc::testing::run_command(mlc::testing::shell_quote(mlc::testing::cxx_compiler()) +
                                     " -std=c++20 -fsyntax-only -Wall -Wextra -Werror -pedantic " +
                                     mlc::testing::shell_quote(tu.string()));
  EXPECT_EQ(r.exit_code, 0) << r.output;
}

}  // namespace
}  // namespace mlc::codegen
