#include "criteria.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mlcforge/analysis/analyze.hpp"
#include "mlcforge/analysis/shapes.hpp"
#include "mlcforge/buildsys/execute.hpp"
#include "mlcforge/buildsys/plan.hpp"
#include "mlcforge/buildsys/store.hpp"
#include "mlcforge/codegen/generate.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/frontend/project.hpp"
#include "mlcforge/simulator/scenario.hpp"
#include "mlcforge/support/bridge.hpp"
#include "mlcforge/support/digest.hpp"
#include "mlcforge/support/mock_bridge.hpp"
#include "mlcforge/support/tar.hpp"
#include "mlcforge/support/weight_archive.hpp"
#include "test_support.hpp"

namespace mlc::testing {

namespace fs = std::filesystem;
using analysis::Dims;

// ---------------------------------------------------------------------------
// Shape property suite

bool ShapeSuiteReport::ok() const {
  return failures.empty() && accepted == cases && broken_rejected == broken && absorbed_accepted == absorbed &&
         round_trips == cases && broken >= cases;
}

namespace {

using Rng = std::mt19937_64;

std::int64_t pick(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

/// Independent reference for the propagation rules.
std::optional<Dims> oracle_step(const LayerKind& kind, const Dims& in) {
  auto spatial = [&]() -> std::optional<Dims> {
    if (in.size() == 3) return in;
    if (in.size() == 2) return Dims{in[0], in[1], 1};
    return std::nullopt;
  };
  if (const auto* c = std::get_if<Convolution>(&kind)) {
    auto s = spatial();
    if (!s) return std::nullopt;
    std::int64_t kh = c->kernel_h.extent(), kw = c->kernel_w.extent(), st = c->stride.extent();
    if (c->padding == Padding::same) return Dims{((*s)[0] + st - 1) / st, ((*s)[1] + st - 1) / st, c->channels.extent()};
    if ((*s)[0] < kh || (*s)[1] < kw) return std::nullopt;
    return Dims{((*s)[0] - kh) / st + 1, ((*s)[1] - kw) / st + 1, c->channels.extent()};
  }
  if (const auto* p = std::get_if<Pooling>(&kind)) {
    auto s = spatial();
    if (!s) return std::nullopt;
    std::int64_t w = p->window.extent(), st = p->stride.extent();
    if ((*s)[0] < w || (*s)[1] < w) return std::nullopt;
    return Dims{((*s)[0] - w) / st + 1, ((*s)[1] - w) / st + 1, (*s)[2]};
  }
  if (const auto* f = std::get_if<FullyConnected>(&kind)) {
    if (in.size() != 1) return std::nullopt;
    return Dims{f->units.extent()};
  }
  if (std::holds_alternative<Flatten>(kind)) {
    std::int64_t n = 1;
    for (auto d : in) n *= d;
    return Dims{n};
  }
  return in;
}

/// Shapes after every layer, or nullopt when some layer cannot apply.
std::optional<std::vector<Dims>> oracle(const Dims& input, const std::vector<LayerKind>& layers) {
  std::vector<Dims> dims{input};
  for (const auto& l : layers) {
    auto next = oracle_step(l, dims.back());
    if (!next) return std::nullopt;
    dims.push_back(*next);
  }
  return dims;
}

TensorType tensor(const Dims& d) {
  TensorType t;
  t.range = ElementRange{ElementKind::real, 0, 1};
  for (auto x : d) t.dims.emplace_back(x);
  return t;
}

NetworkArch make_arch(const std::string& name, const Dims& input, const Dims& output, const std::vector<LayerKind>& layers) {
  NetworkArch a;
  a.name = name;
  a.ports.push_back(TensorPort{"x", Direction::in, tensor(input), {}});
  a.ports.push_back(TensorPort{"y", Direction::out, tensor(output), {}});
  a.body.input = "x";
  a.body.output = "y";
  for (const auto& l : layers) a.body.steps.emplace_back(LayerSpec{l, {}});
  return a;
}

LayerKind activation(Rng& rng) {
  switch (pick(rng, 0, 3)) {
    case 0: return Relu{};
    case 1: return Tanh{};
    case 2: return Sigmoid{};
    default: return Dropout{0.25};
  }
}

/// A valid layer list for the family; `input` is set alongside.
std::vector<LayerKind> generate(Rng& rng, int family, Dims& input) {
  std::vector<LayerKind> layers;
  if (family == 2) {
    input = {pick(rng, 4, 96)};
    int hidden = static_cast<int>(pick(rng, 1, 3));
    for (int i = 0; i < hidden; ++i) {
      layers.emplace_back(FullyConnected{pick(rng, 2, 64)});
      layers.push_back(activation(rng));
    }
    layers.emplace_back(FullyConnected{pick(rng, 2, 12)});
    layers.emplace_back(Softmax{});
    return layers;
  }
  input = {pick(rng, 8, 32), pick(rng, 8, 32), pick(rng, 0, 1) ? 3 : 1};
  Dims cur = input;
  int spatial = static_cast<int>(pick(rng, 1, 4));
  for (int i = 0; i < spatial; ++i) {
    LayerKind l;
    if (pick(rng, 0, 2) != 0) {
      Convolution c;
      std::int64_t k = pick(rng, 1, 5);
      c.kernel_h = k;
      c.kernel_w = pick(rng, 0, 3) == 0 ? pick(rng, 1, 5) : k;
      c.channels = pick(rng, 1, 16);
      c.stride = pick(rng, 1, 2);
      c.padding = pick(rng, 0, 3) == 0 ? Padding::same : Padding::valid;
      l = c;
    } else {
      Pooling p;
      p.kind = pick(rng, 0, 1) ? PoolKind::max : PoolKind::avg;
      p.window = pick(rng, 2, 3);
      p.stride = pick(rng, 1, 2);
      l = p;
    }
    auto next = oracle_step(l, cur);
    if (!next || (*next)[0] < 2 || (*next)[1] < 2) continue;
    layers.push_back(l);
    cur = *next;
    if (pick(rng, 0, 1)) layers.push_back(activation(rng));
  }
  if (family == 1) {
    layers.emplace_back(Flatten{});
    layers.emplace_back(FullyConnected{pick(rng, 4, 64)});
    layers.emplace_back(Relu{});
    layers.emplace_back(FullyConnected{pick(rng, 2, 12)});
    layers.emplace_back(Softmax{});
  }
  return layers;
}

/// Dimension arguments of a layer, for mutation.
std::vector<DimExpr*> mutable_args(LayerKind& kind) {
  std::vector<DimExpr*> out;
  if (auto* c = std::get_if<Convolution>(&kind)) out = {&c->kernel_h, &c->kernel_w, &c->channels, &c->stride};
  if (auto* p = std::get_if<Pooling>(&kind)) out = {&p->window, &p->stride};
  if (auto* f = std::get_if<FullyConnected>(&kind)) out = {&f->units};
  return out;
}

std::string verdict_text(const analysis::ShapeResult& r) {
  if (r.ok()) return "accept";
  return "reject:" + r.diagnostics.front().code;
}

}  // namespace

ShapeSuiteReport run_shape_suite(std::uint64_t seed, int cases) {
  ShapeSuiteReport report;
  Rng rng(seed);
  std::string log;
  for (int i = 0; i < cases; ++i) {
    ++report.cases;
    int family = i % 3;
    Dims input;
    auto layers = generate(rng, family, input);
    auto dims = oracle(input, layers);
    if (!dims) {
      report.failures.push_back(fmt::format("case {}: generator produced an invalid architecture", i));
      continue;
    }
    const Dims declared = dims->back();
    NetworkArch arch = make_arch(fmt::format("Probe{}", i), input, declared, layers);
    std::string text = frontend::print_network(arch);
    auto parsed = frontend::parse_network(text, fmt::format("probe{}.nal", i));
    if (parsed.arch && *parsed.arch == arch) {
      ++report.round_trips;
    } else {
      report.failures.push_back(fmt::format("case {}: print/parse round trip differs:\n{}{}", i, text,
                                            render(parsed.diagnostics)));
      continue;
    }
    auto result = analysis::infer_shapes(*parsed.arch);
    if (result.ok() && result.annotation.dims == *dims) {
      ++report.accepted;
    } else {
      report.failures.push_back(fmt::format("case {}: valid architecture {} -> {}", i, text, verdict_text(result)));
    }
    log += text + verdict_text(result) + "\n";

    // Mutate until one change breaks a declared dimension; absorbed changes are
    // checked for acceptance on the way.
    bool found = false;
    for (int attempt = 0; attempt < 50 && !found; ++attempt) {
      std::vector<std::size_t> candidates;
      for (std::size_t k = 0; k < layers.size(); ++k)
        if (!mutable_args(layers[k]).empty()) candidates.push_back(k);
      auto mutated = layers;
      std::size_t at = candidates[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(candidates.size()) - 1))];
      auto args = mutable_args(mutated[at]);
      DimExpr* arg = args[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(args.size()) - 1))];
      std::int64_t old = arg->extent();
      std::int64_t value = old;
      while (value == old) value = pick(rng, 1, 2 * old + 3);
      *arg = value;
      auto mdims = oracle(input, mutated);
      bool breaks = !mdims || mdims->back() != declared;
      NetworkArch march = make_arch(arch.name, input, declared, mutated);
      auto mresult = analysis::infer_shapes(march);
      log += fmt::format("  layer {} {} -> {}: {} {}\n", at, old, value, breaks ? "breaks" : "absorbed", verdict_text(mresult));
      if (breaks) {
        found = true;
        ++report.broken;
        if (!mresult.ok()) ++report.broken_rejected;
        else report.failures.push_back(fmt::format("case {}: mutation of layer {} ({} -> {}) accepted", i, at, old, value));
      } else {
        ++report.absorbed;
        if (mresult.ok() && mresult.annotation.dims == *mdims) ++report.absorbed_accepted;
        else report.failures.push_back(fmt::format("case {}: absorbed mutation of layer {} rejected", i, at));
      }
    }
    if (!found) report.failures.push_back(fmt::format("case {}: no breaking mutation found", i));
  }
  report.fingerprint = support::sha256_hex(log);
  return report;
}

// ---------------------------------------------------------------------------
// Parser fuzzing

bool FuzzReport::ok() const {
  return !parsers.empty() && std::all_of(parsers.begin(), parsers.end(), [](const FuzzEntry& e) { return e.failures == 0; });
}

namespace {

struct FuzzTarget {
  std::string name;
  std::string file;
  std::vector<std::string> corpus;
  /// Returns diagnostics; throws only on contract violations.
  std::function<Diagnostics(const std::string&)> parse;
};

std::string span_problem(const Diagnostics& diags, const std::string& text, const std::string& file) {
  std::uint32_t lines = 1 + static_cast<std::uint32_t>(std::count(text.begin(), text.end(), '\n'));
  for (const auto& d : diags) {
    if (!d.span.known()) continue;
    if (d.span.file != file) return fmt::format("span names file '{}'", d.span.file);
    if (d.span.line > lines || d.span.offset > text.size())
      return fmt::format("span {}:{} (offset {}) outside input of {} bytes", d.span.line, d.span.column, d.span.offset,
                         text.size());
  }
  return {};
}

const std::vector<std::string>& fragments() {
  static const std::vector<std::string> f{
      "{", "}", "(", ")", "->", ":", ";", ",", "<", ">", "^{", "Q(0:1)", "Z(", "component", "thing", "net",
      "def", "ports", "in", "out", "statechart", "state", "initial", "on", "auto", "?", "!", "/", "[", "]",
      "pipeline", "connect", "instance", "ml", "\"", "\"\\", "/*", "//", "\r\n", "\n", std::string(1, '\0'),
      "\xff\xfe", "1e309", "-0", "99999999999999999999", "REQ", "RES", " OK ", " ERR ", "MLCW1", "SHA2"};
  return f;
}

std::string mutate(Rng& rng, const std::vector<std::string>& corpus) {
  int mode = static_cast<int>(pick(rng, 0, 5));
  if (mode == 0 || corpus.empty()) {
    std::string s(static_cast<std::size_t>(pick(rng, 0, 512)), '\0');
    for (auto& c : s) c = static_cast<char>(pick(rng, 0, 255));
    return s;
  }
  std::string s = corpus[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(corpus.size()) - 1))];
  auto pos = [&] { return static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(s.size()))); };
  int edits = static_cast<int>(pick(rng, 1, 8));
  for (int e = 0; e < edits; ++e) {
    switch (mode) {
      case 1:
        if (!s.empty()) s[std::min(pos(), s.size() - 1)] = static_cast<char>(pick(rng, 0, 255));
        break;
      case 2: s.resize(pos()); break;
      case 3: {
        const auto& frag = fragments()[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(fragments().size()) - 1))];
        s.insert(pos(), frag);
        break;
      }
      case 4: {
        std::size_t a = pos(), b = pos();
        if (a > b) std::swap(a, b);
        s.erase(a, std::min<std::size_t>(b - a, 64));
        break;
      }
      default: {
        std::size_t a = pos(), len = static_cast<std::size_t>(pick(rng, 0, 64));
        std::string slice = s.substr(a, len);
        s.insert(pos(), slice);
        break;
      }
    }
  }
  return s;
}

std::vector<std::string> files_with(const std::string& ext) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(sample_dir()))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(read_file(e.path()));
  return out;
}

std::vector<FuzzTarget> targets() {
  std::vector<FuzzTarget> t;
  t.push_back({"network", "fuzz.nal", files_with(".nal"), [](const std::string& s) {
                 return frontend::parse_networks(s, "fuzz.nal").diagnostics;
               }});
  auto configs = files_with(".tcl");
  configs.push_back("optimizer { type: adam learning_rate: 0.001 }\nhidden_layer_sizes: (128, 64)\nlist: ({ a: 1 }, \"x\", tok)\n");
  t.push_back({"config", "fuzz.tcl", configs, [](const std::string& s) {
                 return frontend::parse_config(s, "fuzz.tcl").diagnostics;
               }});
  t.push_back({"value", "fuzz.val", {"{ unit: Detector input: (1, 2.5, -3e-4) }", "(1, (2, 3), { a: b })", "\"q\\\"s\""},
               [](const std::string& s) { return frontend::parse_value(s, "fuzz.val").diagnostics; }});
  t.push_back({"system", "fuzz.scl", files_with(".scl"), [](const std::string& s) {
                 return frontend::parse_system(s, "fuzz.scl").diagnostics;
               }});
  t.push_back({"manifest", "mlc.project", {read_file(sample_dir() / "mlc.project")}, [](const std::string& s) {
                 return frontend::parse_manifest(s, "mlc.project").diagnostics;
               }});
  t.push_back({"scenario", "fuzz.scn", files_with(".scn"), [](const std::string& s) {
                 return simulator::parse_scenario(s, "fuzz.scn").diagnostics;
               }});
  t.push_back({"bridge-frame", "", {"REQ 1 TRAIN { unit: Detector }", "RES 7 ERR no-model", "RES 2 OK { output: (1, 0) }"},
               [](const std::string& s) {
                 if (support::parse_frame(s)) return Diagnostics{};
                 return Diagnostics{make_error("MalformedFrame", "rejected")};
               }});
  support::WeightArchive w;
  w.layer_sizes = {3, 2};
  w.activations = {"softmax"};
  w.params.push_back({"layer0/weight", {2, 3}, {1, 2, 3, 4, 5, 6}});
  w.params.push_back({"layer0/bias", {2}, {0.5f, -0.5f}});
  w.optimizer = support::OptimizerState{};
  t.push_back({"weight-archive", "", {support::encode_archive(w)}, [](const std::string& s) {
                 try {
                   (void)support::decode_archive(s);
                 } catch (const ModelError& e) {
                   if (e.code() != "CorruptArchive") throw;
                   return Diagnostics{e.diagnostic()};
                 }
                 return Diagnostics{};
               }});
  t.push_back({"tar", "", {support::write_tar({{"MANIFEST", "a: 1\n"}, {"dir/file.txt", std::string(700, 'x')}})},
               [](const std::string& s) {
                 try {
                   (void)support::read_tar(s);
                 } catch (const ModelError& e) {
                   if (e.code() != "CorruptArchive") throw;
                   return Diagnostics{e.diagnostic()};
                 }
                 return Diagnostics{};
               }});
  return t;
}

}  // namespace

FuzzReport run_fuzz(std::uint64_t seed, int per_parser) {
  FuzzReport report;
  for (const auto& target : targets()) {
    FuzzEntry entry;
    entry.parser = target.name;
    Rng rng(seed ^ std::hash<std::string>{}(target.name));
    for (int i = 0; i < per_parser; ++i) {
      std::string input = mutate(rng, target.corpus);
      ++entry.inputs;
      std::string problem;
      try {
        Diagnostics diags = target.parse(input);
        if (!diags.empty()) ++entry.diagnosed;
        if (!target.file.empty()) problem = span_problem(diags, input, target.file);
      } catch (const std::exception& e) {
        problem = fmt::format("exception: {}", e.what());
      } catch (...) {
        problem = "non-standard exception";
      }
      if (!problem.empty()) {
        ++entry.failures;
        if (entry.first_failure.empty()) entry.first_failure = fmt::format("input {}: {}", i, problem);
      }
    }
    report.parsers.push_back(entry);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Build staleness

bool StalenessReport::ok() const {
  return !steps.empty() && std::all_of(steps.begin(), steps.end(), [](const StalenessStep& s) { return s.ok; });
}

namespace {

struct BuildOutcome {
  std::map<std::string, std::string> decisions;  // unit -> "Decision(reason)"
  buildsys::BuildReport report;
  std::string error;
};

BuildOutcome build(const fs::path& dir, support::MockBridgeServer& server) {
  BuildOutcome out;
  auto project = frontend::load_project(dir);
  auto a = analysis::analyze(project.unit);
  if (has_errors(project.diagnostics) || !a.ok()) {
    out.error = render(project.diagnostics) + render(a.diagnostics);
    return out;
  }
  auto g = codegen::generate_all(a);
  g.files.write_to(dir);
  auto store = buildsys::Store::open(dir / a.unit.manifest.store);
  auto plan = buildsys::plan(a, store);
  for (const auto& u : plan.units)
    out.decisions[u.unit] = fmt::format("{}({})", buildsys::to_string(u.decision), u.reason);
  out.report = buildsys::execute(plan, a, store, [&server] { return std::make_unique<support::InProcessBridge>(server); });
  if (!out.report.ok()) out.error = "build failed";
  return out;
}

std::string describe(const std::map<std::string, std::string>& m) {
  std::string s;
  for (const auto& [k, v] : m) s += (s.empty() ? "" : " ") + k + "=" + v;
  return s;
}

StalenessStep expect(const std::string& name, const BuildOutcome& o, const std::map<std::string, std::string>& want) {
  StalenessStep step;
  step.name = name;
  step.expected = describe(want);
  step.observed = o.error.empty() ? describe(o.decisions) : o.error;
  step.ok = o.error.empty() && o.decisions == want;
  return step;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

/// First epoch index in the unit's training log.
std::int64_t first_logged_epoch(const fs::path& dir, const std::string& unit) {
  auto a = analysis::analyze(frontend::load_project(dir).unit);
  fs::path log;
  for (const auto& tu : a.units)
    if (tu.name == unit) log = dir / codegen::default_log_path(a.unit, tu);
  if (log.empty() || !fs::exists(log)) return -1;
  std::istringstream in(read_file(log));
  std::string line;
  std::getline(in, line);
  if (line.rfind("epoch=", 0) != 0) return -1;
  return std::stoll(line.substr(6));
}

}  // namespace

StalenessReport run_staleness(const fs::path& dir) {
  StalenessReport r;
  copy_sample(dir);
  support::MockBridgeServer server(dir);
  const std::string cold = "ColdTrain(no-prior)", skip = "Skip(up-to-date)";

  auto first = build(dir, server);
  r.steps.push_back(expect("first build", first, {{"DAML_server", cold}, {"Detector", cold}, {"OperatorDetector", cold}}));

  auto second = build(dir, server);
  auto s = expect("build then build", second, {{"DAML_server", skip}, {"Detector", skip}, {"OperatorDetector", skip}});
  s.ok = s.ok && second.report.trainings == 0;
  s.observed += fmt::format(" trainings={}", second.report.trainings);
  r.steps.push_back(s);

  // Append 100 rows to the digit dataset shared by Detector and DAML_server.
  auto prior = support::read_archive(dir / ".mlc-store/models/Detector-1.mlcw");
  auto digits = data_lines(read_file(dir / "data/digits.csv"));
  std::string appended;
  for (std::size_t i = 1; i <= 100; ++i) appended += digits[i] + "\n";
  write_file(dir / "data/digits.csv", read_file(dir / "data/digits.csv") + appended);
  auto third = build(dir, server);
  const std::string warm = "WarmRetrain(dataset-appended)";
  s = expect("append rows", third, {{"DAML_server", warm}, {"Detector", warm}, {"OperatorDetector", skip}});
  std::int64_t resumed = first_logged_epoch(dir, "Detector");
  s.ok = s.ok && resumed == prior.epochs + 1;
  s.observed += fmt::format(" log resumes at epoch {} after {}", resumed, prior.epochs);
  r.steps.push_back(s);

  // Edit one hyperparameter of Detector.
  std::string cfg = read_file(dir / "configs/Detector.tcl");
  auto at = cfg.find("num_epoch: 30");
  if (at != std::string::npos) cfg.replace(at, 13, "num_epoch: 31");
  write_file(dir / "configs/Detector.tcl", cfg);
  auto fourth = build(dir, server);
  r.steps.push_back(expect("edit hyperparameter", fourth,
                           {{"DAML_server", skip}, {"Detector", "ColdTrain(config-changed)"}, {"OperatorDetector", skip}}));

  // Shuffle the operator rows: same multiset, different order.
  auto ops = data_lines(read_file(dir / "data/operators.csv"));
  std::vector<std::string> body(ops.begin() + 1, ops.end());
  auto original = body;
  std::mt19937_64 rng(42);
  while (body == original) std::shuffle(body.begin(), body.end(), rng);
  std::string shuffled = ops.front() + "\n";
  for (const auto& line : body) shuffled += line + "\n";
  write_file(dir / "data/operators.csv", shuffled);
  auto fifth = build(dir, server);
  r.steps.push_back(expect("shuffle rows", fifth,
                           {{"DAML_server", skip}, {"Detector", skip}, {"OperatorDetector", "ColdTrain(dataset-changed)"}}));

  auto last = build(dir, server);
  r.steps.push_back(expect("settled", last, {{"DAML_server", skip}, {"Detector", skip}, {"OperatorDetector", skip}}));
  return r;
}

}  // namespace mlc::testing
