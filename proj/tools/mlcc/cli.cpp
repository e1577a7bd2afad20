#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mlcforge/analysis/analyze.hpp"
#include "mlcforge/analysis/lint.hpp"
#include "mlcforge/buildsys/execute.hpp"
#include "mlcforge/buildsys/package.hpp"
#include "mlcforge/buildsys/plan.hpp"
#include "mlcforge/buildsys/store.hpp"
#include "mlcforge/codegen/generate.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/frontend/project.hpp"
#include "mlcforge/simulator/simulator.hpp"
#include "mlcforge/support/mock_bridge.hpp"

namespace mlc::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string dir = ".";
  std::string bridge;
  std::string report;
  double timeout = 600;
  bool automl = false;
  bool retrain = false;
  bool watch = false;
  int watch_builds = 0;
  int jobs = 1;
  std::vector<std::string> units;
  std::string scenario;
  std::string predictor;
  std::string trace_out;
  std::string kind;
  std::string unit;
};

class Context {
 public:
  Context(const Options& opts, std::ostream& out, std::ostream& err) : opts_(opts), out_(out), err_(err) {}

  /// Loads and analyzes the project; prints diagnostics. Empty on errors.
  std::optional<analysis::AnalysisResult> load(std::optional<bool> automl = std::nullopt) {
    auto project = frontend::load_project(opts_.dir);
    Diagnostics diags = project.diagnostics;
    std::optional<analysis::AnalysisResult> result;
    if (!has_errors(diags)) {
      analysis::AnalysisOptions options;
      options.automl = automl;
      result = analysis::analyze(project.unit, options);
      append(diags, result->diagnostics);
    }
    sort_diagnostics(diags);
    for (const auto& d : diags) err_ << render(d) << "\n";
    if (has_errors(diags)) return std::nullopt;
    return result;
  }

  fs::path root() const { return fs::path(opts_.dir); }

  fs::path store_dir(const ModelUnit& unit) const { return root() / unit.manifest.store; }

  buildsys::BridgeFactory bridges(const ModelUnit& unit) {
    std::string command = opts_.bridge.empty() ? unit.manifest.bridge : opts_.bridge;
    if (command == "mock") {
      if (!mock_) mock_ = std::make_shared<support::MockBridgeServer>(root());
      auto server = mock_;
      return [server]() -> std::unique_ptr<support::BridgeClient> {
        return std::make_unique<support::InProcessBridge>(*server);
      };
    }
    fs::path cwd = root();
    auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(opts_.timeout * 1000));
    return [command, cwd, timeout]() -> std::unique_ptr<support::BridgeClient> {
      if (command.empty())
        throw support::BridgeError("BridgeFailure", "no bridge configured; set 'bridge' in mlc.project or pass --bridge");
      return std::make_unique<support::SubprocessBridge>(support::SubprocessBridge::split_command(command), cwd, timeout);
    };
  }

  bool write_report(const ConfigTree& report) {
    if (opts_.report.empty()) return true;
    try {
      buildsys::write_atomically(opts_.report, frontend::print_config(report));
      return true;
    } catch (const std::exception& e) {
      err_ << "mlcc: cannot write report: " << e.what() << "\n";
      return false;
    }
  }

  const Options& opts() const { return opts_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

 private:
  const Options& opts_;
  std::ostream& out_;
  std::ostream& err_;
  std::shared_ptr<support::MockBridgeServer> mock_;
};

int cmd_check(Context& ctx) {
  auto a = ctx.load();
  if (!a) return kExitDiagnostics;
  const auto& u = a->unit;
  ctx.out() << fmt::format("ok: {} networks, {} things, {} stubs, {} pipelines, {} trainable units\n",
                           u.networks.size(), u.things.size(), u.stubs.size(), u.pipelines.size(), a->units.size());
  ConfigTree report;
  report.set("status", Token{"ok"});
  report.set("networks", static_cast<std::int64_t>(u.networks.size()));
  report.set("things", static_cast<std::int64_t>(u.things.size()));
  report.set("pipelines", static_cast<std::int64_t>(u.pipelines.size()));
  report.set("warnings", static_cast<std::int64_t>(count(a->diagnostics, Severity::warning)));
  return ctx.write_report(report) ? kExitOk : kExitFailure;
}

int cmd_lint(Context& ctx) {
  auto project = frontend::load_project(ctx.opts().dir);
  for (const auto& d : project.diagnostics) ctx.err() << render(d) << "\n";
  if (has_errors(project.diagnostics)) return kExitDiagnostics;
  bool automl = ctx.opts().automl || project.unit.manifest.automl;
  auto lint = analysis::lint_automl(project.unit, automl);
  sort_diagnostics(lint.diagnostics);
  for (const auto& d : lint.diagnostics) ctx.out() << render(d) << "\n";
  ctx.out() << fmt::format("{} finding(s), {} fix(es) applied\n", lint.diagnostics.size() - (automl ? lint.fixes : 0),
                           lint.fixes);
  ConfigTree report;
  report.set("errors", static_cast<std::int64_t>(count(lint.diagnostics, Severity::error)));
  report.set("warnings", static_cast<std::int64_t>(count(lint.diagnostics, Severity::warning)));
  report.set("fixes", static_cast<std::int64_t>(lint.fixes));
  ctx.write_report(report);
  return has_errors(lint.diagnostics) ? kExitDiagnostics : kExitOk;
}

std::optional<codegen::GenerateResult> generate(Context& ctx, const analysis::AnalysisResult& a) {
  auto g = codegen::generate_all(a);
  for (const auto& d : g.diagnostics) ctx.err() << render(d) << "\n";
  if (!g.ok()) return std::nullopt;
  g.files.write_to(ctx.root());
  return g;
}

int cmd_generate(Context& ctx) {
  auto a = ctx.load();
  if (!a) return kExitDiagnostics;
  auto g = generate(ctx, *a);
  if (!g) return kExitDiagnostics;
  for (const auto& f : g->files.files()) ctx.out() << f.path << "\n";
  return kExitOk;
}

buildsys::PlanOptions plan_options(const Options& o, bool force) {
  buildsys::PlanOptions p;
  p.force = force || o.retrain;
  p.force_units = o.units;
  return p;
}

int cmd_plan(Context& ctx) {
  auto a = ctx.load();
  if (!a) return kExitDiagnostics;
  try {
    auto store = buildsys::Store::open(ctx.store_dir(a->unit));
    auto p = buildsys::plan(*a, store, plan_options(ctx.opts(), false));
    for (const auto& d : p.diagnostics) ctx.err() << render(d) << "\n";
    ctx.out() << buildsys::format_plan(p);
    ConfigTree report;
    report.set("all_skip", p.all_skip());
    ConfigTree units;
    for (const auto& u : p.units) {
      ConfigTree t;
      t.set("decision", Token{buildsys::to_string(u.decision)});
      t.set("reason", Token{u.reason});
      units.set(u.unit, t);
    }
    report.set("units", units);
    ctx.write_report(report);
    return kExitOk;
  } catch (const ModelError& e) {
    ctx.err() << render(e.diagnostic()) << "\n";
    return kExitFailure;
  }
}

int build_once(Context& ctx, bool force) {
  auto a = ctx.load();
  if (!a) return kExitDiagnostics;
  if (!generate(ctx, *a)) return kExitDiagnostics;
  try {
    auto store = buildsys::Store::open(ctx.store_dir(a->unit));
    auto p = buildsys::plan(*a, store, plan_options(ctx.opts(), force));
    for (const auto& d : p.diagnostics) ctx.err() << render(d) << "\n";
    buildsys::ExecuteOptions options;
    options.jobs = std::max(1, ctx.opts().jobs);
    auto report = buildsys::execute(p, *a, store, ctx.bridges(a->unit), options);
    for (const auto& u : report.units) {
      ctx.out() << fmt::format("{}\t{}\t{}\t{}", u.unit, buildsys::to_string(u.decision), u.reason,
                               buildsys::to_string(u.status));
      if (u.status == buildsys::UnitReport::Status::ok) ctx.out() << fmt::format("\tmetric={}", frontend::format_number(u.metric));
      ctx.out() << "\n";
      if (!u.error_code.empty()) ctx.err() << fmt::format("{}: {}: {}\n", u.unit, u.error_code, u.error);
    }
    ctx.out() << fmt::format("build {}: {} training(s){}\n", report.build_no, report.trainings,
                             p.all_skip() ? ", all up to date" : "");
    ctx.write_report(report.to_config());
    return report.ok() ? kExitOk : kExitFailure;
  } catch (const ModelError& e) {
    ctx.err() << render(e.diagnostic()) << "\n";
    return kExitFailure;
  }
}

/// (path, mtime, size) of every project file outside the store and gen/.
std::string fingerprint(const fs::path& root, const std::string& store) {
  std::vector<std::string> rows;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(root, ec); it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    auto rel = fs::relative(it->path(), root, ec).generic_string();
    if (it->is_directory() && (rel == store || rel == "gen" || rel.rfind('.', 0) == 0)) {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    auto mtime = fs::last_write_time(it->path(), ec).time_since_epoch().count();
    rows.push_back(fmt::format("{}\t{}\t{}", rel, mtime, it->file_size(ec)));
  }
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& r : rows) out += r + "\n";
  return out;
}

int cmd_build(Context& ctx) {
  int rc = build_once(ctx, false);
  if (!ctx.opts().watch) return rc;
  std::string store = ".mlc-store";
  if (auto project = frontend::load_project(ctx.opts().dir); !has_errors(project.diagnostics))
    store = project.unit.manifest.store;
  int builds = 1;
  std::string seen = fingerprint(ctx.root(), store);
  while (ctx.opts().watch_builds <= 0 || builds < ctx.opts().watch_builds) {
    std::this_thread::sleep_for(std::chrono::seconds(1));
    std::string now = fingerprint(ctx.root(), store);
    if (now == seen) continue;
    seen = now;
    ctx.out() << "change detected\n";
    rc = build_once(ctx, false);
    ++builds;
  }
  return rc;
}

std::string resolve_scenario(const Options& o) {
  fs::path p(o.scenario);
  if (p.is_relative() && !fs::exists(p) && fs::exists(fs::path(o.dir) / p)) return (fs::path(o.dir) / p).string();
  return p.string();
}

int cmd_run(Context& ctx) {
  const Options& o = ctx.opts();
  if (!o.predictor.empty() && o.predictor != "oracle" && o.predictor != "trained") {
    ctx.err() << "mlcc: --predictor must be 'oracle' or 'trained'\n";
    return kExitUsage;
  }
  auto a = ctx.load();
  if (!a) return kExitDiagnostics;
  auto loaded = simulator::load_scenario(resolve_scenario(o));
  for (const auto& d : loaded.diagnostics) ctx.err() << render(d) << "\n";
  if (!loaded.scenario) return kExitDiagnostics;
  simulator::Scenario scenario = *loaded.scenario;
  if (o.predictor == "trained")
    for (auto& [name, binding] : scenario.predictors) binding = simulator::PredictorBinding{simulator::PredictorBinding::Kind::trained, {}, {}};

  std::unique_ptr<support::BridgeClient> bridge;
  bool trained = false;
  for (const auto& [name, binding] : scenario.predictors)
    trained = trained || binding.kind == simulator::PredictorBinding::Kind::trained;
  try {
    if (trained) bridge = ctx.bridges(a->unit)();
    simulator::Simulator sim(a->unit, bridge.get());
    auto store = buildsys::Store::open(ctx.store_dir(a->unit));
    sim.set_archive_resolver([store](const std::string& unit) {
      const buildsys::StoreRecord* best = nullptr;
      for (const auto* r : store.records_for(unit))
        if (best == nullptr || r->build_no > best->build_no) best = r;
      return best ? best->archive_path : std::string{};
    });
    auto result = sim.run(scenario);
    std::string trace = simulator::format_trace(result.trace);
    ctx.out() << trace;
    if (!o.trace_out.empty()) buildsys::write_atomically(o.trace_out, trace);
    auto checks = simulator::assert_trace(result.trace, scenario.assertions);
    bool passed = result.ok();
    if (result.error)
      ctx.err() << fmt::format("error[{}] at event {}: {}\n", result.error->code, result.error->seq, result.error->message);
    ConfigTree report;
    ConfigTree asserts;
    for (const auto& c : checks) {
      passed = passed && c.passed;
      ctx.out() << fmt::format("assert {} {}: {} ({})\n", c.index, c.form, c.passed ? "PASS" : "FAIL", c.message);
      ConfigTree t;
      t.set("form", Token{c.form.empty() ? "invalid" : c.form});
      t.set("passed", c.passed);
      t.set("message", c.message);
      asserts.set(fmt::format("a{}", c.index), t);
    }
    report.set("scenario", scenario.name);
    report.set("status", Token{passed ? "ok" : "failed"});
    report.set("events", static_cast<std::int64_t>(result.trace.size()));
    report.set("steps", static_cast<std::int64_t>(result.steps));
    if (result.error) {
      report.set("error_code", Token{result.error->code});
      report.set("error", result.error->message);
    }
    report.set("assertions", asserts);
    ctx.write_report(report);
    return passed ? kExitOk : kExitFailure;
  } catch (const ModelError& e) {
    ctx.err() << render(e.diagnostic()) << "\n";
    return kExitDiagnostics;
  } catch (const support::BridgeError& e) {
    ctx.err() << fmt::format("error[{}]: {}\n", e.code(), e.what());
    return kExitFailure;
  }
}

int cmd_pack(Context& ctx) {
  auto kind = buildsys::parse_package_kind(ctx.opts().kind);
  if (!kind) {
    ctx.err() << fmt::format("mlcc: unknown package kind '{}'\n", ctx.opts().kind);
    return kExitUsage;
  }
  auto a = ctx.load();
  if (!a) return kExitDiagnostics;
  try {
    auto store = buildsys::Store::open(ctx.store_dir(a->unit));
    auto r = buildsys::package(*kind, *a, store, ctx.opts().unit);
    ctx.out() << r.path << "\t" << r.digest << "\n";
    ctx.write_report(r.manifest);
    return kExitOk;
  } catch (const ModelError& e) {
    ctx.err() << render(e.diagnostic()) << "\n";
    return kExitFailure;
  }
}

int cmd_artifacts(Context& ctx) {
  auto project = frontend::load_project(ctx.opts().dir);
  for (const auto& d : project.diagnostics) ctx.err() << render(d) << "\n";
  if (has_errors(project.diagnostics)) return kExitDiagnostics;
  try {
    auto store = buildsys::Store::open(ctx.store_dir(project.unit));
    for (const auto& r : store.records())
      ctx.out() << fmt::format("model\t{}\t{}\t{}\tbuild={}\n", r.unit, r.dataset_digest, r.archive_path, r.build_no);
    for (const auto& r : store.artifacts())
      ctx.out() << fmt::format("{}\t{}\t{}\t{}\n", r.kind, r.name, r.digest, r.path);
    return kExitOk;
  } catch (const ModelError& e) {
    ctx.err() << render(e.diagnostic()) << "\n";
    return kExitFailure;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"mlcforge toolchain", "mlcc"};
  app.set_version_flag("--version", std::string("mlcc ") + MLCFORGE_VERSION);
  app.require_subcommand(1);
  app.add_option("-C,--project", o.dir, "Project directory")->capture_default_str();
  app.add_option("--bridge", o.bridge, "Bridge launch command, or 'mock'");
  app.add_option("--report", o.report, "Write a machine-readable report");
  app.add_option("--timeout", o.timeout, "Bridge timeout in seconds")->check(CLI::PositiveNumber);

  auto* check = app.add_subcommand("check", "Parse and analyze the project");
  auto* lint = app.add_subcommand("lint", "Run the training lint rules");
  lint->add_flag("--automl", o.automl, "Apply automatic fixes");
  auto* gen = app.add_subcommand("generate", "Write generated files below gen/");
  auto* plan = app.add_subcommand("plan", "Show the build decisions");
  plan->add_flag("--retrain", o.retrain, "Force ColdTrain for every unit");
  auto* build = app.add_subcommand("build", "Generate and train what is stale");
  build->add_flag("--retrain", o.retrain, "Force ColdTrain for every unit");
  build->add_option("--jobs,-j", o.jobs, "Concurrent trainings")->check(CLI::PositiveNumber);
  build->add_flag("--watch", o.watch, "Rebuild when project files change");
  build->add_option("--watch-builds", o.watch_builds, "Stop watching after this many builds");
  auto* train = app.add_subcommand("train", "Retrain units regardless of staleness");
  bool force = false;
  train->add_flag("--force", force, "Required")->required();
  train->add_option("units", o.units, "Units to retrain (default: all)");
  train->add_option("--jobs,-j", o.jobs, "Concurrent trainings")->check(CLI::PositiveNumber);
  auto* run = app.add_subcommand("run", "Simulate a scenario");
  run->add_option("scenario", o.scenario, "Scenario file")->required();
  run->add_option("--predictor", o.predictor, "Override predictors: oracle or trained");
  run->add_option("--trace-out", o.trace_out, "Write the trace to a file");
  auto* pack = app.add_subcommand("pack", "Build a deterministic package");
  pack->add_option("kind", o.kind, "source-archive, model-archive or dataset-archive")->required();
  pack->add_option("unit", o.unit, "Trainable unit (model and dataset archives)");
  auto* artifacts = app.add_subcommand("artifacts", "Inspect the artifact store");
  std::string action;
  artifacts->add_option("action", action, "list")->required()->check(CLI::IsMember({"list"}));

  std::vector<std::string> owned{"mlcc"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : owned) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mlcc: " << e.what() << "\n";
    const CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return kExitUsage;
  }

  Context ctx(o, out, err);
  try {
    if (check->parsed()) return cmd_check(ctx);
    if (lint->parsed()) return cmd_lint(ctx);
    if (gen->parsed()) return cmd_generate(ctx);
    if (plan->parsed()) return cmd_plan(ctx);
    if (build->parsed()) return cmd_build(ctx);
    if (train->parsed()) return build_once(ctx, true);
    if (run->parsed()) return cmd_run(ctx);
    if (pack->parsed()) return cmd_pack(ctx);
    if (artifacts->parsed()) return cmd_artifacts(ctx);
  } catch (const ModelError& e) {
    err << render(e.diagnostic()) << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "mlcc: " << e.what() << "\n";
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace mlc::cli
