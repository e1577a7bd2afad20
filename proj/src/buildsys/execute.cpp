#include "mlcforge/buildsys/execute.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "mlcforge/codegen/generate.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/support/weight_archive.hpp"

namespace mlc::buildsys {

const char* to_string(UnitReport::Status s) {
  switch (s) {
    case UnitReport::Status::ok: return "ok";
    case UnitReport::Status::skipped: return "skipped";
    case UnitReport::Status::failed: return "failed";
    case UnitReport::Status::aborted: return "aborted";
  }
  return "?";
}

bool BuildReport::ok() const {
  return std::none_of(units.begin(), units.end(), [](const UnitReport& u) {
    return u.status == UnitReport::Status::failed || u.status == UnitReport::Status::aborted;
  });
}

ConfigTree BuildReport::to_config() const {
  ConfigTree root;
  root.set("build", static_cast<std::int64_t>(build_no));
  root.set("status", Token{ok() ? "ok" : "failed"});
  root.set("trainings", trainings);
  ConfigTree list;
  for (const auto& u : units) {
    ConfigTree t;
    t.set("decision", Token{to_string(u.decision)});
    t.set("reason", Token{u.reason});
    t.set("status", Token{to_string(u.status)});
    t.set("wall_seconds", u.wall_seconds);
    t.set("metric", u.metric);
    if (u.first_epoch > 0) t.set("first_epoch", u.first_epoch);
    if (!u.archive.empty()) t.set("archive", u.archive);
    if (!u.error_code.empty()) {
      t.set("error_code", Token{u.error_code});
      t.set("error", u.error);
    }
    list.set(u.unit, t);
  }
  root.set("units", list);
  return root;
}

namespace {

std::optional<ConfigTree> parse_payload(const std::string& payload) {
  auto v = frontend::parse_value(payload);
  if (!v.value || has_errors(v.diagnostics)) return std::nullopt;
  if (const auto* t = v.value->get_if<ConfigTree>()) return *t;
  return std::nullopt;
}

}  // namespace

BuildReport execute(const BuildPlan& plan, const analysis::AnalysisResult& analysis, Store& store,
                    const BridgeFactory& bridges, const ExecuteOptions& options) {
  BuildReport report;
  report.build_no = store.last_build() + 1;
  const ModelUnit& model = analysis.unit;

  std::vector<UnitReport> results(plan.units.size());
  std::vector<int> state(plan.units.size(), 0);  // 0 pending, 1 running, 2 done
  std::set<std::string> failed;
  std::mutex mu;
  std::condition_variable cv;

  auto index_of = [&](const std::string& name) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < plan.units.size(); ++i)
      if (plan.units[i].unit == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  };
  auto unit_of = [&](const std::string& name) -> const analysis::TrainableUnit* {
    for (const auto& u : analysis.units)
      if (u.name == name) return &u;
    return nullptr;
  };

  auto train = [&](std::size_t i, support::BridgeClient& bridge) {
    const UnitPlan& p = plan.units[i];
    const analysis::TrainableUnit* tu = unit_of(p.unit);
    UnitReport r;
    r.unit = p.unit;
    r.decision = p.decision;
    r.reason = p.reason;
    std::string archive = fmt::format("{}/models/{}-{}.mlcw", model.manifest.store, p.unit, report.build_no);
    ConfigTree req;
    req.set("unit", p.unit);
    req.set("spec", fmt::format("gen/train/{}/spec.tcl", p.unit));
    req.set("out", archive);
    req.set("log", tu ? codegen::default_log_path(model, *tu) : fmt::format("{}/logs/{}.log", model.manifest.store, p.unit));
    if (p.decision == Decision::warm_retrain && p.prior) req.set("warm_start", p.prior->archive_path);
    auto start = std::chrono::steady_clock::now();
    try {
      auto res = bridge.call("TRAIN", frontend::print_inline(req));
      if (!res.ok) {
        r.status = UnitReport::Status::failed;
        r.error_code = "TrainingFailed";
        r.error = fmt::format("training '{}' failed: {}", p.unit, res.payload);
      } else {
        auto tree = parse_payload(res.payload);
        auto stored = support::read_archive(std::filesystem::path(model.root) / archive);
        r.status = UnitReport::Status::ok;
        r.archive = archive;
        r.metric = stored.metric;
        if (tree) {
          if (const auto* v = tree->find("first_epoch")) r.first_epoch = v->as_int().value_or(0);
        }
        StoreRecord rec{p.unit, p.digests.arch, p.digests.config, p.digests.dataset, p.digests.rows, archive,
                        report.build_no};
        std::lock_guard lock(mu);
        store.put(rec);
        store.save();
      }
    } catch (const support::BridgeError& e) {
      r.status = UnitReport::Status::failed;
      r.error_code = e.code() == "BridgeTimeout" ? "BridgeTimeout" : "TrainingFailed";
      r.error = e.excerpt().empty() ? e.what() : fmt::format("{}: {}", e.what(), e.excerpt());
    } catch (const std::exception& e) {
      r.status = UnitReport::Status::failed;
      r.error_code = "TrainingFailed";
      r.error = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  };

  // Next runnable unit, or -1 when nothing can start now; -2 when all are done.
  auto pick = [&]() -> std::ptrdiff_t {
    bool pending = false;
    for (std::size_t i = 0; i < plan.units.size(); ++i) {
      if (state[i] != 0) continue;
      pending = true;
      const UnitPlan& p = plan.units[i];
      bool ready = true, blocked = false;
      for (const auto& dep : p.depends_on) {
        auto d = index_of(dep);
        if (d < 0) continue;
        if (state[static_cast<std::size_t>(d)] != 2) ready = false;
        if (failed.count(dep)) blocked = true;
      }
      if (blocked || ready) return static_cast<std::ptrdiff_t>(i);
    }
    return pending ? -1 : -2;
  };

  auto worker = [&]() {
    std::unique_ptr<support::BridgeClient> bridge;
    std::unique_lock lock(mu);
    for (;;) {
      std::ptrdiff_t next;
      cv.wait(lock, [&] { return (next = pick()) != -1; });
      if (next == -2) return;
      auto i = static_cast<std::size_t>(next);
      state[i] = 1;
      const UnitPlan& p = plan.units[i];
      UnitReport r;
      r.unit = p.unit;
      r.decision = p.decision;
      r.reason = p.reason;
      bool blocked = std::any_of(p.depends_on.begin(), p.depends_on.end(), [&](const auto& d) { return failed.count(d); });
      if (blocked) {
        r.status = UnitReport::Status::aborted;
        r.error_code = "DependencyFailed";
        r.error = fmt::format("'{}' was not trained because a dependency failed", p.unit);
      } else if (p.decision == Decision::skip) {
        r.status = UnitReport::Status::skipped;
        if (p.prior) {
          r.archive = p.prior->archive_path;
          try {
            r.metric = support::read_archive(std::filesystem::path(model.root) / p.prior->archive_path).metric;
          } catch (const std::exception&) {
          }
        }
      } else {
        ++report.trainings;
        lock.unlock();
        try {
          if (!bridge) bridge = bridges();
          r = train(i, *bridge);
        } catch (const std::exception& e) {
          r.status = UnitReport::Status::failed;
          r.error_code = "TrainingFailed";
          r.error = e.what();
        }
        lock.lock();
      }
      if (r.status == UnitReport::Status::failed || r.status == UnitReport::Status::aborted) failed.insert(p.unit);
      results[i] = std::move(r);
      state[i] = 2;
      cv.notify_all();
    }
  };

  int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  report.units = std::move(results);
  return report;
}

}  // namespace mlc::buildsys
