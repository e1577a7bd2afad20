#include "mlcforge/buildsys/package.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "mlcforge/codegen/generate.hpp"
#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/frontend/project.hpp"
#include "mlcforge/support/csv.hpp"
#include "mlcforge/support/digest.hpp"
#include "mlcforge/support/tar.hpp"

namespace mlc::buildsys {

const char* to_string(PackageKind k) {
  switch (k) {
    case PackageKind::source: return "source-archive";
    case PackageKind::model: return "model-archive";
    case PackageKind::dataset: return "dataset-archive";
  }
  return "?";
}

std::optional<PackageKind> parse_package_kind(std::string_view text) {
  if (text == "source" || text == "source-archive") return PackageKind::source;
  if (text == "model" || text == "model-archive") return PackageKind::model;
  if (text == "dataset" || text == "dataset-archive") return PackageKind::dataset;
  return std::nullopt;
}

namespace {

std::string read_input(const std::filesystem::path& root, const std::string& rel) {
  std::ifstream in(root / rel, std::ios::binary);
  if (!in) throw ModelError("MissingInput", fmt::format("missing input '{}'", rel));
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

/// Row count by an independent scan: non-blank lines minus the header.
std::int64_t count_rows(const std::string& csv) {
  std::int64_t lines = 0;
  std::size_t start = 0;
  while (start < csv.size()) {
    std::size_t nl = csv.find('\n', start);
    std::size_t end = nl == std::string::npos ? csv.size() : nl;
    bool blank = true;
    for (std::size_t i = start; i < end; ++i) blank = blank && (csv[i] == '\r' || csv[i] == ' ');
    if (!blank) ++lines;
    start = end + 1;
  }
  return lines > 0 ? lines - 1 : 0;
}

const analysis::TrainableUnit& find_unit(const analysis::AnalysisResult& a, const std::string& name) {
  for (const auto& u : a.units)
    if (u.name == name || (name.empty() && a.units.size() == 1)) return u;
  throw ModelError("MissingInput", name.empty() ? "a unit name is required" : fmt::format("unknown unit '{}'", name));
}

const StoreRecord& latest_record(const Store& store, const std::string& unit) {
  const StoreRecord* latest = nullptr;
  for (const auto* r : store.records_for(unit))
    if (latest == nullptr || r->build_no > latest->build_no) latest = r;
  if (latest == nullptr) throw ModelError("MissingInput", fmt::format("no trained archive for '{}'", unit));
  return *latest;
}

}  // namespace

PackageResult package(PackageKind kind, const analysis::AnalysisResult& analysis, Store& store,
                      const std::string& unit_name) {
  const ModelUnit& model = analysis.unit;
  const std::filesystem::path root(model.root);
  std::vector<support::TarEntry> entries;
  ConfigTree manifest;
  manifest.set("kind", Token{to_string(kind)});
  manifest.set("toolchain", codegen::kToolchainVersion);
  std::string name;

  if (kind == PackageKind::source) {
    name = model.manifest.name.empty() ? "project" : model.manifest.name;
    std::vector<std::string> files{frontend::kManifestFile};
    files.insert(files.end(), model.files.begin(), model.files.end());
    auto gen = root / "gen";
    if (std::filesystem::exists(gen)) {
      for (const auto& e : std::filesystem::recursive_directory_iterator(gen))
        if (e.is_regular_file()) files.push_back(std::filesystem::relative(e.path(), root).generic_string());
    }
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    ConfigTree digests;
    for (const auto& f : files) {
      std::string bytes = read_input(root, f);
      digests.set(f, support::sha256_hex(bytes));
      entries.push_back({f, std::move(bytes)});
    }
    manifest.set("project", name);
    manifest.set("files", digests);
  } else {
    const auto& tu = find_unit(analysis, unit_name);
    const StoreRecord& rec = latest_record(store, tu.name);
    std::string dataset = read_input(root, tu.dataset);
    std::string dataset_digest = support::sha256_hex(dataset);
    name = tu.name;
    manifest.set("unit", tu.name);
    if (kind == PackageKind::model) {
      std::string weights = read_input(root, rec.archive_path);
      manifest.set("weights", std::filesystem::path(rec.archive_path).filename().string());
      manifest.set("weights_digest", support::sha256_hex(weights));
      manifest.set("build", static_cast<std::int64_t>(rec.build_no));
      ConfigTree inputs;
      inputs.set("arch", rec.arch_digest);
      inputs.set("config", rec.config_digest);
      inputs.set("dataset", rec.dataset_digest);
      inputs.set("row_count", static_cast<std::int64_t>(rec.row_count));
      manifest.set("inputs", inputs);
      ConfigTree link;
      link.set("dataset_archive", fmt::format("{}-dataset.tar", tu.name));
      link.set("dataset_digest", rec.dataset_digest);
      manifest.set("link", link);
      entries.push_back({std::filesystem::path(rec.archive_path).filename().string(), std::move(weights)});
      std::string log_path = codegen::default_log_path(model, tu);
      if (std::filesystem::exists(root / log_path))
        entries.push_back({"training.log", read_input(root, log_path)});
    } else {
      manifest.set("dataset", tu.dataset);
      manifest.set("digest", dataset_digest);
      manifest.set("row_count", count_rows(dataset));
      manifest.set("columns", static_cast<std::int64_t>(support::split_csv_line(dataset.substr(0, dataset.find('\n'))).size()));
      ConfigTree link;
      link.set("model_archive", fmt::format("{}-model.tar", tu.name));
      link.set("weights_digest", support::file_digest(root / rec.archive_path));
      link.set("trained_with", dataset_digest == rec.dataset_digest);
      manifest.set("link", link);
      entries.push_back({std::filesystem::path(tu.dataset).filename().string(), std::move(dataset)});
    }
  }

  entries.insert(entries.begin(), support::TarEntry{"MANIFEST", frontend::print_config(manifest)});
  std::string bytes = support::write_tar(entries);
  std::string suffix = kind == PackageKind::source ? "source" : kind == PackageKind::model ? "model" : "dataset";
  std::string rel = fmt::format("{}/packages/{}-{}.tar", model.manifest.store, name, suffix);
  write_atomically(root / rel, bytes);
  PackageResult result{rel, support::sha256_hex(bytes), manifest};
  store.put_artifact({to_string(kind), name, result.digest, rel});
  store.save();
  return result;
}

}  // namespace mlc::buildsys
