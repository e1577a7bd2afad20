#include "mlcforge/frontend/project.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "mlcforge/frontend/parser.hpp"

namespace fs = std::filesystem;

namespace mlc::frontend {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool match_segment(std::string_view p, std::string_view s) {
  if (p.empty()) return s.empty();
  if (p[0] == '*') {
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (match_segment(p.substr(1), s.substr(i))) return true;
      if (i < s.size() && s[i] == '/') break;
    }
    return false;
  }
  if (s.empty() || s[0] == '/') return false;
  if (p[0] != '?' && p[0] != s[0]) return false;
  return match_segment(p.substr(1), s.substr(1));
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view path) {
  if (pattern.substr(0, 3) == "**/") {
    auto rest = pattern.substr(3);
    if (glob_match(rest, path)) return true;
    for (std::size_t i = 0; i < path.size(); ++i)
      if (path[i] == '/' && glob_match(rest, path.substr(i + 1))) return true;
    return false;
  }
  auto slash = pattern.find('/');
  if (slash == std::string_view::npos) return match_segment(pattern, path) && path.find('/') == std::string_view::npos;
  auto pslash = path.find('/');
  if (pslash == std::string_view::npos) return false;
  return match_segment(pattern.substr(0, slash), path.substr(0, pslash)) &&
         glob_match(pattern.substr(slash + 1), path.substr(pslash + 1));
}

std::string read_source(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') continue;
    out += raw[i];
  }
  return out;
}

ManifestResult parse_manifest(std::string_view text, const std::string& file) {
  ManifestResult r;
  auto& m = r.manifest;
  m.span = SourceSpan{file, 1, 1, 0, text.size()};
  std::map<std::string, SourceSpan> seen;
  std::size_t offset = 0;
  std::uint32_t line_no = 0;
  while (offset <= text.size()) {
    auto end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(offset, end - offset);
    ++line_no;
    SourceSpan span{file, line_no, 1, offset, raw.size()};
    offset = end + 1;
    auto hash = raw.find('#');
    std::string line = trim(raw.substr(0, hash));
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      r.diagnostics.push_back(make_error("ManifestSyntax", "expected 'key = value'", span));
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) {
      r.diagnostics.push_back(make_error("ManifestSyntax", "empty key", span));
      continue;
    }
    if (auto it = seen.find(key); it != seen.end()) {
      auto d = make_error("DuplicateKey", fmt::format("manifest key '{}' set twice", key), span);
      d.related.push_back(it->second);
      r.diagnostics.push_back(std::move(d));
      continue;
    }
    seen.emplace(key, span);
    auto parse_bool = [&](bool& out) {
      if (value == "true" || value == "false") {
        out = value == "true";
      } else {
        r.diagnostics.push_back(
            make_error("TypeError", fmt::format("manifest key '{}' expects true or false", key), span));
      }
    };
    if (key == "name") {
      m.name = value;
    } else if (key == "backend") {
      if (value.find_first_of(" \t,") != std::string::npos)
        r.diagnostics.push_back(make_error("InvalidBackend", "exactly one backend id expected", span));
      m.backend = value;
    } else if (key == "automl") {
      parse_bool(m.automl);
    } else if (key == "store") {
      m.store = value;
    } else if (key == "networks") {
      m.network_globs = split_list(value);
    } else if (key == "configs") {
      m.config_globs = split_list(value);
    } else if (key == "systems") {
      m.system_globs = split_list(value);
    } else if (key == "bridge") {
      m.bridge = value;
    } else if (key.rfind("data.", 0) == 0 && key.size() > 5) {
      m.network_data[key.substr(5)] = value;
    } else if (key.rfind("sequential.", 0) == 0 && key.size() > 11) {
      bool flag = false;
      parse_bool(flag);
      m.sequential[key.substr(11)] = flag;
    } else {
      r.diagnostics.push_back(make_error("UnknownKey", fmt::format("unknown manifest key '{}'", key), span));
    }
    if (end == text.size()) break;
  }
  if (m.name.empty()) r.diagnostics.push_back(make_error("MissingKey", "manifest must set 'name'", m.span));
  if (m.backend.empty()) r.diagnostics.push_back(make_error("InvalidBackend", "backend id is empty", m.span));
  return r;
}

namespace {

struct Declared {
  std::string kind;
  SourceSpan span;
};

void declare(std::map<std::string, Declared>& names, const std::string& name, const std::string& kind,
             const SourceSpan& span, Diagnostics& diags) {
  auto [it, inserted] = names.emplace(name, Declared{kind, span});
  if (inserted) return;
  auto d = make_error("DuplicateName",
                      fmt::format("{} '{}' already declared as {} at {}:{}:{}", kind, name, it->second.kind,
                                  it->second.span.file, it->second.span.line, it->second.span.column),
                      span);
  d.related.push_back(it->second.span);
  diags.push_back(std::move(d));
}

std::vector<std::string> collect_files(const fs::path& root, const ProjectManifest& m) {
  std::vector<std::string> files;
  std::error_code ec;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  for (; !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    const auto name = it->path().filename().string();
    if (it->is_directory()) {
      auto rel = fs::relative(it->path(), root).generic_string();
      if ((!name.empty() && name[0] == '.') || rel == "gen" || rel == m.store || rel == "build")
        it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) files.push_back(fs::relative(it->path(), root).generic_string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

bool any_match(const std::vector<std::string>& globs, const std::string& path) {
  return std::any_of(globs.begin(), globs.end(), [&](const std::string& g) { return glob_match(g, path); });
}

}  // namespace

ProjectResult load_project(const fs::path& dir) {
  ProjectResult r;
  ModelUnit& unit = r.unit;
  unit.root = dir.string();
  const fs::path manifest_path = dir / kManifestFile;
  if (!fs::is_regular_file(manifest_path)) {
    r.diagnostics.push_back(make_error("MissingManifest",
                                       fmt::format("no {} found in '{}'", kManifestFile, dir.string()),
                                       SourceSpan{dir.string(), 0, 0, 0, 0}));
    unit.valid = false;
    return r;
  }
  auto mr = parse_manifest(read_source(manifest_path), kManifestFile);
  unit.manifest = std::move(mr.manifest);
  append(r.diagnostics, std::move(mr.diagnostics));

  std::map<std::string, Declared> components;  // networks, things, stubs
  std::map<std::string, Declared> pipelines;
  std::map<std::string, Declared> configs;

  for (const auto& rel : collect_files(dir, unit.manifest)) {
    const bool is_net = any_match(unit.manifest.network_globs, rel);
    const bool is_cfg = any_match(unit.manifest.config_globs, rel);
    const bool is_sys = any_match(unit.manifest.system_globs, rel);
    if (!is_net && !is_cfg && !is_sys) continue;
    unit.files.push_back(rel);
    const std::string text = read_source(dir / rel);
    if (is_net) {
      auto res = parse_networks(text, rel);
      append(r.diagnostics, std::move(res.diagnostics));
      for (auto& n : res.networks) {
        declare(components, n.name, "component", n.span, r.diagnostics);
        unit.networks.push_back(std::move(n));
      }
    } else if (is_cfg) {
      auto res = parse_config(text, rel);
      append(r.diagnostics, std::move(res.diagnostics));
      NamedConfig cfg;
      cfg.name = fs::path(rel).stem().string();
      cfg.span = SourceSpan{rel, 1, 1, 0, text.size()};
      declare(configs, cfg.name, "config", cfg.span, r.diagnostics);
      if (res.tree) cfg.tree = std::move(*res.tree);
      unit.configs.push_back(std::move(cfg));
    } else {
      auto res = parse_system(text, rel);
      append(r.diagnostics, std::move(res.diagnostics));
      for (auto& t : res.model.things) {
        declare(components, t.name, "thing", t.span, r.diagnostics);
        unit.things.push_back(std::move(t));
      }
      for (auto& s : res.model.stubs) {
        declare(components, s.name, "stub", s.span, r.diagnostics);
        unit.stubs.push_back(std::move(s));
      }
      for (auto& p : res.model.pipelines) {
        declare(pipelines, p.name, "pipeline", p.span, r.diagnostics);
        unit.pipelines.push_back(std::move(p));
      }
    }
  }

  // Cross-file references.
  for (const auto& p : unit.pipelines) {
    for (const auto& inst : p.instances) {
      if (!components.count(inst.type_name))
        r.diagnostics.push_back(make_error(
            "UnknownType", fmt::format("instance '{}' refers to unknown component '{}'", inst.name, inst.type_name),
            inst.span));
    }
  }
  for (const auto& [net, path] : unit.manifest.network_data) {
    if (!unit.network(net))
      r.diagnostics.push_back(make_warning(
          "UnknownNetwork", fmt::format("manifest key 'data.{}' names no declared network", net), unit.manifest.span));
    if (!fs::is_regular_file(dir / path))
      r.diagnostics.push_back(make_error(
          "MissingDataset", fmt::format("dataset '{}' for network '{}' not found", path, net), unit.manifest.span));
  }
  for (const auto& t : unit.things) {
    if (t.ml && !t.ml->dataset.empty() && !fs::is_regular_file(dir / t.ml->dataset))
      r.diagnostics.push_back(make_error(
          "MissingDataset", fmt::format("dataset '{}' of thing '{}' not found", t.ml->dataset, t.name), t.ml->span));
  }
  for (const auto& c : unit.configs) {
    if (!unit.network(c.name))
      r.diagnostics.push_back(make_warning(
          "OrphanConfig", fmt::format("config '{}' does not match any network name", c.name), c.span));
  }

  sort_diagnostics(r.diagnostics);
  unit.valid = !has_errors(r.diagnostics);
  return r;
}

}  // namespace mlc::frontend
