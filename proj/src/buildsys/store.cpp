#include "mlcforge/buildsys/store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <tuple>

#include <fmt/format.h>

#include "mlcforge/core/error.hpp"

namespace mlc::buildsys {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

bool is_digest(const std::string& s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("CorruptStore", fmt::format("{}: cannot be read", path.string()));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

[[noreturn]] void corrupt(const std::filesystem::path& path, std::size_t line, const std::string& why) {
  throw ModelError("CorruptStore", fmt::format("{}:{}: {}", path.string(), line, why));
}

}  // namespace

Store Store::open(const std::filesystem::path& dir) {
  Store s;
  s.dir_ = dir;
  auto index = dir / "index";
  if (std::filesystem::exists(index)) {
    auto lines = read_lines(index);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto f = split_tabs(lines[i]);
      if (f.size() != 7) corrupt(index, i + 1, fmt::format("expected 7 fields, found {}", f.size()));
      StoreRecord r;
      r.unit = f[0];
      r.arch_digest = f[1];
      r.config_digest = f[2];
      r.dataset_digest = f[3];
      r.archive_path = f[5];
      if (r.unit.empty()) corrupt(index, i + 1, "empty unit name");
      for (const auto* d : {&r.arch_digest, &r.config_digest, &r.dataset_digest})
        if (!is_digest(*d)) corrupt(index, i + 1, "malformed digest");
      if (!parse_u64(f[4], r.row_count)) corrupt(index, i + 1, "malformed row count");
      if (!parse_u64(f[6], r.build_no)) corrupt(index, i + 1, "malformed build number");
      s.records_.push_back(std::move(r));
    }
  }
  auto artifacts = dir / "artifacts";
  if (std::filesystem::exists(artifacts)) {
    auto lines = read_lines(artifacts);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto f = split_tabs(lines[i]);
      if (f.size() != 4) corrupt(artifacts, i + 1, fmt::format("expected 4 fields, found {}", f.size()));
      if (!is_digest(f[2])) corrupt(artifacts, i + 1, "malformed digest");
      s.artifacts_.push_back({f[0], f[1], f[2], f[3]});
    }
  }
  return s;
}

std::vector<const StoreRecord*> Store::records_for(const std::string& unit) const {
  std::vector<const StoreRecord*> out;
  for (const auto& r : records_)
    if (r.unit == unit) out.push_back(&r);
  return out;
}

std::uint64_t Store::last_build() const {
  std::uint64_t n = 0;
  for (const auto& r : records_) n = std::max(n, r.build_no);
  return n;
}

void Store::put(StoreRecord record) {
  std::erase_if(records_, [&](const StoreRecord& r) { return r.unit == record.unit; });
  records_.push_back(std::move(record));
  std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) { return a.unit < b.unit; });
}

void Store::put_artifact(ArtifactRecord record) {
  std::erase_if(artifacts_, [&](const ArtifactRecord& r) { return r.kind == record.kind && r.name == record.name; });
  artifacts_.push_back(std::move(record));
  std::sort(artifacts_.begin(), artifacts_.end(),
            [](const auto& a, const auto& b) { return std::tie(a.kind, a.name) < std::tie(b.kind, b.name); });
}

std::string Store::format_record(const StoreRecord& r) {
  return fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}", r.unit, r.arch_digest, r.config_digest, r.dataset_digest,
                     r.row_count, r.archive_path, r.build_no);
}

void Store::save() const {
  std::filesystem::create_directories(dir_);
  std::string index;
  for (const auto& r : records_) index += format_record(r) + "\n";
  write_atomically(dir_ / "index", index);
  std::string artifacts;
  for (const auto& a : artifacts_) artifacts += fmt::format("{}\t{}\t{}\t{}\n", a.kind, a.name, a.digest, a.path);
  write_atomically(dir_ / "artifacts", artifacts);
}

void write_atomically(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << bytes;
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mlc::buildsys
