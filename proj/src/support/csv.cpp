#include "mlcforge/support/csv.hpp"

#include <fstream>
#include <stdexcept>

#include "mlcforge/support/digest.hpp"

namespace mlc::support {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool blank(std::string_view line) { return line.find_first_not_of(" \t\r") == std::string_view::npos; }

/// Calls fn(line, end_offset_including_newline) for each line.
template <class Fn>
void for_each_line(std::string_view text, Fn fn) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    std::string_view line = text.substr(pos, (nl == std::string_view::npos ? text.size() : nl) - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!fn(line, end)) return;
    pos = end;
  }
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::ptrdiff_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
  CsvTable t;
  std::string text = slurp(path);
  bool first = true;
  for_each_line(text, [&](std::string_view line, std::size_t) {
    if (blank(line)) return true;
    if (first) {
      t.header = split_csv_line(line);
      first = false;
    } else {
      t.rows.push_back(split_csv_line(line));
    }
    return true;
  });
  return t;
}

CsvInfo scan_csv(const std::filesystem::path& path) {
  CsvInfo info;
  std::string text = slurp(path);
  info.digest = sha256_hex(text);
  bool first = true;
  for_each_line(text, [&](std::string_view line, std::size_t) {
    if (blank(line)) return true;
    if (first) {
      info.header = split_csv_line(line);
      first = false;
    } else {
      ++info.rows;
    }
    return true;
  });
  return info;
}

std::pair<std::string, std::string> prefix_digests(const std::filesystem::path& path, std::size_t rows) {
  std::string text = slurp(path);
  std::size_t needed = rows + 1;
  std::size_t seen = 0;
  std::size_t cut = std::string::npos;
  for_each_line(text, [&](std::string_view line, std::size_t end) {
    if (!blank(line)) ++seen;
    if (seen == needed) {
      cut = end;
      return false;
    }
    return true;
  });
  if (cut == std::string::npos) return {};
  std::string_view prefix(text.data(), cut);
  std::string with = sha256_hex(prefix);
  std::string_view trimmed = prefix;
  if (!trimmed.empty() && trimmed.back() == '\n') trimmed.remove_suffix(1);
  if (!trimmed.empty() && trimmed.back() == '\r') trimmed.remove_suffix(1);
  return {with, sha256_hex(trimmed)};
}

}  // namespace mlc::support
