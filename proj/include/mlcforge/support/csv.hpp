#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mlc::support {

// Dialect: comma separator, first row is the header, optional double-quoted
// fields with "" as an escaped quote, '.' decimal point. Blank lines are ignored.

std::vector<std::string> split_csv_line(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  [[nodiscard]] std::ptrdiff_t column(const std::string& name) const;
};

/// Throws std::runtime_error when the file cannot be read.
CsvTable read_csv(const std::filesystem::path& path);

struct CsvInfo {
  std::vector<std::string> header;
  std::size_t rows = 0;  // data rows, header excluded
  std::string digest;    // SHA-256 of the raw bytes
};

CsvInfo scan_csv(const std::filesystem::path& path);

/// Digests of the file prefix holding the header and the first `rows` data rows,
/// with and without the final line break. Empty strings when the file is shorter.
std::pair<std::string, std::string> prefix_digests(const std::filesystem::path& path, std::size_t rows);

}  // namespace mlc::support
