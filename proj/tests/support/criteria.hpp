#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mlc::testing {

struct ShapeSuiteReport {
  int cases = 0;
  int accepted = 0;          // generated architectures accepted by infer_shapes
  int broken = 0;            // dimension-breaking mutations
  int broken_rejected = 0;
  int absorbed = 0;          // mutations that leave every declared port intact
  int absorbed_accepted = 0;
  int round_trips = 0;       // print -> parse reproduced the architecture
  std::vector<std::string> failures;
  std::string fingerprint;   // digest over every case and verdict
  [[nodiscard]] bool ok() const;
};

/// Random architectures checked against an independent shape oracle, then
/// mutated one layer argument at a time.
ShapeSuiteReport run_shape_suite(std::uint64_t seed, int cases);

struct FuzzEntry {
  std::string parser;
  int inputs = 0;
  int failures = 0;  // unexpected exceptions or spans outside the input
  int diagnosed = 0;
  std::string first_failure;
};

struct FuzzReport {
  std::vector<FuzzEntry> parsers;
  [[nodiscard]] bool ok() const;
};

/// `per_parser` generated inputs for every parser: raw random bytes plus
/// mutations of the bundled corpus.
FuzzReport run_fuzz(std::uint64_t seed, int per_parser);

struct StalenessStep {
  std::string name;
  std::string expected;
  std::string observed;
  bool ok = false;
};

struct StalenessReport {
  std::vector<StalenessStep> steps;
  [[nodiscard]] bool ok() const;
};

/// Builds a copy of the sample project in `dir` with the in-process mock
/// bridge, then edits it: rebuild, append rows, edit a hyperparameter, shuffle rows.
StalenessReport run_staleness(const std::filesystem::path& dir);

}  // namespace mlc::testing
