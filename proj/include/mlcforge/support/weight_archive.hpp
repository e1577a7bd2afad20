#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlcforge/core/config.hpp"

namespace mlc::support {

// Binary layout, all integers little-endian:
//   "MLCW1"
//   u32 manifest length, manifest text (.tcl document syntax)
//   u32 parameter count, then per parameter a tensor block
//   u8 optimizer flag; when 1: u32 header length, header text, u32 tensor count, tensor blocks
//   "SHA2", 32-byte SHA-256 of every preceding byte
// Tensor block: u16 name length, name, u8 rank, rank x u32 dims, f32 values (row-major).

inline constexpr std::string_view kArchiveMagic = "MLCW1";
inline constexpr std::string_view kTrailerTag = "SHA2";

struct ArchiveTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
  bool operator==(const ArchiveTensor&) const = default;
};

struct OptimizerState {
  std::string kind = "adam";
  std::int64_t step = 0;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Moment estimates, named `m/<param>` and `v/<param>`.
  std::vector<ArchiveTensor> tensors;
  bool operator==(const OptimizerState&) const = default;
};

struct WeightArchive {
  std::vector<std::int64_t> layer_sizes;
  std::vector<std::string> activations;
  /// Shape of one input sample; defaults to [layer_sizes.front()].
  std::vector<std::int64_t> input_dims;
  std::string dataset_digest;
  std::int64_t epochs = 0;
  double metric = 0;
  std::vector<ArchiveTensor> params;
  std::optional<OptimizerState> optimizer;
  bool operator==(const WeightArchive&) const = default;

  [[nodiscard]] std::vector<std::int64_t> output_dims() const;
  [[nodiscard]] const ArchiveTensor* param(const std::string& name) const;
};

std::string encode_archive(const WeightArchive& archive);
/// Throws ModelError(CorruptArchive) on any structural or checksum failure.
WeightArchive decode_archive(std::string_view bytes);

void write_archive(const std::filesystem::path& path, const WeightArchive& archive);
WeightArchive read_archive(const std::filesystem::path& path);

/// Manifest fields as a config tree (same text stored in the archive).
ConfigTree archive_manifest(const WeightArchive& archive);

}  // namespace mlc::support
