#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <string>
#include <string_view>

#include "mlcforge/core/config.hpp"
#include "mlcforge/support/bridge.hpp"
#include "mlcforge/support/weight_archive.hpp"

namespace mlc::support {

/// Bridge server that fakes training deterministically. TRAIN reads the
/// generated spec and the dataset, writes an archive whose parameters are a
/// pure function of (unit, dataset digest, prior archive) and a log in the
/// `epoch=<i> loss=<f> acc=<f>` format. PREDICT runs a real forward pass over
/// the loaded archive.
class MockBridgeServer {
 public:
  explicit MockBridgeServer(std::filesystem::path root);

  /// One response line (no terminator) for one request line. Thread-safe.
  std::string handle(std::string_view line);

  /// Serves until end of input; returns 0.
  int serve(std::istream& in, std::ostream& out);

  [[nodiscard]] int count(const std::string& verb) const;

 private:
  ConfigTree train(const ConfigTree& req);
  ConfigTree preprocess(const ConfigTree& req);
  ConfigTree load(const ConfigTree& req);
  ConfigTree predict(const ConfigTree& req);
  ConfigTree save(const ConfigTree& req);
  [[nodiscard]] std::filesystem::path resolve(const std::string& path) const;

  std::filesystem::path root_;
  std::map<std::string, WeightArchive> models_;
  std::map<std::string, int> counts_;
  mutable std::mutex mutex_;
};

/// Client wired directly to a MockBridgeServer.
class InProcessBridge final : public BridgeClient {
 public:
  explicit InProcessBridge(MockBridgeServer& server) : server_(server) {}
  BridgeResponse call(const std::string& verb, const std::string& payload) override;

 private:
  MockBridgeServer& server_;
  std::uint64_t next_id_ = 1;
};

/// Forward pass over dense layers named `layer<i>/weight` ([out, in]) and `layer<i>/bias`.
std::vector<double> forward(const WeightArchive& archive, const std::vector<double>& input);

}  // namespace mlc::support
