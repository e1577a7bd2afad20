#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlc::support {

// Line-delimited UTF-8 frames:
//   REQ <id> <VERB> <payload>
//   RES <id> OK|ERR <payload>
// The payload is a single-line value in .tcl syntax, usually `{ key: value ... }`.

inline constexpr const char* kVerbs[] = {"PREPROCESS", "TRAIN", "PREDICT", "LOAD", "SAVE"};

bool is_verb(std::string_view word);

struct Frame {
  bool request = true;
  std::uint64_t id = 0;
  std::string verb;  // requests only
  bool ok = true;    // responses only
  std::string payload;
};

std::string format_request(std::uint64_t id, const std::string& verb, const std::string& payload);
std::string format_response(std::uint64_t id, bool ok, const std::string& payload);

/// Parses one line without its terminator; nullopt when malformed.
std::optional<Frame> parse_frame(std::string_view line);

class BridgeError : public std::runtime_error {
 public:
  BridgeError(std::string code, const std::string& message, std::string excerpt = {})
      : std::runtime_error(message), code_(std::move(code)), excerpt_(std::move(excerpt)) {}
  /// BridgeFailure, BridgeTimeout or ProtocolError.
  [[nodiscard]] const std::string& code() const { return code_; }
  /// Tail of the bridge's error stream, when available.
  [[nodiscard]] const std::string& excerpt() const { return excerpt_; }

 private:
  std::string code_;
  std::string excerpt_;
};

struct BridgeResponse {
  bool ok = true;
  std::string payload;
};

/// One request in flight at a time.
class BridgeClient {
 public:
  virtual ~BridgeClient() = default;
  virtual BridgeResponse call(const std::string& verb, const std::string& payload) = 0;
};

/// Talks to a child process over its standard streams.
class SubprocessBridge final : public BridgeClient {
 public:
  static constexpr std::chrono::seconds kDefaultTimeout{600};

  /// Starts `argv` in `cwd`. Throws BridgeError(BridgeFailure) when it cannot be spawned.
  SubprocessBridge(std::vector<std::string> argv, const std::filesystem::path& cwd,
                   std::chrono::milliseconds timeout = kDefaultTimeout);
  ~SubprocessBridge() override;
  SubprocessBridge(const SubprocessBridge&) = delete;
  SubprocessBridge& operator=(const SubprocessBridge&) = delete;

  BridgeResponse call(const std::string& verb, const std::string& payload) override;

  /// Whitespace-separated launch command, e.g. "python -m mlcforge_runtime.bridge".
  static std::vector<std::string> split_command(const std::string& command);

 private:
  void drain_stderr();
  std::string stderr_tail() const;
  void shutdown();

  int pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  int err_ = -1;
  std::uint64_t next_id_ = 1;
  std::chrono::milliseconds timeout_;
  std::string pending_;
  std::string stderr_;
};

}  // namespace mlc::support
