#include "mlcforge/support/bridge.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

namespace mlc::support {

bool is_verb(std::string_view word) {
  for (const char* v : kVerbs)
    if (word == v) return true;
  return false;
}

std::string format_request(std::uint64_t id, const std::string& verb, const std::string& payload) {
  return fmt::format("REQ {} {} {}", id, verb, payload);
}

std::string format_response(std::uint64_t id, bool ok, const std::string& payload) {
  return fmt::format("RES {} {} {}", id, ok ? "OK" : "ERR", payload);
}

namespace {

std::string_view next_word(std::string_view& rest) {
  std::size_t end = rest.find(' ');
  std::string_view word = rest.substr(0, end);
  rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end + 1);
  return word;
}

std::optional<std::uint64_t> parse_id(std::string_view s) {
  if (s.empty() || s.size() > 19) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace

std::optional<Frame> parse_frame(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find('\n') != std::string_view::npos) return std::nullopt;
  std::string_view rest = line;
  std::string_view tag = next_word(rest);
  auto id = parse_id(next_word(rest));
  std::string_view word = next_word(rest);
  if (!id) return std::nullopt;
  Frame f;
  f.id = *id;
  f.payload = std::string(rest);
  if (tag == "REQ") {
    if (!is_verb(word)) return std::nullopt;
    f.request = true;
    f.verb = std::string(word);
  } else if (tag == "RES") {
    if (word != "OK" && word != "ERR") return std::nullopt;
    f.request = false;
    f.ok = word == "OK";
  } else {
    return std::nullopt;
  }
  return f;
}

SubprocessBridge::SubprocessBridge(std::vector<std::string> argv, const std::filesystem::path& cwd,
                                   std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  if (argv.empty()) throw BridgeError("BridgeFailure", "empty bridge command");
  int in[2], out[2], err[2];
  if (pipe(in) != 0 || pipe(out) != 0 || pipe(err) != 0)
    throw BridgeError("BridgeFailure", fmt::format("pipe: {}", std::strerror(errno)));
  pid_t pid = fork();
  if (pid < 0) throw BridgeError("BridgeFailure", fmt::format("fork: {}", std::strerror(errno)));
  if (pid == 0) {
    dup2(in[0], STDIN_FILENO);
    dup2(out[1], STDOUT_FILENO);
    dup2(err[1], STDERR_FILENO);
    for (int fd : {in[0], in[1], out[0], out[1], err[0], err[1]}) close(fd);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(126);
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    std::fprintf(stderr, "cannot execute %s: %s\n", args[0], std::strerror(errno));
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  close(err[1]);
  pid_ = pid;
  in_ = in[1];
  out_ = out[0];
  err_ = err[0];
  fcntl(err_, F_SETFL, fcntl(err_, F_GETFL) | O_NONBLOCK);
  std::signal(SIGPIPE, SIG_IGN);
}

SubprocessBridge::~SubprocessBridge() { shutdown(); }

void SubprocessBridge::shutdown() {
  if (in_ >= 0) close(in_);
  in_ = -1;
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      usleep(20000);
    }
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }
  if (out_ >= 0) close(out_);
  if (err_ >= 0) close(err_);
  out_ = err_ = -1;
}

void SubprocessBridge::drain_stderr() {
  char buf[4096];
  for (;;) {
    ssize_t n = read(err_, buf, sizeof buf);
    if (n <= 0) break;
    stderr_.append(buf, static_cast<std::size_t>(n));
    if (stderr_.size() > 65536) stderr_.erase(0, stderr_.size() - 65536);
  }
}

std::string SubprocessBridge::stderr_tail() const {
  constexpr std::size_t kExcerpt = 2000;
  return stderr_.size() > kExcerpt ? stderr_.substr(stderr_.size() - kExcerpt) : stderr_;
}

BridgeResponse SubprocessBridge::call(const std::string& verb, const std::string& payload) {
  if (in_ < 0) throw BridgeError("BridgeFailure", "bridge is not running");
  std::uint64_t id = next_id_++;
  std::string line = format_request(id, verb, payload) + "\n";
  for (std::size_t done = 0; done < line.size();) {
    ssize_t n = write(in_, line.data() + done, line.size() - done);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      drain_stderr();
      throw BridgeError("BridgeFailure", "bridge closed its input", stderr_tail());
    }
    done += static_cast<std::size_t>(n);
  }

  auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    std::size_t nl;
    while ((nl = pending_.find('\n')) != std::string::npos) {
      std::string reply = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      auto frame = parse_frame(reply);
      if (!frame || frame->request)
        throw BridgeError("ProtocolError", fmt::format("malformed bridge reply '{}'", reply), stderr_tail());
      if (frame->id != id) continue;  // stale reply
      return BridgeResponse{frame->ok, frame->payload};
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      drain_stderr();
      shutdown();
      throw BridgeError("BridgeTimeout", fmt::format("no reply to {} within {} ms", verb, timeout_.count()),
                        stderr_tail());
    }
    pollfd fds[2] = {{out_, POLLIN, 0}, {err_, POLLIN, 0}};
    int r = poll(fds, 2, static_cast<int>(std::min<std::int64_t>(left.count(), 1000)));
    if (r < 0 && errno != EINTR) throw BridgeError("BridgeFailure", "poll failed");
    if (fds[1].revents & POLLIN) drain_stderr();
    if (fds[0].revents & (POLLIN | POLLHUP)) {
      char buf[65536];
      ssize_t n = read(out_, buf, sizeof buf);
      if (n > 0) {
        pending_.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0) {
        drain_stderr();
        shutdown();
        throw BridgeError("BridgeFailure", "bridge exited", stderr_tail());
      }
    }
  }
}

std::vector<std::string> SubprocessBridge::split_command(const std::string& command) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : command) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace mlc::support
