// Generated by mlcforge 0.1.0 from system/calculator.scl. Do not edit.
// Runtime glue for thing 'Camera'.
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "../mlc_runtime.hpp"

namespace mlc_gen::Camera_glue {

enum class State { idle };

inline const char* state_name(State s) {
  switch (s) {
    case State::idle: return "idle";
  }
  return "";
}

struct Properties {
};

// message image(px: Q(0:16)^{64})
struct image_msg {
  Tensor px{};

  static constexpr const char* kName = "image";

  [[nodiscard]] std::vector<Value> values() const { return {Value(px)}; }
  [[nodiscard]] std::string encode() const { return encode_message(kName, values()); }
  static image_msg decode(const std::string& payload) {
    std::vector<Value> args = decode_args(payload);
    if (args.size() != 1) throw CodecError("image: expected 1 argument(s)");
    image_msg m;
    m.px = as_tensor(args[0]);
    return m;
  }
};

struct TransitionRow {
  State source;
  const char* port;  // empty for triggerless rows
  const char* message;
  const char* guard;
  const char* actions;
  State target;
  bool internal;
};

inline constexpr State kInitialState = State::idle;

inline constexpr std::array<TransitionRow, 1> kTransitions{{
    {State::idle, "lens", "image", "", "stream!image(px)", State::idle, true},
}};

class Glue {
 public:
  explicit Glue(Runtime& rt) : rt_(rt) {}

  [[nodiscard]] State state() const { return state_; }
  [[nodiscard]] const Properties& properties() const { return p_; }
  Properties& properties() { return p_; }

  /// Enters the initial state and runs triggerless transitions.
  void start() {
    state_ = kInitialState;
    run_auto();
  }

  /// `lens?image`; true when a transition fired.
  bool on_lens_image(const image_msg& m) {
    switch (state_) {
      case State::idle:
        effect_0(m);
        run_auto();
        return true;
      default:
        break;
    }
    return false;
  }

  /// Decodes and dispatches a message received on `port`.
  bool receive(const std::string& port, const std::string& payload) {
    std::string message = as_string(find_entry(payload, "message"));
    if (port == "lens" && message == "image") return on_lens_image(image_msg::decode(payload));
    return false;
  }

  /// Fires triggerless transitions until none is enabled.
  void run_auto() {
  }

 private:
  void effect_0(const image_msg& m) {
    rt_.send("stream", "image", {Value(m.px)});
  }

  Runtime& rt_;
  State state_ = kInitialState;
  Properties p_;
};

}  // namespace mlc_gen::Camera_glue
