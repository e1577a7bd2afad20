// Generated by mlcforge 0.1.0. Do not edit.
// Shared runtime for generated glue.
#pragma once

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mlc_gen {

using Tensor = std::vector<double>;
using Value = std::variant<std::int64_t, double, bool, std::string, Tensor>;

struct NotImplemented : std::logic_error {
  using std::logic_error::logic_error;
};

struct BridgeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest text that reads back to the same double.
inline std::string encode_real(double v) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string encode_value(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return encode_real(*d);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (const auto* s = std::get_if<std::string>(&v)) {
    std::string out = "\"";
    for (char c : *s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  }
  std::string out = "(";
  const auto& t = std::get<Tensor>(v);
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? ", " : "") + encode_real(t[i]);
  return out + ")";
}

/// `{ message: <name> args: (<v>, ...) }`
inline std::string encode_message(const std::string& name, const std::vector<Value>& args) {
  std::string out = "{ message: " + name + " args: (";
  for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ", " : "") + encode_value(args[i]);
  return out + ") }";
}

class ValueReader {
 public:
  explicit ValueReader(const std::string& text, std::size_t pos = 0) : text_(text), pos_(pos) {}

  Value read() {
    skip();
    if (pos_ >= text_.size()) throw CodecError("unexpected end of payload");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Tensor t;
      skip();
      while (peek() != ')') {
        Value item = read();
        if (const auto* n = std::get_if<Tensor>(&item)) {
          t.insert(t.end(), n->begin(), n->end());
        } else if (const auto* i = std::get_if<std::int64_t>(&item)) {
          t.push_back(static_cast<double>(*i));
        } else if (const auto* d = std::get_if<double>(&item)) {
          t.push_back(*d);
        } else {
          throw CodecError("non-numeric tensor element");
        }
        skip();
        if (peek() == ',') ++pos_;
        skip();
      }
      ++pos_;
      return t;
    }
    if (c == '"') {
      std::string s;
      for (++pos_; pos_ < text_.size() && text_[pos_] != '"'; ++pos_) {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        s += text_[pos_];
      }
      if (pos_ >= text_.size()) throw CodecError("unterminated string");
      ++pos_;
      return s;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != ',' &&
           text_[pos_] != ')' && text_[pos_] != '}')
      ++pos_;
    std::string word = text_.substr(start, pos_ - start);
    if (word == "true") return true;
    if (word == "false") return false;
    if (word.empty()) throw CodecError("empty value");
    char* end = nullptr;
    if (word.find_first_of(".eE") == std::string::npos && word != "inf" && word != "nan") {
      long long i = std::strtoll(word.c_str(), &end, 10);
      if (*end == '\0') return static_cast<std::int64_t>(i);
    }
    double d = std::strtod(word.c_str(), &end);
    if (*end == '\0') return d;
    return word;
  }

  /// `(a, b, ...)` without flattening nested lists.
  std::vector<Value> read_items() {
    skip();
    if (peek() != '(') throw CodecError("expected '('");
    ++pos_;
    std::vector<Value> out;
    skip();
    while (peek() != ')') {
      out.push_back(read());
      skip();
      if (peek() == ',') ++pos_;
      skip();
    }
    ++pos_;
    return out;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() {
    if (pos_ >= text_.size()) throw CodecError("unexpected end of payload");
    return text_[pos_];
  }

  const std::string& text_;
  std::size_t pos_;
};

/// Offset just past the first `key:` of an inline tree payload.
inline std::size_t entry_position(const std::string& payload, const std::string& key) {
  std::string needle = key + ":";
  std::size_t at = 0;
  while ((at = payload.find(needle, at)) != std::string::npos) {
    bool boundary = at == 0 || std::isspace(static_cast<unsigned char>(payload[at - 1])) || payload[at - 1] == '{';
    if (boundary) return at + needle.size();
    at += needle.size();
  }
  throw CodecError("missing entry '" + key + "'");
}

inline Value find_entry(const std::string& payload, const std::string& key) {
  return ValueReader(payload, entry_position(payload, key)).read();
}

/// Arguments of an encoded message; tensor arguments stay separate items.
inline std::vector<Value> decode_args(const std::string& payload) {
  return ValueReader(payload, entry_position(payload, "args")).read_items();
}

inline std::int64_t as_int(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return static_cast<std::int64_t>(*d);
  throw CodecError("expected an integer");
}

inline double as_real(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw CodecError("expected a real");
}

inline bool as_bool(const Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw CodecError("expected a boolean");
}

inline std::string as_string(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw CodecError("expected a string");
}

inline Tensor as_tensor(const Value& v) {
  if (const auto* t = std::get_if<Tensor>(&v)) return *t;
  return Tensor{as_real(v)};
}

inline std::int64_t argmax(const Tensor& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[best]) best = i;
  return static_cast<std::int64_t>(best);
}

inline void append(Tensor& t, const Tensor& v) { t.insert(t.end(), v.begin(), v.end()); }
inline void append(Tensor& t, double v) { t.push_back(v); }

/// Prediction output assigned to an integer: class index for vectors.
inline std::int64_t int_result(const Tensor& t) {
  if (t.size() == 1) return static_cast<std::int64_t>(t[0] < 0 ? t[0] - 0.5 : t[0] + 0.5);
  return argmax(t);
}

inline double real_result(const Tensor& t) { return t.empty() ? 0.0 : t[0]; }

/// Host services for generated glue: message output and the ML bridge.
class Runtime {
 public:
  virtual ~Runtime() = default;

  virtual void send(const std::string& port, const std::string& message, std::vector<Value> args) = 0;

  /// Sends `REQ <id> <verb> <payload>`; returns the payload of an OK response
  /// and throws BridgeError on ERR.
  virtual std::string bridge(const std::string& verb, const std::string& payload) = 0;

  void preprocess(const std::string& unit) { bridge("PREPROCESS", "{ unit: " + unit + " }"); }
  void train(const std::string& unit) { bridge("TRAIN", "{ unit: " + unit + " }"); }
  Tensor predict(const std::string& unit, const Tensor& input) {
    std::string res = bridge("PREDICT", "{ unit: " + unit + " input: " + encode_value(input) + " }");
    return as_tensor(find_entry(res, "output"));
  }
};

}  // namespace mlc_gen
