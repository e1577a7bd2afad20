#include "mlcforge/support/mock_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/support/csv.hpp"
#include "mlcforge/support/digest.hpp"

namespace mlc::support {

namespace {

struct Failure {
  std::string reason;
};

std::string text(const ConfigTree& t, const char* key, bool required = true) {
  const ConfigValue* v = t.find(key);
  if (v == nullptr || !v->as_text()) {
    if (required) throw Failure{fmt::format("missing-{}", key)};
    return {};
  }
  return *v->as_text();
}

double number(const ConfigTree& t, std::string_view path, double fallback) {
  const ConfigValue* v = t.find_path(path);
  return v && v->as_number() ? *v->as_number() : fallback;
}

std::vector<double> numbers(const ConfigValue& v) {
  std::vector<double> out;
  if (auto n = v.as_number()) return {*n};
  if (const auto* l = v.get_if<ConfigList>())
    for (const auto& item : l->items) {
      auto inner = numbers(item);
      out.insert(out.end(), inner.begin(), inner.end());
    }
  return out;
}

ConfigValue number_list(const std::vector<double>& values) {
  ConfigList l;
  for (double d : values) l.items.emplace_back(d);
  return l;
}

std::uint64_t seed_of(const std::string& text) {
  auto d = sha256(text);
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s = (s << 8) | d[static_cast<std::size_t>(i)];
  return s;
}

/// Uniform in [-scale, scale); independent of the standard library's distributions.
float draw(std::mt19937_64& rng, double scale) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return static_cast<float>((2 * u - 1) * scale);
}

ArchiveTensor tensor(const std::string& name, std::vector<std::uint32_t> dims, float fill = 0) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return ArchiveTensor{name, std::move(dims), std::vector<float>(n, fill)};
}

std::vector<std::int64_t> ints(const ConfigValue* v) {
  std::vector<std::int64_t> out;
  if (v == nullptr) return out;
  if (const auto* l = v->get_if<ConfigList>())
    for (const auto& item : l->items) out.push_back(item.as_int().value_or(0));
  return out;
}

std::vector<std::string> texts(const ConfigValue* v) {
  std::vector<std::string> out;
  if (v == nullptr) return out;
  if (const auto* l = v->get_if<ConfigList>())
    for (const auto& item : l->items) out.push_back(item.as_text().value_or(""));
  return out;
}

double activate(const std::string& kind, double x) {
  if (kind == "relu") return x > 0 ? x : 0;
  if (kind == "sigmoid") return 1 / (1 + std::exp(-x));
  if (kind == "tanh") return std::tanh(x);
  return x;
}

}  // namespace

std::vector<double> forward(const WeightArchive& a, const std::vector<double>& input) {
  std::vector<double> x = input;
  for (std::size_t i = 0; i + 1 < a.layer_sizes.size(); ++i) {
    const ArchiveTensor* w = a.param(fmt::format("layer{}/weight", i));
    const ArchiveTensor* b = a.param(fmt::format("layer{}/bias", i));
    if (w == nullptr || b == nullptr || w->dims.size() != 2 || w->dims[1] != x.size())
      throw ModelError("ShapeMismatch", fmt::format("layer {} does not match its input", i));
    std::size_t rows = w->dims[0], cols = w->dims[1];
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = b->values[r];
      for (std::size_t c = 0; c < cols; ++c) acc += static_cast<double>(w->values[r * cols + c]) * x[c];
      y[r] = acc;
    }
    const std::string act = i < a.activations.size() ? a.activations[i] : "identity";
    if (act == "softmax") {
      double top = y.empty() ? 0 : *std::max_element(y.begin(), y.end());
      double sum = 0;
      for (auto& v : y) sum += (v = std::exp(v - top));
      for (auto& v : y) v /= sum;
    } else {
      for (auto& v : y) v = activate(act, v);
    }
    x = std::move(y);
  }
  return x;
}

MockBridgeServer::MockBridgeServer(std::filesystem::path root) : root_(std::move(root)) {}

int MockBridgeServer::count(const std::string& verb) const {
  std::lock_guard lock(mutex_);
  auto it = counts_.find(verb);
  return it == counts_.end() ? 0 : it->second;
}

std::filesystem::path MockBridgeServer::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() ? p : root_ / p;
}

std::string MockBridgeServer::handle(std::string_view line) {
  std::lock_guard lock(mutex_);
  auto frame = parse_frame(line);
  if (!frame || !frame->request) {
    std::uint64_t id = frame ? frame->id : 0;
    return format_response(id, false, "malformed-frame");
  }
  ++counts_[frame->verb];
  auto parsed = frontend::parse_value(frame->payload);
  const ConfigTree* req = parsed.value ? parsed.value->get_if<ConfigTree>() : nullptr;
  if (req == nullptr || has_errors(parsed.diagnostics)) return format_response(frame->id, false, "malformed-payload");
  try {
    ConfigTree res;
    if (frame->verb == "TRAIN") res = train(*req);
    else if (frame->verb == "PREPROCESS") res = preprocess(*req);
    else if (frame->verb == "LOAD") res = load(*req);
    else if (frame->verb == "PREDICT") res = predict(*req);
    else res = save(*req);
    return format_response(frame->id, true, frontend::print_inline(res));
  } catch (const Failure& f) {
    return format_response(frame->id, false, f.reason);
  } catch (const std::exception& e) {
    std::string what = e.what();
    for (auto& c : what)
      if (c == '\n' || c == '\r') c = ' ';
    return format_response(frame->id, false, "error " + frontend::quote(what));
  }
}

int MockBridgeServer::serve(std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << handle(line) << '\n' << std::flush;
  }
  return 0;
}

ConfigTree MockBridgeServer::preprocess(const ConfigTree& req) {
  std::string spec_path = text(req, "spec", false);
  std::string dataset = text(req, "dataset", false);
  if (dataset.empty() && !spec_path.empty()) {
    std::ifstream in(resolve(spec_path), std::ios::binary);
    std::string body((std::istreambuf_iterator<char>(in)), {});
    auto spec = frontend::parse_config(body, spec_path);
    if (!spec.tree) throw Failure{"bad-spec"};
    dataset = text(*spec.tree, "dataset");
  }
  if (dataset.empty()) {
    ConfigTree res;
    res.set("unit", text(req, "unit"));
    return res;
  }
  CsvInfo info = scan_csv(resolve(dataset));
  ConfigTree res;
  res.set("rows", static_cast<std::int64_t>(info.rows));
  res.set("columns", static_cast<std::int64_t>(info.header.size()));
  res.set("digest", info.digest);
  return res;
}

ConfigTree MockBridgeServer::train(const ConfigTree& req) {
  const std::string unit = text(req, "unit");
  const std::string spec_path = text(req, "spec");
  const std::string out_path = text(req, "out");
  const std::string log_path = text(req, "log");
  const std::string warm = text(req, "warm_start", false);

  std::ifstream spec_in(resolve(spec_path), std::ios::binary);
  if (!spec_in) throw Failure{"missing-spec"};
  std::string body((std::istreambuf_iterator<char>(spec_in)), {});
  auto parsed = frontend::parse_config(body, spec_path);
  if (!parsed.tree) throw Failure{"bad-spec"};
  const ConfigTree& spec = *parsed.tree;

  const std::string dataset = text(spec, "dataset");
  CsvTable table = read_csv(resolve(dataset));
  if (table.rows.empty()) throw Failure{"empty-dataset"};
  for (const auto& column : texts(spec.find("features"))) {
    auto c = table.column(column);
    if (c < 0) throw Failure{"missing-column " + frontend::quote(column)};
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& cell = table.rows[r].at(static_cast<std::size_t>(c));
      char* end = nullptr;
      std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0') throw Failure{fmt::format("bad-cell {} {}", r + 1, frontend::quote(column))};
    }
  }
  const std::string digest = file_digest(resolve(dataset));

  const ConfigTree* training = spec.find("training") ? spec.find("training")->get_if<ConfigTree>() : nullptr;
  ConfigTree empty;
  const ConfigTree& cfg = training ? *training : empty;
  const auto epochs = static_cast<std::int64_t>(number(cfg, "num_epoch", 10));
  const auto batch = std::max<std::int64_t>(1, static_cast<std::int64_t>(number(cfg, "batch_size", 32)));
  std::string kind = "sgd";
  if (const auto* o = cfg.find("optimizer")) {
    if (auto t = o->as_text()) kind = *t;
    else if (const auto* tree = o->get_if<ConfigTree>()) kind = text(*tree, "type", false).empty() ? kind : text(*tree, "type");
  }
  double lr = number(cfg, "learning_rate", number(cfg, "optimizer.learning_rate", 0.01));

  const ConfigTree* model = spec.find("model") ? spec.find("model")->get_if<ConfigTree>() : nullptr;
  if (model == nullptr) throw Failure{"bad-spec"};
  WeightArchive a;
  a.layer_sizes = ints(model->find("layer_sizes"));
  a.activations = texts(model->find("activations"));
  a.dataset_digest = digest;
  std::int64_t prior_epochs = 0, prior_steps = 0;
  std::mt19937_64 rng(seed_of(unit + "|" + digest + "|" + warm));
  if (!warm.empty()) {
    WeightArchive prior = read_archive(resolve(warm));
    if (prior.layer_sizes != a.layer_sizes) throw Failure{"shape-mismatch"};
    prior_epochs = prior.epochs;
    prior_steps = prior.optimizer ? prior.optimizer->step : 0;
    a.params = prior.params;
    for (auto& p : a.params)
      for (auto& v : p.values) v += draw(rng, 1e-3);
    if (prior.optimizer) a.optimizer = prior.optimizer;
  } else {
    for (std::size_t i = 0; i + 1 < a.layer_sizes.size(); ++i) {
      auto in = static_cast<std::uint32_t>(a.layer_sizes[i]);
      auto out = static_cast<std::uint32_t>(a.layer_sizes[i + 1]);
      double scale = std::sqrt(6.0 / static_cast<double>(in + out));
      ArchiveTensor w = tensor(fmt::format("layer{}/weight", i), {out, in});
      for (auto& v : w.values) v = draw(rng, scale);
      a.params.push_back(std::move(w));
      a.params.push_back(tensor(fmt::format("layer{}/bias", i), {out}));
    }
  }
  if (!a.optimizer) {
    OptimizerState o;
    o.kind = kind;
    o.learning_rate = lr;
    if (kind == "adam")
      for (const auto& p : a.params) {
        o.tensors.push_back(tensor("m/" + p.name, p.dims));
        o.tensors.push_back(tensor("v/" + p.name, p.dims));
      }
    a.optimizer = o;
  }
  const auto rows = static_cast<std::int64_t>(table.rows.size());
  a.optimizer->step = prior_steps + epochs * ((rows + batch - 1) / batch);
  a.epochs = prior_epochs + epochs;

  std::string log;
  double acc = 0;
  for (std::int64_t e = prior_epochs + 1; e <= a.epochs; ++e) {
    double loss = 2.0 / static_cast<double>(e + 1);
    acc = 1.0 - 0.5 / static_cast<double>(e + 1);
    log += fmt::format("epoch={} loss={:.6f} acc={:.6f}\n", e, loss, acc);
  }
  log += fmt::format("final_acc={:.6f}\n", acc);
  a.metric = std::round(acc * 1e6) / 1e6;

  auto out_file = resolve(out_path);
  auto log_file = resolve(log_path);
  if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
  if (log_file.has_parent_path()) std::filesystem::create_directories(log_file.parent_path());
  write_archive(out_file, a);
  std::ofstream(log_file, std::ios::binary) << log;

  ConfigTree res;
  res.set("unit", unit);
  res.set("archive", out_path);
  res.set("first_epoch", prior_epochs + 1);
  res.set("epochs", a.epochs);
  res.set("final_acc", a.metric);
  res.set("step", a.optimizer->step);
  return res;
}

ConfigTree MockBridgeServer::load(const ConfigTree& req) {
  const std::string unit = text(req, "unit");
  WeightArchive a = read_archive(resolve(text(req, "archive")));
  ConfigTree res;
  res.set("unit", unit);
  res.set("layer_sizes", int_list(a.layer_sizes));
  models_[unit] = std::move(a);
  return res;
}

ConfigTree MockBridgeServer::predict(const ConfigTree& req) {
  const std::string unit = text(req, "unit");
  auto it = models_.find(unit);
  if (it == models_.end()) throw Failure{"no-model"};
  const ConfigValue* input = req.find("input");
  if (input == nullptr) throw Failure{"missing-input"};
  std::vector<double> x = numbers(*input);
  if (it->second.layer_sizes.empty() || static_cast<std::int64_t>(x.size()) != it->second.layer_sizes.front())
    throw Failure{"width-mismatch"};
  ConfigTree res;
  std::vector<double> y = forward(it->second, x);
  for (auto& v : y) v = static_cast<double>(static_cast<float>(v));
  res.set("output", number_list(y));
  return res;
}

ConfigTree MockBridgeServer::save(const ConfigTree& req) {
  const std::string unit = text(req, "unit");
  auto it = models_.find(unit);
  if (it == models_.end()) throw Failure{"no-model"};
  const std::string path = text(req, "archive");
  write_archive(resolve(path), it->second);
  ConfigTree res;
  res.set("archive", path);
  return res;
}

BridgeResponse InProcessBridge::call(const std::string& verb, const std::string& payload) {
  auto frame = parse_frame(server_.handle(format_request(next_id_++, verb, payload)));
  if (!frame) throw BridgeError("ProtocolError", "malformed reply");
  return BridgeResponse{frame->ok, frame->payload};
}

}  // namespace mlc::support
