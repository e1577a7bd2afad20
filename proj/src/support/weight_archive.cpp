#include "mlcforge/support/weight_archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "mlcforge/core/error.hpp"
#include "mlcforge/frontend/parser.hpp"
#include "mlcforge/frontend/printer.hpp"
#include "mlcforge/support/digest.hpp"

namespace mlc::support {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

namespace {

[[noreturn]] void corrupt(const std::string& why) { throw ModelError("CorruptArchive", "corrupt weight archive: " + why); }

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  template <class T>
  void scalar(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void text32(const std::string& s) {
    scalar<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  void tensor(const ArchiveTensor& t) {
    if (t.name.size() > 0xffff) corrupt("tensor name too long");
    scalar<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    bytes(t.name);
    scalar<std::uint8_t>(static_cast<std::uint8_t>(t.dims.size()));
    std::size_t n = 1;
    for (auto d : t.dims) {
      scalar<std::uint32_t>(d);
      n *= d;
    }
    if (n != t.values.size()) corrupt(fmt::format("tensor '{}' holds {} values for {} elements", t.name, t.values.size(), n));
    for (float v : t.values) scalar<float>(v);
  }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::string_view bytes(std::size_t n) {
    if (n > data_.size() - pos_) corrupt("truncated");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  T scalar() {
    T v;
    std::memcpy(&v, bytes(sizeof(T)).data(), sizeof(T));
    return v;
  }
  std::string text32() { return std::string(bytes(scalar<std::uint32_t>())); }
  ArchiveTensor tensor() {
    ArchiveTensor t;
    t.name = std::string(bytes(scalar<std::uint16_t>()));
    auto rank = scalar<std::uint8_t>();
    std::size_t n = 1;
    for (int i = 0; i < rank; ++i) {
      t.dims.push_back(scalar<std::uint32_t>());
      n *= t.dims.back();
      if (n > data_.size()) corrupt("tensor larger than archive");
    }
    t.values.resize(n);
    auto raw = bytes(n * sizeof(float));
    std::memcpy(t.values.data(), raw.data(), raw.size());
    return t;
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

ConfigList int_items(const std::vector<std::int64_t>& v) {
  ConfigList l;
  for (auto x : v) l.items.emplace_back(x);
  return l;
}

std::vector<std::int64_t> ints_of(const ConfigValue* v, const char* key) {
  std::vector<std::int64_t> out;
  if (v == nullptr) return out;
  const auto* list = v->get_if<ConfigList>();
  if (list == nullptr) corrupt(fmt::format("manifest '{}' is not a list", key));
  for (const auto& item : list->items) {
    auto i = item.as_int();
    if (!i) corrupt(fmt::format("manifest '{}' holds a non-integer", key));
    out.push_back(*i);
  }
  return out;
}

ConfigTree parse_text(const std::string& text, const char* what) {
  auto r = frontend::parse_config(text, what);
  if (!r.tree || has_errors(r.diagnostics)) corrupt(fmt::format("unreadable {}", what));
  return std::move(*r.tree);
}

}  // namespace

std::vector<std::int64_t> WeightArchive::output_dims() const {
  if (layer_sizes.empty()) return {};
  return {layer_sizes.back()};
}

const ArchiveTensor* WeightArchive::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

ConfigTree archive_manifest(const WeightArchive& a) {
  ConfigTree t;
  t.set("layer_sizes", int_items(a.layer_sizes));
  ConfigList acts;
  for (const auto& s : a.activations) acts.items.emplace_back(Token{s});
  t.set("activations", std::move(acts));
  t.set("input_dims", int_items(a.input_dims.empty() && !a.layer_sizes.empty()
                                    ? std::vector<std::int64_t>{a.layer_sizes.front()}
                                    : a.input_dims));
  t.set("dataset_digest", a.dataset_digest);
  t.set("epochs", a.epochs);
  t.set("metric", a.metric);
  return t;
}

std::string encode_archive(const WeightArchive& a) {
  Writer w;
  w.bytes(kArchiveMagic);
  w.text32(frontend::print_config(archive_manifest(a)));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(a.params.size()));
  for (const auto& p : a.params) w.tensor(p);
  w.scalar<std::uint8_t>(a.optimizer ? 1 : 0);
  if (a.optimizer) {
    const auto& o = *a.optimizer;
    ConfigTree h;
    h.set("kind", Token{o.kind});
    h.set("step", o.step);
    h.set("learning_rate", o.learning_rate);
    h.set("beta1", o.beta1);
    h.set("beta2", o.beta2);
    h.set("epsilon", o.epsilon);
    w.text32(frontend::print_config(h));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(o.tensors.size()));
    for (const auto& t : o.tensors) w.tensor(t);
  }
  auto digest = sha256(w.str());
  w.bytes(kTrailerTag);
  w.bytes(std::string_view(reinterpret_cast<const char*>(digest.data()), digest.size()));
  return std::move(w.str());
}

WeightArchive decode_archive(std::string_view bytes) {
  constexpr std::size_t kTrailer = 4 + 32;
  if (bytes.size() < kArchiveMagic.size() + kTrailer) corrupt("too short");
  if (bytes.substr(0, kArchiveMagic.size()) != kArchiveMagic) corrupt("bad magic");
  std::string_view body = bytes.substr(0, bytes.size() - kTrailer);
  std::string_view trailer = bytes.substr(bytes.size() - kTrailer);
  if (trailer.substr(0, 4) != kTrailerTag) corrupt("missing trailer");
  auto digest = sha256(body);
  if (std::memcmp(digest.data(), trailer.data() + 4, 32) != 0) corrupt("checksum mismatch");

  Reader r(body);
  r.bytes(kArchiveMagic.size());
  WeightArchive a;
  ConfigTree m = parse_text(r.text32(), "archive manifest");
  a.layer_sizes = ints_of(m.find("layer_sizes"), "layer_sizes");
  if (const auto* acts = m.find("activations"); acts && acts->get_if<ConfigList>())
    for (const auto& item : acts->get_if<ConfigList>()->items) a.activations.push_back(item.as_text().value_or(""));
  a.input_dims = ints_of(m.find("input_dims"), "input_dims");
  if (const auto* v = m.find("dataset_digest")) a.dataset_digest = v->as_text().value_or("");
  if (const auto* v = m.find("epochs")) a.epochs = v->as_int().value_or(0);
  if (const auto* v = m.find("metric")) a.metric = v->as_number().value_or(0);

  auto count = r.scalar<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) a.params.push_back(r.tensor());
  auto flag = r.scalar<std::uint8_t>();
  if (flag > 1) corrupt("bad optimizer flag");
  if (flag == 1) {
    OptimizerState o;
    ConfigTree h = parse_text(r.text32(), "optimizer header");
    if (const auto* v = h.find("kind")) o.kind = v->as_text().value_or("adam");
    if (const auto* v = h.find("step")) o.step = v->as_int().value_or(0);
    if (const auto* v = h.find("learning_rate")) o.learning_rate = v->as_number().value_or(0);
    if (const auto* v = h.find("beta1")) o.beta1 = v->as_number().value_or(0);
    if (const auto* v = h.find("beta2")) o.beta2 = v->as_number().value_or(0);
    if (const auto* v = h.find("epsilon")) o.epsilon = v->as_number().value_or(0);
    auto n = r.scalar<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) o.tensors.push_back(r.tensor());
    a.optimizer = std::move(o);
  }
  if (r.pos() != body.size()) corrupt("trailing bytes before trailer");
  return a;
}

void write_archive(const std::filesystem::path& path, const WeightArchive& archive) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("MissingInput", "cannot write " + path.string());
  auto bytes = encode_archive(archive);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

WeightArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("MissingInput", "cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_archive(bytes);
}

}  // namespace mlc::support
