#include "mlcforge/support/tar.hpp"

#include <array>
#include <cstring>

#include <fmt/format.h>

#include "mlcforge/core/error.hpp"

namespace mlc::support {

namespace {

constexpr std::size_t kBlock = 512;

void put(std::array<char, kBlock>& h, std::size_t offset, std::size_t width, std::string_view value) {
  std::memcpy(h.data() + offset, value.data(), std::min(width, value.size()));
}

void put_octal(std::array<char, kBlock>& h, std::size_t offset, std::size_t width, std::uint64_t value) {
  std::string digits = fmt::format("{:0{}o}", value, width - 1);
  put(h, offset, width - 1, digits);
}

std::uint64_t get_octal(const char* p, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width && p[i] != '\0' && p[i] != ' '; ++i) {
    if (p[i] < '0' || p[i] > '7') throw ModelError("CorruptArchive", "bad octal field in tar header");
    v = v * 8 + static_cast<std::uint64_t>(p[i] - '0');
  }
  return v;
}

std::string get_string(const char* p, std::size_t width) { return std::string(p, strnlen(p, width)); }

std::uint64_t checksum(const std::array<char, kBlock>& h) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i)
    sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(h[i]);
  return sum;
}

}  // namespace

std::string write_tar(const std::vector<TarEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    std::array<char, kBlock> h{};
    std::string name = e.path, prefix;
    if (name.size() > 100) {
      std::size_t split = name.rfind('/', 155);
      if (split == std::string::npos || name.size() - split - 1 > 100)
        throw ModelError("InvalidArgument", fmt::format("path too long for tar: '{}'", e.path));
      prefix = name.substr(0, split);
      name = name.substr(split + 1);
    }
    put(h, 0, 100, name);
    put_octal(h, 100, 8, 0644);
    put_octal(h, 108, 8, 0);
    put_octal(h, 116, 8, 0);
    put_octal(h, 124, 12, e.content.size());
    put_octal(h, 136, 12, 0);
    h[156] = '0';
    put(h, 257, 6, std::string_view("ustar\0", 6));
    put(h, 263, 2, "00");
    put(h, 345, 155, prefix);
    put(h, 148, 7, fmt::format("{:06o}", checksum(h)));
    h[154] = '\0';
    h[155] = ' ';
    out.append(h.data(), kBlock);
    out += e.content;
    out.append((kBlock - e.content.size() % kBlock) % kBlock, '\0');
  }
  out.append(2 * kBlock, '\0');
  return out;
}

std::vector<TarEntry> read_tar(std::string_view bytes) {
  std::vector<TarEntry> out;
  std::size_t pos = 0;
  while (pos + kBlock <= bytes.size()) {
    std::array<char, kBlock> h{};
    std::memcpy(h.data(), bytes.data() + pos, kBlock);
    bool zero = true;
    for (char c : h) zero = zero && c == '\0';
    if (zero) return out;
    if (get_octal(h.data() + 148, 8) != checksum(h)) throw ModelError("CorruptArchive", "tar header checksum mismatch");
    std::uint64_t size = get_octal(h.data() + 124, 12);
    pos += kBlock;
    if (size > bytes.size() - pos) throw ModelError("CorruptArchive", "truncated tar entry");
    std::string name = get_string(h.data(), 100);
    std::string prefix = get_string(h.data() + 345, 155);
    if (h[156] == '0' || h[156] == '\0')
      out.push_back({prefix.empty() ? name : prefix + "/" + name, std::string(bytes.substr(pos, size))});
    pos += (size + kBlock - 1) / kBlock * kBlock;
  }
  throw ModelError("CorruptArchive", "tar archive lacks its end marker");
}

}  // namespace mlc::support
