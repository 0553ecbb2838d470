#include "fdnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include "fdnet/error.hpp"

namespace fdnet {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(const std::string& s) { bytes.insert(bytes.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> bytes;

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ParseError("checkpoint: truncated file", pos_);
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<Parameter* const> params) {
  Writer w;
  w.raw("SPNN");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    if (p->name.size() > 0xFFFF) throw InvalidArgument("checkpoint: parameter name too long");
    if (p->shape.size() > 0xFF) throw InvalidArgument("checkpoint: rank too large");
    w.u16(static_cast<std::uint16_t>(p->name.size()));
    w.raw(p->name);
    w.u8(static_cast<std::uint8_t>(p->shape.size()));
    for (auto d : p->shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : p->value) w.f64(v);
  }
  return std::move(w.bytes);
}

std::vector<Parameter> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.raw(4) != "SPNN") throw ParseError("checkpoint: bad magic", 0);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version), 4);
  }
  const auto count = r.u32();
  std::vector<Parameter> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = r.u16();
    std::string name = r.raw(len);
    const auto rank = r.u8();
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = r.u32();
    Parameter p(std::move(name), std::move(dims));
    for (auto& v : p.value) v = r.f64();
    out.push_back(std::move(p));
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes", r.offset());
  return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<Parameter> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params) {
  const auto entries = read_checkpoint(path);
  std::map<std::string, const Parameter*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  for (Parameter* p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw ConfigError("checkpoint has no parameter '" + p->name + "'");
    if (it->second->shape != p->shape) {
      throw ConfigError("checkpoint parameter '" + p->name + "' has a different shape");
    }
    p->value = it->second->value;
  }
  if (entries.size() != params.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(entries.size()) +
                      " tensors, network expects " + std::to_string(params.size()));
  }
}

}  // namespace fdnet
