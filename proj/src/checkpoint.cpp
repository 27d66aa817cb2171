#include "hausr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hausr::nn {

namespace {

constexpr char kMagic[6] = {'H', 'A', 'U', 'S', 'R', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& buf, const std::string& path)
      : buf_(buf), path_(path) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::uint64_t u64() { return raw(8); }
  double f64() {
    std::uint64_t bits = raw(8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool exhausted() const { return pos_ == buf_.size(); }

 private:
  std::uint64_t raw(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i]))
           << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  void need(std::size_t n) {
    if (pos_ + n > buf_.size())
      throw std::runtime_error("checkpoint " + path_ + ": truncated file");
  }
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const NamedTensors& entries,
                     std::uint64_t version) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u64(out, entries.size());
  for (const auto& [name, t] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
  }
  put_u64(out, version);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: short write to " + path);
}

void save_checkpoint(const std::string& path, const ParamSet& params) {
  Snapshot snap = params.snapshot();
  save_checkpoint(path, snap.values, snap.version);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  Reader r(buf, path);
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw std::runtime_error("checkpoint " + path + ": bad magic");

  Checkpoint ck;
  const std::uint64_t count = r.u64();
  for (std::uint64_t e = 0; e < count; ++e) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 8)
      throw std::runtime_error("checkpoint " + path + ": implausible rank");
    std::vector<std::size_t> dims(rank);
    std::size_t n = 1;
    for (auto& d : dims) {
      d = static_cast<std::size_t>(r.u64());
      n *= d;
    }
    std::vector<Scalar> data(n);
    for (auto& v : data) v = r.f64();
    if (!ck.entries.emplace(name, Tensor::from(dims, std::move(data))).second)
      throw std::runtime_error("checkpoint " + path + ": duplicate entry " + name);
  }
  ck.version = r.u64();
  if (!r.exhausted())
    throw std::runtime_error("checkpoint " + path + ": trailing bytes");
  return ck;
}

}  // namespace hausr::nn
