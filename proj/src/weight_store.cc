#include "aenr/weight_store.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "aenr/errors.h"

namespace aenr {

namespace {

template <typename T>
void PutLe(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T Le() {
    Need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string Str(std::size_t n) {
    Need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("weight file truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t Tensor::NumElements(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void WeightStore::Set(const std::string& path, Tensor tensor) {
  if (path.empty() || path.size() > 0xffff) throw ConfigError("invalid tensor path");
  if (tensor.shape.size() > 0xff) throw ConfigError("tensor rank too large: " + path);
  if (Tensor::NumElements(tensor.shape) != tensor.values.size())
    throw ConfigError("tensor values do not match shape: " + path);
  tensors_[path] = std::move(tensor);
}

bool WeightStore::Contains(const std::string& path) const {
  return tensors_.count(path) != 0;
}

const Tensor& WeightStore::Get(const std::string& path) const {
  auto it = tensors_.find(path);
  if (it == tensors_.end()) throw ConfigError("missing weight tensor '" + path + "'");
  return it->second;
}

Tensor& WeightStore::GetMutable(const std::string& path) {
  auto it = tensors_.find(path);
  if (it == tensors_.end()) throw ConfigError("missing weight tensor '" + path + "'");
  return it->second;
}

std::size_t WeightStore::TotalParameters() const {
  std::size_t n = 0;
  for (const auto& [path, t] : tensors_) n += t.values.size();
  return n;
}

std::vector<std::uint8_t> WeightStore::Serialize() const {
  std::vector<std::uint8_t> out = {'A', 'U', 'L', 'C'};
  PutLe<std::uint16_t>(out, kFormatVersion);
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& [path, t] : tensors_) {
    PutLe<std::uint16_t>(out, static_cast<std::uint16_t>(path.size()));
    out.insert(out.end(), path.begin(), path.end());
    PutLe<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t.values)
      PutLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

WeightStore WeightStore::Deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.Str(4) != "AULC") throw FormatError("not a weight file (bad magic)");
  const auto version = r.Le<std::uint16_t>();
  if (version != kFormatVersion)
    throw FormatError("unsupported weight file version " + std::to_string(version));
  const auto count = r.Le<std::uint32_t>();
  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto path = r.Str(r.Le<std::uint16_t>());
    Tensor t;
    const auto rank = r.Le<std::uint8_t>();
    for (int d = 0; d < rank; ++d) t.shape.push_back(static_cast<int>(r.Le<std::uint32_t>()));
    t.values.resize(Tensor::NumElements(t.shape));
    for (double& v : t.values) v = std::bit_cast<float>(r.Le<std::uint32_t>());
    if (store.Contains(path)) throw FormatError("duplicate tensor '" + path + "'");
    store.Set(path, std::move(t));
  }
  if (!r.AtEnd()) throw FormatError("trailing bytes after last tensor");
  return store;
}

void WeightStore::Save(const std::string& path) const {
  const auto bytes = Serialize();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

WeightStore WeightStore::Load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open weight file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return Deserialize(bytes);
}

std::uint64_t WeightStore::Checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint8_t b : Serialize()) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace aenr
