#ifndef AENR_WEIGHT_STORE_H_
#define AENR_WEIGHT_STORE_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace aenr {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  static std::size_t NumElements(const std::vector<int>& shape);
};

// Named parameter tensors keyed by layer path ("ne/conv1/pointwise/weight").
//
// File layout, all integers little-endian:
//   "AULC"                      4 bytes magic
//   version                     u16 (currently 1)
//   tensor count                u32
//   per tensor, in path order:
//     path length               u16
//     path                      UTF-8 bytes
//     rank                      u8
//     dims                      u32 x rank
//     values                    IEEE-754 binary32 x prod(dims), row-major
//
// Values are held as double in memory and rounded to binary32 on save.
class WeightStore {
 public:
  static constexpr std::uint16_t kFormatVersion = 1;

  void Set(const std::string& path, Tensor tensor);
  bool Contains(const std::string& path) const;
  // Throws ConfigError naming the missing path.
  const Tensor& Get(const std::string& path) const;
  Tensor& GetMutable(const std::string& path);
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  std::size_t TotalParameters() const;

  std::vector<std::uint8_t> Serialize() const;
  static WeightStore Deserialize(std::span<const std::uint8_t> bytes);
  void Save(const std::string& path) const;
  static WeightStore Load(const std::string& path);

  // FNV-1a over the serialized bytes.
  std::uint64_t Checksum() const;

 private:
  std::map<std::string, Tensor> tensors_;
};

}  // namespace aenr

#endif  // AENR_WEIGHT_STORE_H_
