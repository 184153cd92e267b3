#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ganax/errors.hpp"

namespace ganax {

// Dense tensor, channel-major then row-major spatial: dims = {c, h, w} for
// feature maps, {out_c, in_c, k_h, k_w} for filter banks. data.size() always
// equals the product of dims.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims)
      : dims_(std::move(dims)), data_(checked_volume(dims_), T{}) {}
  Tensor(std::vector<int> dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != checked_volume(dims_))
      throw UsageError("tensor data length does not match dims");
  }

  const std::vector<int>& dims() const { return dims_; }
  int dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }
  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  T& at(int c, int y, int x) { return data_[flat3(c, y, x)]; }
  T at(int c, int y, int x) const { return data_[flat3(c, y, x)]; }

  T& at4(int f, int c, int y, int x) { return data_[flat4(f, c, y, x)]; }
  T at4(int f, int c, int y, int x) const { return data_[flat4(f, c, y, x)]; }

  bool operator==(const Tensor& o) const {
    return dims_ == o.dims_ && data_ == o.data_;
  }

 private:
  std::size_t flat3(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x;
  }
  std::size_t flat4(int f, int c, int y, int x) const {
    return ((static_cast<std::size_t>(f) * dims_[1] + c) * dims_[2] + y) *
               dims_[3] + x;
  }
  static std::size_t checked_volume(const std::vector<int>& dims) {
    if (dims.empty()) throw UsageError("tensor must have at least one dim");
    std::size_t n = 1;
    for (int d : dims) {
      if (d < 1) throw UsageError("tensor dims must be >= 1");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::vector<int> dims_;
  std::vector<T> data_;
};

using TensorQ = Tensor<std::int16_t>;
using TensorF = Tensor<float>;

// Binary dump format: magic "GTNS", u16 version, u8 elem kind (0 = q8.8
// int16, 1 = f32), u8 rank, u32 dims[rank], then the flat little-endian
// payload.
void store_tensor(const TensorQ& t, const std::string& path);
void store_tensor(const TensorF& t, const std::string& path);
TensorQ load_tensor_q(const std::string& path);
TensorF load_tensor_f(const std::string& path);

}  // namespace ganax
