#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

namespace hausr::nn {

using Scalar = double;

/// Dense row-major tensor. Value type: copies are deep and cheap enough at
/// the scales this project runs at, which is what makes snapshots and
/// cross-thread handoff trivially safe.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  static Tensor from(std::vector<std::size_t> shape, std::vector<Scalar> data);
  static Tensor scalar(Scalar v) { return from({1}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar& operator[](std::size_t i) { return data_[i]; }
  Scalar operator[](std::size_t i) const { return data_[i]; }

  void fill(Scalar v);
  void zero() { fill(0.0); }
  bool all_finite() const;

  void add(const Tensor& o);                    // this += o
  void add_scaled(const Tensor& o, Scalar a);   // this += a * o
  void scale(Scalar a);
  Scalar dot(const Tensor& o) const;
  Scalar squared_norm() const { return dot(*this); }

  Tensor reshaped(std::vector<std::size_t> shape) const;

  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<Scalar> data_;
};

/// Name -> tensor map with deterministic (sorted) iteration order.
using NamedTensors = std::map<std::string, Tensor>;

/// a ++ b as flat vectors.
Tensor concat(const Tensor& a, const Tensor& b);

Tensor one_hot(std::size_t index, std::size_t n);

}  // namespace hausr::nn
