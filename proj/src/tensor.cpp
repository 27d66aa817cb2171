#include "hausr/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hausr::nn {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<Scalar> data) {
  if (shape_product(shape) != data.size())
    throw std::invalid_argument("Tensor::from: data length does not match shape");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

void Tensor::fill(Scalar v) {
  for (Scalar& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (Scalar x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::add(const Tensor& o) {
  if (!same_shape(o))
    throw std::invalid_argument("Tensor::add: shape mismatch " + shape_string() +
                                " vs " + o.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

void Tensor::add_scaled(const Tensor& o, Scalar a) {
  if (!same_shape(o))
    throw std::invalid_argument("Tensor::add_scaled: shape mismatch " +
                                shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * o.data_[i];
}

void Tensor::scale(Scalar a) {
  for (Scalar& x : data_) x *= a;
}

Scalar Tensor::dot(const Tensor& o) const {
  if (size() != o.size())
    throw std::invalid_argument("Tensor::dot: size mismatch");
  Scalar s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * o.data_[i];
  return s;
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (shape_product(shape) != size())
    throw std::invalid_argument("Tensor::reshaped: element count mismatch");
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape_.size(); ++i)
    os << (i ? "," : "") << shape_[i];
  os << ")";
  return os.str();
}

Tensor concat(const Tensor& a, const Tensor& b) {
  Tensor out({a.size() + b.size()});
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[a.size() + i] = b[i];
  return out;
}

Tensor one_hot(std::size_t index, std::size_t n) {
  if (index >= n) throw std::invalid_argument("one_hot: index out of range");
  Tensor t({n});
  t[index] = 1.0;
  return t;
}

}  // namespace hausr::nn
