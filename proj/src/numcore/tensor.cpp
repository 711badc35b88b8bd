// SPDX-License-Identifier: Apache-2.0
#include "numcore/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "common/error.hpp"

namespace gremetl::num {

std::size_t shape_size(const Shape &shape) {
  std::size_t n = 1;
  for (auto d : shape)
    n *= d;
  return n;
}

std::string shape_string(const Shape &shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {
void check_dims(const Shape &shape) {
  if (shape.empty() || shape.size() > 2)
    throw ShapeError("tensor rank must be 1 or 2, got shape " +
                     shape_string(shape));
  for (auto d : shape)
    if (d == 0)
      throw ShapeError("tensor dimensions must be positive, got " +
                       shape_string(shape));
}
} // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  values_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
  : shape_(std::move(shape)), values_(std::move(values)) {
  check_dims(shape_);
  if (shape_size(shape_) != values_.size())
    throw ShapeError("shape " + shape_string(shape_) + " needs " +
                     std::to_string(shape_size(shape_)) + " values, got " +
                     std::to_string(values_.size()));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  Shape s{values.size()};
  return Tensor(std::move(s), std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::zeros_like(const Tensor &other) {
  return Tensor(other.shape(), 0.0);
}

std::size_t Tensor::rows() const { return shape_.size() == 2 ? shape_[0] : 1; }

std::size_t Tensor::cols() const {
  return shape_.size() == 2 ? shape_[1] : shape_.at(0);
}

double Tensor::item() const {
  if (values_.size() != 1)
    throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  return values_[0];
}

void Tensor::fill(double value) {
  std::fill(values_.begin(), values_.end(), value);
}

bool operator==(const Tensor &a, const Tensor &b) {
  if (a.shape_ != b.shape_ || a.values_.size() != b.values_.size())
    return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a.values_[i]) !=
        std::bit_cast<std::uint64_t>(b.values_[i]))
      return false;
  return true;
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v))
      return false;
  return true;
}

double l2_norm(std::span<const double> values) {
  double s = 0.0;
  for (double v : values)
    s += v * v;
  return std::sqrt(s);
}

} // namespace gremetl::num
