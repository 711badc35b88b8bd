// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tensor.hpp
 * @brief  Dense row-major tensor of 64-bit floats.
 */
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gremetl::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape &shape);
std::string shape_string(const Shape &shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor zeros_like(const Tensor &other);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  /// Rows/cols of a rank-2 tensor; a rank-1 tensor is one row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double> &storage() const noexcept { return values_; }

  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double &at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }

  /// Value of a single-element tensor.
  double item() const;

  void fill(double value);

  /// Bitwise equality of shape and values.
  friend bool operator==(const Tensor &a, const Tensor &b);

 private:
  Shape shape_;
  std::vector<double> values_;
};

bool all_finite(std::span<const double> values);
inline bool all_finite(const Tensor &t) { return all_finite(t.values()); }

double l2_norm(std::span<const double> values);

} // namespace gremetl::num
