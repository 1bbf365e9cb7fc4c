#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specnet/errors.hpp"

namespace specnet {

// Ordered list of positive extents. Image-rank shapes are (height, width,
// channels).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> extents);
  explicit Shape(std::vector<std::size_t> extents);

  std::size_t rank() const noexcept { return extents_.size(); }
  std::size_t operator[](std::size_t axis) const { return extents_.at(axis); }
  const std::vector<std::size_t>& extents() const noexcept { return extents_; }
  bool empty() const noexcept { return extents_.empty(); }

  // Product of extents; 0 for the default (empty) shape.
  std::size_t element_count() const noexcept;

  std::string to_string() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> extents_;
};

// Dense row-major array. The element type fixes the precision; float is the
// training default and double is used for gradient checks.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.rank(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Image-rank accessor (row, col, channel).
  T& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }
  const T& at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }
  // Matrix accessor (row, col).
  T& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  void fill(T value);

  // Same elements under a new shape with equal element count.
  Tensor reshape(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  std::vector<To> out(t.data().begin(), t.data().end());
  return Tensor<To>(t.shape(), std::move(out));
}

// y = W x for rank-2 W and rank-1 x.
template <typename T>
Tensor<T> matvec(const Tensor<T>& w, const Tensor<T>& x);

template <typename T>
Tensor<T> elementwise(const std::function<T(T)>& op, const Tensor<T>& a);

template <typename T>
Tensor<T> elementwise(const std::function<T(T, T)>& op, const Tensor<T>& a,
                      const Tensor<T>& b);

// Per-axis (before, after) padding counts.
struct AxisPad {
  std::size_t before = 0;
  std::size_t after = 0;
};

// Grows every axis by its pad counts, writing `fill` into the new border.
// `pads` may be shorter than the rank; missing axes are unpadded.
template <typename T>
Tensor<T> pad(const Tensor<T>& t, std::span<const AxisPad> pads, T fill = T{0});

// Pads the two spatial axes of an (H, W, C) tensor up to at least
// (height, width), centering the content with any odd leftover pixel on the
// bottom/right. Extents already at or above the target are left alone.
template <typename T>
Tensor<T> pad_spatial(const Tensor<T>& t, std::size_t height, std::size_t width,
                      T fill = T{0});

// Sub-block starting at `offset` with the given extents.
template <typename T>
Tensor<T> slice(const Tensor<T>& t, std::span<const std::size_t> offset,
                const Shape& extents);

}  // namespace specnet
