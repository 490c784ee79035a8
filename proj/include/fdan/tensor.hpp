#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fdan/errors.hpp"

namespace fdan {

// Dense NCHW shape. All feature maps in the library are rank 4; vectors such
// as conv biases are stored as (1, C, 1, 1).
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t elems() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;
};

inline std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," +
         std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

// Row-major NCHW tensor over a contiguous buffer. Copy is a deep copy.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(Shape s) : shape_(s) {
    validate_shape(s);
    data_.assign(static_cast<std::size_t>(s.elems()), T(0));
  }

  TensorT(Shape s, std::vector<T> data) : shape_(s), data_(std::move(data)) {
    validate_shape(s);
    if (static_cast<std::int64_t>(data_.size()) != s.elems())
      throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                       " does not match shape " + fdan::to_string(s));
  }

  static TensorT full(Shape s, T v) {
    TensorT t(s);
    for (auto& x : t.data_) x = v;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return shape_.elems(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const {
    return data_[static_cast<std::size_t>(i)];
  }

  std::int64_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::int64_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w + w;
  }
  T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const {
    return data_[index(n, c, h, w)];
  }

  template <typename U>
  TensorT<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i)
      out[i] = static_cast<U>(data_[i]);
    return TensorT<U>(shape_, std::move(out));
  }

 private:
  static void validate_shape(const Shape& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
      throw ShapeError("tensor: negative dimension in " + fdan::to_string(s));
  }

  Shape shape_{};
  std::vector<T> data_;
};

using Tensor = TensorT<float>;

}  // namespace fdan
