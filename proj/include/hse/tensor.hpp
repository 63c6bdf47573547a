#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hse {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  std::size_t sample() const { return static_cast<std::size_t>(c) * plane(); }

  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

// Dense (batch, channel, row, col) array stored row-major.
template <typename T>
class Tensor4 {
 public:
  using value_type = T;

  Tensor4() = default;
  explicit Tensor4(Shape4 shape, T fill = T{});
  Tensor4(int n, int c, int h, int w, T fill = T{}) : Tensor4(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  T& operator()(int b, int ch, int y, int x) { return data_[index(b, ch, y, x)]; }
  const T& operator()(int b, int ch, int y, int x) const { return data_[index(b, ch, y, x)]; }

  std::span<T> sample(int b) { return {data_.data() + b * shape_.sample(), shape_.sample()}; }
  std::span<const T> sample(int b) const {
    return {data_.data() + b * shape_.sample(), shape_.sample()};
  }
  std::span<T> plane(int b, int ch) {
    return {data_.data() + b * shape_.sample() + ch * shape_.plane(), shape_.plane()};
  }
  std::span<const T> plane(int b, int ch) const {
    return {data_.data() + b * shape_.sample() + ch * shape_.plane(), shape_.plane()};
  }

  void fill(T value);
  bool all_finite() const;

  template <typename U>
  Tensor4<U> cast() const {
    Tensor4<U> out(shape_);
    auto dst = out.data();
    for (std::size_t i = 0; i < data_.size(); ++i) dst[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor4&) const = default;

 private:
  std::size_t index(int b, int ch, int y, int x) const {
    return ((static_cast<std::size_t>(b) * shape_.c + ch) * shape_.h + y) * shape_.w + x;
  }

  Shape4 shape_{};
  std::vector<T> data_;
};

using Tensor = Tensor4<double>;
using TensorF = Tensor4<float>;

extern template class Tensor4<double>;
extern template class Tensor4<float>;

}  // namespace hse
