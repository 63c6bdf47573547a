#include "hse/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "hse/error.hpp"

namespace hse {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

template <typename T>
Tensor4<T>::Tensor4(Shape4 shape, T fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw InvalidInput("negative tensor dimension " + shape.str());
  }
  data_.assign(shape.size(), fill);
}

template <typename T>
void Tensor4<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool Tensor4<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template class Tensor4<double>;
template class Tensor4<float>;

}  // namespace hse
