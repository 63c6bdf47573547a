#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "hse/rng.hpp"
#include "hse/tensor.hpp"

namespace hse {

enum class Mode { Train, Eval };

// Square convolution with zero "same" padding and stride 1. The kernel is
// stored (out_c, in_c, k, k) so that a kernel row is one im2col filter.
template <typename T>
struct ConvLayer {
  Tensor4<T> kernel;
  std::vector<T> bias;

  static ConvLayer zeros(int out_c, int in_c, int k);

  int out_channels() const { return kernel.n(); }
  int in_channels() const { return kernel.c(); }
  int kernel_size() const { return kernel.h(); }
  std::size_t param_count() const { return kernel.size() + bias.size(); }

  template <typename U>
  ConvLayer<U> cast() const {
    ConvLayer<U> out{kernel.template cast<U>(), std::vector<U>(bias.begin(), bias.end())};
    return out;
  }

  bool operator==(const ConvLayer&) const = default;
};

template <typename T>
struct ConvGrads {
  Tensor4<T> input;  // empty when not requested
  Tensor4<T> kernel;
  std::vector<T> bias;
};

// Output (n, out_c, h, w). ReLU is not applied here.
template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& input, const ConvLayer<T>& layer);

// Gradients of conv2d_forward. Per-sample kernel/bias contributions are
// summed in batch order, so the result does not depend on the thread count.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& input, const ConvLayer<T>& layer,
                             const Tensor4<T>& grad_out, bool need_input_grad = true);

enum class PoolKind { Max, Avg };

struct PoolAux {
  PoolKind kind = PoolKind::Max;
  Shape4 input_shape;
  // Flat input index of each window's maximum (first in scan order on ties).
  std::vector<std::uint32_t> argmax;
};

template <typename T>
struct PoolResult {
  Tensor4<T> output;
  PoolAux aux;
};

// Non-overlapping 2x2 pooling; spatial dims must be even.
template <typename T>
PoolResult<T> pool2_forward(const Tensor4<T>& input, PoolKind kind);

template <typename T>
Tensor4<T> pool2_backward(const PoolAux& aux, const Tensor4<T>& grad_out);

// Channels of a first, then b.
template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b);

// Inverse of concat_channels: (first a_channels channels, the rest).
template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> split_channels(const Tensor4<T>& t, int a_channels);

template <typename T>
Tensor4<T> relu(const Tensor4<T>& input);

// Uses the forward output: d relu = 1 where output > 0.
template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& output, const Tensor4<T>& grad_out);

struct DropoutLayer {
  double rate = 0.5;
  Mode mode = Mode::Eval;
};

template <typename T>
struct DropoutResult {
  Tensor4<T> output;
  // Per-element multiplier applied in train mode (0 or 1/(1-rate)); empty
  // in eval mode.
  std::vector<T> scale;
};

// Inverted dropout. Eval mode returns the input unchanged.
template <typename T>
DropoutResult<T> dropout(const Tensor4<T>& input, const DropoutLayer& layer, Rng& rng);

template <typename T>
Tensor4<T> dropout_backward(const std::vector<T>& scale, const Tensor4<T>& grad_out);

inline constexpr std::uint8_t kIgnore = 255;

// Per-pixel class codes {0, 1, kIgnore} laid out (n, h, w).
struct LabelGrid {
  int n = 0;
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> codes;

  LabelGrid() = default;
  LabelGrid(int n_, int h_, int w_, std::uint8_t fill = 0)
      : n(n_), h(h_), w(w_), codes(static_cast<std::size_t>(n_) * h_ * w_, fill) {}
  std::uint8_t& at(int b, int y, int x) {
    return codes[(static_cast<std::size_t>(b) * h + y) * w + x];
  }
  std::uint8_t at(int b, int y, int x) const {
    return codes[(static_cast<std::size_t>(b) * h + y) * w + x];
  }
};

struct ClassWeights {
  double non_hse = 1.0;
  double hse = 1.0;
};

struct LossResult {
  double loss = 0.0;       // weighted mean over counted pixels
  double weight_sum = 0.0;  // sum of class weights of counted pixels
  std::size_t counted = 0;  // non-ignored pixels
  Tensor grad;              // d loss / d logits
};

// Two-class softmax cross-entropy averaged over non-ignored pixels. Throws
// UndefinedValue when every pixel is ignored.
LossResult softmax2_xent(const Tensor& logits, const LabelGrid& labels, ClassWeights weights = {});

// Probability of class 1 per pixel, shape (n, 1, h, w).
template <typename T>
Tensor4<T> hse_probability(const Tensor4<T>& logits);

double he_stddev(int fan_in);

// Zero-mean Gaussian kernel with std sqrt(2 / (in_c * k * k)).
Tensor he_init(Shape4 kernel_shape, Rng& rng);

}  // namespace hse
