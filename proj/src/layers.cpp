#include "hse/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>


#include "hse/error.hpp"
#include "hse/parallel.hpp"

namespace hse {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major C (m x n) = op(A) * op(B), where op(A) is m x k and op(B) is k x n.
template <typename T>
void gemm(bool trans_a, bool trans_b, Eigen::Index m, Eigen::Index n, Eigen::Index k, const T* a, const T* b, T* c) {
  Eigen::Map<RowMat<T>> dst(c, m, n);
  if (trans_a) {
    Eigen::Map<const RowMat<T>> am(a, k, m);
    if (trans_b) {
      dst.noalias() = am.transpose() * Eigen::Map<const RowMat<T>>(b, n, k).transpose();
    } else {
      dst.noalias() = am.transpose() * Eigen::Map<const RowMat<T>>(b, k, n);
    }
  } else {
    Eigen::Map<const RowMat<T>> am(a, m, k);
    if (trans_b) {
      dst.noalias() = am * Eigen::Map<const RowMat<T>>(b, n, k).transpose();
    } else {
      dst.noalias() = am * Eigen::Map<const RowMat<T>>(b, k, n);
    }
  }
}

// Unfold one sample (c, h, w) into a (c*k*k, h*w) matrix of zero-padded
// windows.
template <typename T>
void im2col(const T* src, int channels, int h, int w, int k, T* col) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    const T* plane = src + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      const int dy = ky - pad;
      for (int kx = 0; kx < k; ++kx) {
        const int dx = kx - pad;
        T* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          T* out = row + static_cast<std::size_t>(y) * w;
          const int sy = y + dy;
          if (sy < 0 || sy >= h || x_lo >= x_hi) {
            std::fill(out, out + w, T{});
            continue;
          }
          const T* in = plane + static_cast<std::size_t>(sy) * w;
          std::fill(out, out + x_lo, T{});
          std::copy(in + x_lo + dx, in + x_hi + dx, out + x_lo);
          std::fill(out + x_hi, out + w, T{});
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back into a (c, h, w) sample.
template <typename T>
void col2im(const T* col, int channels, int h, int w, int k, T* dst) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::fill(dst, dst + channels * hw, T{});
  for (int c = 0; c < channels; ++c) {
    T* plane = dst + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      const int dy = ky - pad;
      for (int kx = 0; kx < k; ++kx) {
        const int dx = kx - pad;
        const T* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const T* in = row + static_cast<std::size_t>(y) * w;
          T* out = plane + static_cast<std::size_t>(sy) * w;
          for (int x = x_lo; x < x_hi; ++x) out[x + dx] += in[x];
        }
      }
    }
  }
}

template <typename T>
void check_conv_shapes(const Tensor4<T>& input, const ConvLayer<T>& layer) {
  const int k = layer.kernel_size();
  if (k % 2 == 0 || layer.kernel.w() != k) {
    throw ContractError("convolution kernel must be square with odd size");
  }
  if (layer.bias.size() != static_cast<std::size_t>(layer.out_channels())) {
    throw ContractError("bias length does not match output channels");
  }
  if (input.c() != layer.in_channels()) {
    throw ContractError("conv input has " + std::to_string(input.c()) + " channels, layer expects " +
                        std::to_string(layer.in_channels()));
  }
  if (input.h() == 0 || input.w() == 0) {
    throw InvalidInput("conv input has zero-sized spatial dims " + input.shape().str());
  }
}

}  // namespace

template <typename T>
ConvLayer<T> ConvLayer<T>::zeros(int out_c, int in_c, int k) {
  return ConvLayer<T>{Tensor4<T>(out_c, in_c, k, k), std::vector<T>(static_cast<std::size_t>(out_c))};
}

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& input, const ConvLayer<T>& layer) {
  check_conv_shapes(input, layer);
  const int k = layer.kernel_size();
  const int in_c = layer.in_channels();
  const int out_c = layer.out_channels();
  const int h = input.h();
  const int w = input.w();
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  const Eigen::Index rows = static_cast<Eigen::Index>(in_c) * k * k;

  Tensor4<T> out(input.n(), out_c, h, w);
  const T* kern = layer.kernel.data().data();
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(layer.bias.data(), out_c);

  parallel_for(static_cast<std::size_t>(input.n()), [&](std::size_t b) {
    T* dst = out.sample(static_cast<int>(b)).data();
    if (k == 1) {
      gemm<T>(false, false, out_c, hw, rows, kern, input.sample(static_cast<int>(b)).data(), dst);
    } else {
      std::vector<T> col(static_cast<std::size_t>(rows * hw));
      im2col(input.sample(static_cast<int>(b)).data(), in_c, h, w, k, col.data());
      gemm<T>(false, false, out_c, hw, rows, kern, col.data(), dst);
    }
    Eigen::Map<RowMat<T>>(dst, out_c, hw).colwise() += bias;
  });
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& input, const ConvLayer<T>& layer,
                             const Tensor4<T>& grad_out, bool need_input_grad) {
  check_conv_shapes(input, layer);
  const int k = layer.kernel_size();
  const int in_c = layer.in_channels();
  const int out_c = layer.out_channels();
  const int n = input.n();
  const int h = input.h();
  const int w = input.w();
  if (grad_out.shape() != Shape4{n, out_c, h, w}) {
    throw ContractError("conv grad_out shape " + grad_out.shape().str() + " does not match forward output " +
                        Shape4{n, out_c, h, w}.str());
  }
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  const Eigen::Index rows = static_cast<Eigen::Index>(in_c) * k * k;
  const T* kern = layer.kernel.data().data();

  ConvGrads<T> grads;
  if (need_input_grad) grads.input = Tensor4<T>(input.shape());

  std::vector<RowMat<T>> kernel_parts(static_cast<std::size_t>(n));
  std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> bias_parts(static_cast<std::size_t>(n));

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t b) {
    const int bi = static_cast<int>(b);
    const T* g = grad_out.sample(bi).data();
    // Plain loop: Eigen's vectorized reduction order depends on pointer alignment.
    bias_parts[b].resize(out_c);
    for (int o = 0; o < out_c; ++o) {
      const T* row = g + static_cast<std::size_t>(o) * hw;
      T s{};
      for (Eigen::Index i = 0; i < hw; ++i) s += row[i];
      bias_parts[b][o] = s;
    }
    kernel_parts[b].resize(out_c, rows);
    if (k == 1) {
      gemm<T>(false, true, out_c, rows, hw, g, input.sample(bi).data(), kernel_parts[b].data());
      if (need_input_grad) gemm<T>(true, false, rows, hw, out_c, kern, g, grads.input.sample(bi).data());
    } else {
      std::vector<T> col(static_cast<std::size_t>(rows * hw));
      im2col(input.sample(bi).data(), in_c, h, w, k, col.data());
      gemm<T>(false, true, out_c, rows, hw, g, col.data(), kernel_parts[b].data());
      if (need_input_grad) {
        gemm<T>(true, false, rows, hw, out_c, kern, g, col.data());
        col2im(col.data(), in_c, h, w, k, grads.input.sample(bi).data());
      }
    }
  });

  grads.kernel = Tensor4<T>(layer.kernel.shape());
  grads.bias.assign(static_cast<std::size_t>(out_c), T{});
  Eigen::Map<RowMat<T>> gk(grads.kernel.data().data(), out_c, rows);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(grads.bias.data(), out_c);
  for (int b = 0; b < n; ++b) {
    gk += kernel_parts[static_cast<std::size_t>(b)];
    gb += bias_parts[static_cast<std::size_t>(b)];
  }
  return grads;
}

template <typename T>
PoolResult<T> pool2_forward(const Tensor4<T>& input, PoolKind kind) {
  const Shape4 s = input.shape();
  if (s.h == 0 || s.w == 0 || s.h % 2 != 0 || s.w % 2 != 0) {
    throw InvalidInput("2x2 pooling needs even, non-zero spatial dims, got " + s.str());
  }
  PoolResult<T> result{Tensor4<T>(s.n, s.c, s.h / 2, s.w / 2), PoolAux{kind, s, {}}};
  if (kind == PoolKind::Max) result.aux.argmax.resize(result.output.size());
  const int oh = s.h / 2;
  const int ow = s.w / 2;
  const auto in = input.data();
  auto out = result.output.data();
  std::size_t o = 0;
  for (int b = 0; b < s.n; ++b) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(b) * s.c + c) * s.plane();
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          const std::size_t i00 = base + static_cast<std::size_t>(2 * y) * s.w + 2 * x;
          const std::size_t idx[4] = {i00, i00 + 1, i00 + s.w, i00 + s.w + 1};
          if (kind == PoolKind::Avg) {
            out[o] = (in[idx[0]] + in[idx[1]] + in[idx[2]] + in[idx[3]]) / T{4};
          } else {
            std::size_t best = idx[0];
            for (int j = 1; j < 4; ++j) {
              if (in[idx[j]] > in[best]) best = idx[j];
            }
            out[o] = in[best];
            result.aux.argmax[o] = static_cast<std::uint32_t>(best);
          }
        }
      }
    }
  }
  return result;
}

template <typename T>
Tensor4<T> pool2_backward(const PoolAux& aux, const Tensor4<T>& grad_out) {
  const Shape4 s = aux.input_shape;
  if (grad_out.shape() != Shape4{s.n, s.c, s.h / 2, s.w / 2}) {
    throw ContractError("pool grad_out shape " + grad_out.shape().str() + " does not match input " + s.str());
  }
  if (aux.kind == PoolKind::Max && aux.argmax.size() != grad_out.size()) {
    throw ContractError("max-pool aux does not match grad_out");
  }
  Tensor4<T> grad(s);
  auto gi = grad.data();
  const auto go = grad_out.data();
  if (aux.kind == PoolKind::Max) {
    for (std::size_t o = 0; o < go.size(); ++o) gi[aux.argmax[o]] += go[o];
    return grad;
  }
  const int oh = s.h / 2;
  const int ow = s.w / 2;
  std::size_t o = 0;
  for (int b = 0; b < s.n; ++b) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(b) * s.c + c) * s.plane();
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          const std::size_t i00 = base + static_cast<std::size_t>(2 * y) * s.w + 2 * x;
          const T g = go[o] / T{4};
          gi[i00] = g;
          gi[i00 + 1] = g;
          gi[i00 + s.w] = g;
          gi[i00 + s.w + 1] = g;
        }
      }
    }
  }
  return grad;
}

template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ContractError("concat_channels shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  Tensor4<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
  for (int i = 0; i < a.n(); ++i) {
    auto dst = out.sample(i);
    auto sa = a.sample(i);
    auto sb = b.sample(i);
    std::copy(sa.begin(), sa.end(), dst.begin());
    std::copy(sb.begin(), sb.end(), dst.begin() + static_cast<std::ptrdiff_t>(sa.size()));
  }
  return out;
}

template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> split_channels(const Tensor4<T>& t, int a_channels) {
  if (a_channels < 0 || a_channels > t.c()) {
    throw ContractError("split_channels: bad channel split " + std::to_string(a_channels));
  }
  Tensor4<T> a(t.n(), a_channels, t.h(), t.w());
  Tensor4<T> b(t.n(), t.c() - a_channels, t.h(), t.w());
  for (int i = 0; i < t.n(); ++i) {
    auto src = t.sample(i);
    auto da = a.sample(i);
    auto db = b.sample(i);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(da.size()), da.begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(da.size()), src.end(), db.begin());
  }
  return {std::move(a), std::move(b)};
}

template <typename T>
Tensor4<T> relu(const Tensor4<T>& input) {
  Tensor4<T> out(input.shape());
  const auto in = input.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = in[i] > T{0} ? in[i] : T{0};
  return out;
}

template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& output, const Tensor4<T>& grad_out) {
  if (output.shape() != grad_out.shape()) throw ContractError("relu_backward shape mismatch");
  Tensor4<T> grad(output.shape());
  const auto y = output.data();
  const auto g = grad_out.data();
  auto dst = grad.data();
  for (std::size_t i = 0; i < y.size(); ++i) dst[i] = y[i] > T{0} ? g[i] : T{0};
  return grad;
}

template <typename T>
DropoutResult<T> dropout(const Tensor4<T>& input, const DropoutLayer& layer, Rng& rng) {
  if (!(layer.rate >= 0.0 && layer.rate < 1.0)) {
    throw InvalidConfig("dropout rate must lie in [0, 1), got " + std::to_string(layer.rate));
  }
  if (layer.mode == Mode::Eval) return {input, {}};
  DropoutResult<T> result{Tensor4<T>(input.shape()), std::vector<T>(input.size())};
  const T keep_scale = static_cast<T>(1.0 / (1.0 - layer.rate));
  const auto in = input.data();
  auto out = result.output.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const T s = rng.uniform() < layer.rate ? T{0} : keep_scale;
    result.scale[i] = s;
    out[i] = in[i] * s;
  }
  return result;
}

template <typename T>
Tensor4<T> dropout_backward(const std::vector<T>& scale, const Tensor4<T>& grad_out) {
  if (scale.empty()) return grad_out;
  if (scale.size() != grad_out.size()) throw ContractError("dropout mask does not match grad_out");
  Tensor4<T> grad(grad_out.shape());
  const auto g = grad_out.data();
  auto dst = grad.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] = g[i] * scale[i];
  return grad;
}

LossResult softmax2_xent(const Tensor& logits, const LabelGrid& labels, ClassWeights weights) {
  if (logits.c() != 2) throw ContractError("softmax2_xent expects 2 logit channels, got " + logits.shape().str());
  if (labels.n != logits.n() || labels.h != logits.h() || labels.w != logits.w() ||
      labels.codes.size() != static_cast<std::size_t>(labels.n) * labels.h * labels.w) {
    throw ContractError("label grid does not match logits " + logits.shape().str());
  }
  LossResult result;
  result.grad = Tensor(logits.shape());
  const std::size_t plane = logits.shape().plane();
  double loss_sum = 0.0;
  for (int b = 0; b < logits.n(); ++b) {
    const auto l0 = logits.plane(b, 0);
    const auto l1 = logits.plane(b, 1);
    auto g0 = result.grad.plane(b, 0);
    auto g1 = result.grad.plane(b, 1);
    for (std::size_t i = 0; i < plane; ++i) {
      const std::uint8_t code = labels.codes[b * plane + i];
      if (code == kIgnore) continue;
      if (code > 1) throw ContractError("label code " + std::to_string(code) + " is not 0, 1 or ignore");
      const double hi = std::max(l0[i], l1[i]);
      const double lse = hi + std::log(std::exp(l0[i] - hi) + std::exp(l1[i] - hi));
      const double p1 = std::exp(l1[i] - lse);
      const double p0 = std::exp(l0[i] - lse);
      const double wt = code == 1 ? weights.hse : weights.non_hse;
      loss_sum += wt * (lse - (code == 1 ? l1[i] : l0[i]));
      result.weight_sum += wt;
      ++result.counted;
      g0[i] = wt * (p0 - (code == 0 ? 1.0 : 0.0));
      g1[i] = wt * (p1 - (code == 1 ? 1.0 : 0.0));
    }
  }
  if (result.counted == 0 || result.weight_sum <= 0.0) {
    throw UndefinedValue("softmax2_xent: every pixel is ignored");
  }
  result.loss = loss_sum / result.weight_sum;
  const double inv = 1.0 / result.weight_sum;
  for (double& g : result.grad.data()) g *= inv;
  return result;
}

template <typename T>
Tensor4<T> hse_probability(const Tensor4<T>& logits) {
  if (logits.c() != 2) throw ContractError("hse_probability expects 2 logit channels");
  Tensor4<T> prob(logits.n(), 1, logits.h(), logits.w());
  for (int b = 0; b < logits.n(); ++b) {
    const auto l0 = logits.plane(b, 0);
    const auto l1 = logits.plane(b, 1);
    auto p = prob.plane(b, 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = T{1} / (T{1} + std::exp(l0[i] - l1[i]));
    }
  }
  return prob;
}

double he_stddev(int fan_in) {
  if (fan_in <= 0) throw InvalidInput("he_init needs a positive fan-in");
  return std::sqrt(2.0 / fan_in);
}

Tensor he_init(Shape4 kernel_shape, Rng& rng) {
  const double stddev = he_stddev(kernel_shape.c * kernel_shape.h * kernel_shape.w);
  Tensor kernel(kernel_shape);
  for (double& v : kernel.data()) v = rng.normal(0.0, stddev);
  return kernel;
}

#define HSE_INSTANTIATE_LAYERS(T)                                                                   \
  template struct ConvLayer<T>;                                                                     \
  template Tensor4<T> conv2d_forward(const Tensor4<T>&, const ConvLayer<T>&);                       \
  template ConvGrads<T> conv2d_backward(const Tensor4<T>&, const ConvLayer<T>&, const Tensor4<T>&, \
                                        bool);                                                      \
  template PoolResult<T> pool2_forward(const Tensor4<T>&, PoolKind);                                \
  template Tensor4<T> pool2_backward(const PoolAux&, const Tensor4<T>&);                            \
  template Tensor4<T> concat_channels(const Tensor4<T>&, const Tensor4<T>&);                        \
  template std::pair<Tensor4<T>, Tensor4<T>> split_channels(const Tensor4<T>&, int);                \
  template Tensor4<T> relu(const Tensor4<T>&);                                                      \
  template Tensor4<T> relu_backward(const Tensor4<T>&, const Tensor4<T>&);                          \
  template DropoutResult<T> dropout(const Tensor4<T>&, const DropoutLayer&, Rng&);                  \
  template Tensor4<T> dropout_backward(const std::vector<T>&, const Tensor4<T>&);                   \
  template Tensor4<T> hse_probability(const Tensor4<T>&);

HSE_INSTANTIATE_LAYERS(double)
HSE_INSTANTIATE_LAYERS(float)

}  // namespace hse
