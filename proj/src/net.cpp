#include "hse/net.hpp"

#include <string>

#include "hse/error.hpp"

namespace hse {

void ArchSpec::validate() const {
  if (f < 1) throw InvalidConfig("first-layer width f must be >= 1, got " + std::to_string(f));
  if (depth < 1) throw InvalidConfig("depth must be >= 1, got " + std::to_string(depth));
  if (in_channels < 1) throw InvalidConfig("in_channels must be >= 1");
}

std::int64_t param_count(const ArchSpec& spec) {
  spec.validate();
  const std::int64_t f = spec.f;
  const std::int64_t d1 = spec.depth - 1;
  const std::int64_t c = spec.in_channels;
  auto conv = [](std::int64_t in, std::int64_t out, std::int64_t k) { return k * k * in * out + out; };
  return conv(c, f, 3) + d1 * conv(f, f, 3) +                  //
         conv(f, 2 * f, 3) + d1 * conv(2 * f, 2 * f, 3) +      //
         conv(4 * f, 8 * f, 3) + d1 * conv(8 * f, 8 * f, 3) +  //
         conv(8 * f, 16 * f, 3) + d1 * conv(16 * f, 16 * f, 3) + conv(16 * f, 2, 1);
}

int receptive_radius(const ArchSpec& spec) {
  // 2d full-resolution 3x3 convs, then 2d half-resolution ones.
  return 2 * spec.depth + 2 * (2 * spec.depth);
}

template <typename T>
std::size_t Network<T>::conv_count() const {
  std::size_t count = 0;
  for (const auto& s : stages) count += std::holds_alternative<ConvStage<T>>(s) ? 1 : 0;
  return count;
}

template <typename T>
std::int64_t Network<T>::param_count() const {
  std::int64_t total = 0;
  for (const auto* c : conv_layers()) total += static_cast<std::int64_t>(c->param_count());
  return total;
}

template <typename T>
std::vector<const ConvLayer<T>*> Network<T>::conv_layers() const {
  std::vector<const ConvLayer<T>*> out;
  for (const auto& s : stages) {
    if (const auto* c = std::get_if<ConvStage<T>>(&s)) out.push_back(&c->conv);
  }
  return out;
}

template <typename T>
std::vector<ConvLayer<T>*> Network<T>::conv_layers() {
  std::vector<ConvLayer<T>*> out;
  for (auto& s : stages) {
    if (auto* c = std::get_if<ConvStage<T>>(&s)) out.push_back(&c->conv);
  }
  return out;
}

Model build(const ArchSpec& spec, Rng& rng, double dropout_rate) {
  spec.validate();
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InvalidConfig("dropout rate must lie in [0, 1)");
  }
  Model model{spec, {}};
  auto add_conv = [&](int in, int out, int k, bool relu) {
    ConvLayer<double> conv = ConvLayer<double>::zeros(out, in, k);
    conv.kernel = he_init(conv.kernel.shape(), rng);
    model.stages.emplace_back(ConvStage<double>{std::move(conv), relu});
  };
  auto add_block = [&](int in, int width) {
    add_conv(in, width, 3, true);
    for (int i = 1; i < spec.depth; ++i) add_conv(width, width, 3, true);
  };
  const int f = spec.f;
  add_block(spec.in_channels, f);
  add_block(f, 2 * f);
  model.stages.emplace_back(DropoutStage{dropout_rate});
  model.stages.emplace_back(DualPoolStage{});
  add_block(4 * f, 8 * f);
  add_block(8 * f, 16 * f);
  model.stages.emplace_back(DropoutStage{dropout_rate});
  add_conv(16 * f, 2, 1, false);
  return model;
}

namespace {

template <typename T>
void check_batch(const Network<T>& net, const Tensor4<T>& batch) {
  if (batch.c() != net.spec.in_channels) {
    throw ContractError("network expects " + std::to_string(net.spec.in_channels) + " input channels, got " +
                        std::to_string(batch.c()));
  }
  if (batch.h() < 2 || batch.w() < 2 || batch.h() % 2 != 0 || batch.w() % 2 != 0) {
    throw ContractError("network input spatial dims must be even and >= 2, got " + batch.shape().str());
  }
}

template <typename T>
Tensor4<T> dual_pool(const Tensor4<T>& x, PoolAux* max_aux) {
  auto mx = pool2_forward(x, PoolKind::Max);
  auto avg = pool2_forward(x, PoolKind::Avg);
  if (max_aux) *max_aux = std::move(mx.aux);
  return concat_channels(mx.output, avg.output);
}

}  // namespace

template <typename T>
Tensor4<T> forward(const Network<T>& net, const Tensor4<T>& batch) {
  check_batch(net, batch);
  Tensor4<T> x = batch;
  for (const auto& stage : net.stages) {
    if (const auto* c = std::get_if<ConvStage<T>>(&stage)) {
      x = conv2d_forward(x, c->conv);
      if (c->relu) x = relu(x);
    } else if (std::holds_alternative<DualPoolStage>(stage)) {
      x = dual_pool<T>(x, nullptr);
    }
  }
  return x;
}

Tensor forward_train(const Model& model, const Tensor& batch, Rng& rng, ForwardTrace& trace) {
  check_batch(model, batch);
  const std::size_t count = model.stages.size();
  trace.activations.assign(1, batch);
  trace.activations.reserve(count + 1);
  trace.drop_scales.assign(count, {});
  trace.max_aux.assign(count, {});
  for (std::size_t i = 0; i < count; ++i) {
    const Tensor& x = trace.activations.back();
    const auto& stage = model.stages[i];
    Tensor y;
    if (const auto* c = std::get_if<ConvStage<double>>(&stage)) {
      y = conv2d_forward(x, c->conv);
      if (c->relu) y = relu(y);
    } else if (std::holds_alternative<DualPoolStage>(stage)) {
      y = dual_pool<double>(x, &trace.max_aux[i]);
    } else {
      auto dropped = dropout(x, DropoutLayer{std::get<DropoutStage>(stage).rate, Mode::Train}, rng);
      y = std::move(dropped.output);
      trace.drop_scales[i] = std::move(dropped.scale);
    }
    trace.activations.push_back(std::move(y));
  }
  return trace.activations.back();
}

ModelGrads backward(const Model& model, const ForwardTrace& trace, const Tensor& grad_logits) {
  const std::size_t count = model.stages.size();
  if (trace.activations.size() != count + 1) throw ContractError("trace does not belong to this model");
  if (grad_logits.shape() != trace.activations.back().shape()) {
    throw ContractError("grad_logits shape " + grad_logits.shape().str() + " does not match logits");
  }
  const std::size_t convs = model.conv_count();
  ModelGrads grads;
  grads.kernels.resize(convs);
  grads.biases.resize(convs);
  std::size_t conv_index = convs;
  Tensor g = grad_logits;
  for (std::size_t i = count; i-- > 0;) {
    const auto& stage = model.stages[i];
    const Tensor& x = trace.activations[i];
    if (const auto* c = std::get_if<ConvStage<double>>(&stage)) {
      if (c->relu) g = relu_backward(trace.activations[i + 1], g);
      auto cg = conv2d_backward(x, c->conv, g, i > 0);
      --conv_index;
      grads.kernels[conv_index] = std::move(cg.kernel);
      grads.biases[conv_index] = std::move(cg.bias);
      g = std::move(cg.input);
    } else if (std::holds_alternative<DualPoolStage>(stage)) {
      auto [g_max, g_avg] = split_channels(g, x.c());
      Tensor from_max = pool2_backward(trace.max_aux[i], g_max);
      const Tensor from_avg = pool2_backward(PoolAux{PoolKind::Avg, x.shape(), {}}, g_avg);
      auto dst = from_max.data();
      const auto src = from_avg.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      g = std::move(from_max);
    } else {
      g = dropout_backward(trace.drop_scales[i], g);
    }
  }
  return grads;
}

std::vector<std::span<double>> parameter_views(Model& model) {
  std::vector<std::span<double>> views;
  for (auto* c : model.conv_layers()) {
    views.emplace_back(c->kernel.data());
    views.emplace_back(c->bias);
  }
  return views;
}

std::vector<std::span<const double>> gradient_views(const ModelGrads& grads) {
  std::vector<std::span<const double>> views;
  for (std::size_t i = 0; i < grads.kernels.size(); ++i) {
    views.emplace_back(grads.kernels[i].data());
    views.emplace_back(grads.biases[i]);
  }
  return views;
}

template struct Network<double>;
template struct Network<float>;
template Tensor4<double> forward(const Network<double>&, const Tensor4<double>&);
template Tensor4<float> forward(const Network<float>&, const Tensor4<float>&);

}  // namespace hse
