#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "hse/layers.hpp"
#include "hse/rng.hpp"
#include "hse/tensor.hpp"

namespace hse {

// Width f of the first convolution and depth d (convolutions per block).
// The network is d convs @f, d convs @2f, parallel 2x2 max+avg pooling
// concatenated to 4f channels, d convs @8f, d convs @16f and a final 1x1
// conv to two logits. Dropout follows the 2f block and the 16f block.
struct ArchSpec {
  int f = 16;
  int depth = 2;
  int in_channels = 10;

  void validate() const;
  bool operator==(const ArchSpec&) const = default;
};

// Closed-form trainable parameter count.
std::int64_t param_count(const ArchSpec& spec);

// Input pixels on each side of an output cell's 2x2 footprint that can
// influence its logits.
int receptive_radius(const ArchSpec& spec);

template <typename T>
struct ConvStage {
  ConvLayer<T> conv;
  bool relu = true;
  bool operator==(const ConvStage&) const = default;
};

struct DualPoolStage {
  bool operator==(const DualPoolStage&) const = default;
};

struct DropoutStage {
  double rate = 0.5;
  bool operator==(const DropoutStage&) const = default;
};

template <typename T>
using Stage = std::variant<ConvStage<T>, DualPoolStage, DropoutStage>;

template <typename T>
struct Network {
  ArchSpec spec;
  std::vector<Stage<T>> stages;

  std::size_t conv_count() const;
  std::int64_t param_count() const;
  std::vector<const ConvLayer<T>*> conv_layers() const;
  std::vector<ConvLayer<T>*> conv_layers();

  template <typename U>
  Network<U> cast() const {
    Network<U> out{spec, {}};
    for (const auto& stage : stages) {
      if (const auto* c = std::get_if<ConvStage<T>>(&stage)) {
        out.stages.emplace_back(ConvStage<U>{c->conv.template cast<U>(), c->relu});
      } else if (std::holds_alternative<DualPoolStage>(stage)) {
        out.stages.emplace_back(DualPoolStage{});
      } else {
        out.stages.emplace_back(std::get<DropoutStage>(stage));
      }
    }
    return out;
  }

  bool operator==(const Network&) const = default;
};

// Training and checkpoints use double precision; inference may cast to float.
using Model = Network<double>;

// Stage layout for the spec, with He-initialized kernels and zero biases.
Model build(const ArchSpec& spec, Rng& rng, double dropout_rate = 0.5);

// Eval-mode forward pass: (n, in_channels, h, w) -> logits (n, 2, h/2, w/2).
template <typename T>
Tensor4<T> forward(const Network<T>& net, const Tensor4<T>& batch);

// Intermediate values kept by forward_train for the backward pass.
struct ForwardTrace {
  std::vector<Tensor> activations;              // stage inputs, then the logits
  std::vector<std::vector<double>> drop_scales;  // per stage, empty unless dropout
  std::vector<PoolAux> max_aux;                  // per stage, used by the pool stage
};

// Train-mode forward pass with dropout masks drawn from rng.
Tensor forward_train(const Model& model, const Tensor& batch, Rng& rng, ForwardTrace& trace);

struct ModelGrads {
  std::vector<Tensor> kernels;
  std::vector<std::vector<double>> biases;
};

ModelGrads backward(const Model& model, const ForwardTrace& trace, const Tensor& grad_logits);

// Flat views in optimizer order: kernel then bias, for each conv in order.
std::vector<std::span<double>> parameter_views(Model& model);
std::vector<std::span<const double>> gradient_views(const ModelGrads& grads);

extern template struct Network<double>;
extern template struct Network<float>;

}  // namespace hse
