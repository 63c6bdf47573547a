#include "hse/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "hse/layers.hpp"
#include "hse/net.hpp"
#include "hse/rng.hpp"

namespace hse {
namespace {

using Objective = std::function<double()>;

void randomize(Tensor& t, Rng& rng) {
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

// Max relative error between analytic gradients and central differences of
// objective() with respect to every entry of values.
double compare(std::span<double> values, std::span<const double> analytic, const Objective& objective, double step,
               std::size_t& entries) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = objective();
    values[i] = saved - step;
    const double down = objective();
    values[i] = saved;
    worst = std::max(worst, gradcheck_rel_error(analytic[i], (up - down) / (2.0 * step)));
    ++entries;
  }
  return worst;
}

// Values in [-1, 1] whose magnitudes stay clear of zero (relu kink) and
// that are pairwise distinct by a wide gap (max-pool ties).
void spread_values(Tensor& t, Rng& rng) {
  const std::size_t n = t.size();
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    grid[i] = std::abs(v) < 0.02 ? (v < 0 ? -0.02 : 0.02) : v;
  }
  rng.shuffle(std::span<double>(grid));
  std::copy(grid.begin(), grid.end(), t.data().begin());
}

GradCheckResult check_conv(Rng& rng, int k, double step) {
  const int in_c = rng.uniform_int(1, 3);
  const int out_c = rng.uniform_int(1, 4);
  Tensor x(rng.uniform_int(1, 2), in_c, rng.uniform_int(2, 5), rng.uniform_int(2, 5));
  ConvLayer<double> layer = ConvLayer<double>::zeros(out_c, in_c, k);
  randomize(x, rng);
  randomize(layer.kernel, rng);
  for (double& b : layer.bias) b = rng.uniform(-1.0, 1.0);
  Tensor r(x.n(), out_c, x.h(), x.w());
  randomize(r, rng);
  const auto grads = conv2d_backward(x, layer, r);
  const Objective objective = [&] { return dot(conv2d_forward(x, layer), r); };
  GradCheckResult res{k == 3 ? "conv3x3" : "conv1x1"};
  res.max_rel_error = std::max({compare(x.data(), grads.input.data(), objective, step, res.entries),
                                compare(layer.kernel.data(), grads.kernel.data(), objective, step, res.entries),
                                compare(layer.bias, grads.bias, objective, step, res.entries)});
  return res;
}

GradCheckResult check_pool(Rng& rng, PoolKind kind, double step) {
  Tensor x(rng.uniform_int(1, 2), rng.uniform_int(1, 3), 2 * rng.uniform_int(1, 3), 2 * rng.uniform_int(1, 3));
  spread_values(x, rng);
  const auto fwd = pool2_forward(x, kind);
  Tensor r(fwd.output.shape());
  randomize(r, rng);
  const Tensor g = pool2_backward(fwd.aux, r);
  const Objective objective = [&] { return dot(pool2_forward(x, kind).output, r); };
  GradCheckResult res{kind == PoolKind::Max ? "maxpool2" : "avgpool2"};
  res.max_rel_error = compare(x.data(), g.data(), objective, step, res.entries);
  return res;
}

GradCheckResult check_concat(Rng& rng, double step) {
  const int n = rng.uniform_int(1, 2), h = rng.uniform_int(1, 4), w = rng.uniform_int(1, 4);
  Tensor a(n, rng.uniform_int(1, 3), h, w);
  Tensor b(n, rng.uniform_int(1, 3), h, w);
  randomize(a, rng);
  randomize(b, rng);
  Tensor r(n, a.c() + b.c(), h, w);
  randomize(r, rng);
  const auto [ga, gb] = split_channels(r, a.c());
  const Objective objective = [&] { return dot(concat_channels(a, b), r); };
  GradCheckResult res{"concat"};
  res.max_rel_error = std::max(compare(a.data(), ga.data(), objective, step, res.entries),
                               compare(b.data(), gb.data(), objective, step, res.entries));
  return res;
}

GradCheckResult check_relu(Rng& rng, double step) {
  Tensor x(1, rng.uniform_int(1, 3), rng.uniform_int(1, 4), rng.uniform_int(1, 4));
  spread_values(x, rng);
  Tensor r(x.shape());
  randomize(r, rng);
  const Tensor g = relu_backward(relu(x), r);
  const Objective objective = [&] { return dot(relu(x), r); };
  GradCheckResult res{"relu"};
  res.max_rel_error = compare(x.data(), g.data(), objective, step, res.entries);
  return res;
}

GradCheckResult check_dropout(Rng& rng, double step) {
  Tensor x(1, rng.uniform_int(1, 3), rng.uniform_int(2, 4), rng.uniform_int(2, 4));
  randomize(x, rng);
  Tensor r(x.shape());
  randomize(r, rng);
  const DropoutLayer layer{rng.uniform(0.1, 0.7), Mode::Train};
  const std::uint64_t mask_seed = rng.next();
  Rng mask_rng(mask_seed);
  const auto fwd = dropout(x, layer, mask_rng);
  const Tensor g = dropout_backward(fwd.scale, r);
  const Objective objective = [&] {
    Rng same(mask_seed);
    return dot(dropout(x, layer, same).output, r);
  };
  GradCheckResult res{"dropout"};
  res.max_rel_error = compare(x.data(), g.data(), objective, step, res.entries);
  return res;
}

GradCheckResult check_softmax(Rng& rng, double step) {
  Tensor logits(rng.uniform_int(1, 2), 2, rng.uniform_int(1, 4), rng.uniform_int(1, 4));
  for (double& v : logits.data()) v = rng.uniform(-3.0, 3.0);
  LabelGrid labels(logits.n(), logits.h(), logits.w());
  for (auto& c : labels.codes) {
    const double u = rng.uniform();
    c = u < 0.15 ? kIgnore : (u < 0.55 ? 1 : 0);
  }
  labels.codes[0] = 1;
  const ClassWeights weights{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)};
  const LossResult loss = softmax2_xent(logits, labels, weights);
  const Objective objective = [&] { return softmax2_xent(logits, labels, weights).loss; };
  GradCheckResult res{"softmax2_xent"};
  res.max_rel_error = compare(logits.data(), loss.grad.data(), objective, step, res.entries);
  return res;
}

GradCheckResult check_network(Rng& rng, double step) {
  const ArchSpec spec{1, rng.uniform_int(1, 2), 3};
  Rng init(rng.next());
  Model model = build(spec, init, 0.3);
  for (auto* c : model.conv_layers()) {
    for (double& b : c->bias) b = rng.uniform(-0.1, 0.1);
  }
  Tensor x(1, spec.in_channels, 2 * rng.uniform_int(1, 3), 2 * rng.uniform_int(1, 3));
  randomize(x, rng);
  const std::uint64_t mask_seed = rng.next();
  ForwardTrace trace;
  Rng mask_rng(mask_seed);
  const Tensor logits = forward_train(model, x, mask_rng, trace);
  Tensor r(logits.shape());
  randomize(r, rng);
  const ModelGrads grads = backward(model, trace, r);
  const Objective objective = [&] {
    Rng same(mask_seed);
    ForwardTrace t;
    return dot(forward_train(model, x, same, t), r);
  };
  GradCheckResult res{"network"};
  const auto params = parameter_views(model);
  const auto views = gradient_views(grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    res.max_rel_error = std::max(res.max_rel_error, compare(params[i], views[i], objective, step, res.entries));
  }
  return res;
}

}  // namespace

double gradcheck_rel_error(double analytic, double numeric) {
  const double scale = std::max({1e-3, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& options) {
  Rng rng(options.seed);
  std::vector<std::function<GradCheckResult(Rng&)>> kinds = {
      [&](Rng& r) { return check_conv(r, 3, options.step); },
      [&](Rng& r) { return check_conv(r, 1, options.step); },
      [&](Rng& r) { return check_pool(r, PoolKind::Max, options.step); },
      [&](Rng& r) { return check_pool(r, PoolKind::Avg, options.step); },
      [&](Rng& r) { return check_concat(r, options.step); },
      [&](Rng& r) { return check_relu(r, options.step); },
      [&](Rng& r) { return check_dropout(r, options.step); },
      [&](Rng& r) { return check_softmax(r, options.step); },
      [&](Rng& r) { return check_network(r, options.step); },
  };
  std::vector<GradCheckResult> results;
  for (const auto& kind : kinds) {
    for (int i = 0; i < options.instances; ++i) {
      GradCheckResult res = kind(rng);
      res.instance = i;
      res.passed = res.max_rel_error <= options.tolerance;
      results.push_back(std::move(res));
    }
  }
  return results;
}

}  // namespace hse
