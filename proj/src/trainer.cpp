#include "hse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "hse/error.hpp"

namespace hse {

std::string to_string(SplitMode mode) { return mode == SplitMode::Spatial ? "spatial" : "random"; }

SplitMode parse_split_mode(const std::string& text) {
  if (text == "spatial") return SplitMode::Spatial;
  if (text == "random") return SplitMode::Random;
  throw InvalidConfig("split must be 'spatial' or 'random', got '" + text + "'");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidConfig("lr must be > 0");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (patience < 1) throw InvalidConfig("patience must be >= 1");
  if (max_epochs < 1) throw InvalidConfig("max_epochs must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidConfig("val_fraction must lie in (0, 1)");
  if (!(class_weights.hse > 0.0 && class_weights.non_hse > 0.0)) {
    throw InvalidConfig("class weights must be positive");
  }
}

DatasetSplit split_dataset(const SampleSet& samples, SplitMode mode, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidConfig("split fraction must lie in (0, 1)");
  DatasetSplit split;
  for (SampleSet* side : {&split.train, &split.val}) {
    side->patch_size = samples.patch_size;
    side->bands = samples.bands;
    side->scenes = samples.scenes;
  }
  if (mode == SplitMode::Random) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(samples.size())));
    std::vector<bool> is_val(samples.size(), false);
    for (std::size_t i = 0; i < n_val && i < order.size(); ++i) is_val[order[i]] = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      (is_val[i] ? split.val : split.train).samples.push_back(samples.samples[i]);
    }
  } else {
    const double side = std::sqrt(fraction);
    for (const auto& s : samples.samples) {
      const auto it = samples.scenes.find(s.scene);
      if (it == samples.scenes.end()) throw ContractError("sample references unknown scene " + std::to_string(s.scene));
      const double region_rows = side * it->second.height;
      const double region_cols = side * it->second.width;
      const int size = samples.patch_size;
      const bool inside = s.row + size <= region_rows && s.col + size <= region_cols;
      const bool outside = s.row >= region_rows || s.col >= region_cols;
      if (inside) {
        split.val.samples.push_back(s);
      } else if (outside) {
        split.train.samples.push_back(s);
      } else {
        ++split.discarded;
      }
    }
  }
  if (split.train.empty() || split.val.empty()) {
    throw InvalidSplit(to_string(mode) + " split left " + std::to_string(split.train.size()) + " training and " +
                       std::to_string(split.val.size()) + " validation patches");
  }
  return split;
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 1) throw InvalidConfig("patience must be >= 1");
}

bool EarlyStopping::update(int epoch, double loss) {
  if (best_epoch_ < 0 || loss < best_loss_) {
    best_epoch_ = epoch;
    best_loss_ = loss;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

TrainResult run_training(Model model, EpochTask& task, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  Rng rng(config.seed);
  Nadam optimizer;
  EarlyStopping stopper(config.patience);
  TrainResult result;
  result.best = model;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double train_loss = task.train_epoch(model, optimizer, rng, epoch);
    const double val_loss = task.validate(model);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (train loss " +
                         std::to_string(train_loss) + ", val loss " + std::to_string(val_loss) + ")");
    }
    EpochRecord record{epoch, train_loss, val_loss,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    record.improved = stopper.update(epoch, val_loss);
    result.history.push_back(record);
    if (record.improved) {
      result.best = model;
      result.best_epoch = epoch;
    }
    if (on_epoch && on_epoch(record, model)) {
      result.stopped_by_callback = true;
      break;
    }
    if (stopper.should_stop()) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

namespace {

class PatchTask : public EpochTask {
 public:
  PatchTask(const SampleSet& train_set, const SampleSet& val_set, const TrainConfig& config)
      : train_(train_set), val_(val_set), config_(config) {}

  double train_epoch(Model& model, Nadam& optimizer, Rng& rng, int epoch) override {
    std::vector<std::size_t> order(train_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    ForwardTrace trace;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config_.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config_.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const LabelGrid labels = make_labels(train_, idx);
      if (std::all_of(labels.codes.begin(), labels.codes.end(), [](std::uint8_t c) { return c == kIgnore; })) {
        continue;
      }
      const Tensor logits = forward_train(model, make_batch(train_, idx), rng, trace);
      const LossResult loss = softmax2_xent(logits, labels, config_.class_weights);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      const ModelGrads grads = backward(model, trace, loss.grad);
      const auto params = parameter_views(model);
      const auto grad_views = gradient_views(grads);
      try {
        optimizer.step(params, grad_views, config_.lr);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
      }
      loss_sum += loss.loss * loss.weight_sum;
      weight_sum += loss.weight_sum;
    }
    if (weight_sum == 0.0) throw UndefinedValue("training set has no labelled pixels");
    return loss_sum / weight_sum;
  }

  double validate(const Model& model) override {
    return evaluate_loss(model, val_, config_.batch_size, config_.class_weights);
  }

 private:
  const SampleSet& train_;
  const SampleSet& val_;
  TrainConfig config_;
};

template <typename Fn>
void for_each_batch(const SampleSet& set, int batch_size, Fn&& fn) {
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.size(); start += static_cast<std::size_t>(batch_size)) {
    idx.clear();
    for (std::size_t i = start; i < std::min(set.size(), start + static_cast<std::size_t>(batch_size)); ++i) {
      idx.push_back(i);
    }
    fn(std::span<const std::size_t>(idx));
  }
}

}  // namespace

TrainResult train(Model model, const SampleSet& train_set, const SampleSet& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train_set.empty() || val_set.empty()) throw InvalidInput("training and validation sets must be non-empty");
  PatchTask task(train_set, val_set, config);
  return run_training(std::move(model), task, config, on_epoch);
}

double evaluate_loss(const Model& model, const SampleSet& set, int batch_size, ClassWeights weights) {
  double loss_sum = 0.0;
  double weight_sum = 0.0;
  for_each_batch(set, batch_size, [&](std::span<const std::size_t> idx) {
    const LabelGrid labels = make_labels(set, idx);
    if (std::all_of(labels.codes.begin(), labels.codes.end(), [](std::uint8_t c) { return c == kIgnore; })) return;
    const LossResult loss = softmax2_xent(forward(model, make_batch(set, idx)), labels, weights);
    loss_sum += loss.loss * loss.weight_sum;
    weight_sum += loss.weight_sum;
  });
  if (weight_sum == 0.0) throw UndefinedValue("set has no labelled pixels");
  return loss_sum / weight_sum;
}

double pixel_accuracy(const Model& model, const SampleSet& set, int batch_size) {
  std::size_t correct = 0;
  std::size_t counted = 0;
  for_each_batch(set, batch_size, [&](std::span<const std::size_t> idx) {
    const LabelGrid labels = make_labels(set, idx);
    const Tensor logits = forward(model, make_batch(set, idx));
    for (int b = 0; b < logits.n(); ++b) {
      const auto l0 = logits.plane(b, 0);
      const auto l1 = logits.plane(b, 1);
      for (std::size_t i = 0; i < l0.size(); ++i) {
        const std::uint8_t code = labels.codes[static_cast<std::size_t>(b) * l0.size() + i];
        if (code == kIgnore) continue;
        ++counted;
        const std::uint8_t predicted = l1[i] >= l0[i] ? 1 : 0;
        correct += predicted == code ? 1 : 0;
      }
    }
  });
  if (counted == 0) throw UndefinedValue("set has no labelled pixels");
  return static_cast<double>(correct) / static_cast<double>(counted);
}

void write_history_header(std::ostream& out) { out << "epoch,train_loss,val_loss,seconds\n"; }

void write_history_line(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.seconds << '\n';
}

}  // namespace hse
