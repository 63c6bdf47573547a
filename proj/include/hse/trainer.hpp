#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hse/layers.hpp"
#include "hse/net.hpp"
#include "hse/optim.hpp"
#include "hse/patches.hpp"
#include "hse/rng.hpp"

namespace hse {

enum class SplitMode { Spatial, Random };

std::string to_string(SplitMode mode);
SplitMode parse_split_mode(const std::string& text);

struct TrainConfig {
  double lr = 2e-4;
  int batch_size = 8;
  int patience = 10;
  int max_epochs = 200;
  std::uint64_t seed = 42;
  SplitMode split = SplitMode::Spatial;
  double val_fraction = 0.25;
  ClassWeights class_weights{};  // unweighted unless set

  void validate() const;
};

struct DatasetSplit {
  SampleSet train;
  SampleSet val;
  std::size_t discarded = 0;
};

// Spatial mode: per scene, patches lying entirely inside the upper-left
// region (sqrt(fraction) of each side, so ~fraction of the area) go to
// validation, patches entirely outside it to training, and patches
// straddling its border are discarded. Random mode: round(fraction * n)
// patches drawn without replacement go to validation. Throws InvalidSplit
// when either side ends up empty.
DatasetSplit split_dataset(const SampleSet& samples, SplitMode mode, double fraction, Rng& rng);

// Patience-based stopping on a monitored loss that must strictly decrease.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  // Record the loss for an epoch; returns true when it is a new best.
  bool update(int epoch, double loss);
  bool should_stop() const { return since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  int patience_;
  int best_epoch_ = -1;
  double best_loss_ = 0.0;
  int since_best_ = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
  bool improved = false;  // new best validation loss
};

struct TrainResult {
  Model best;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool early_stopped = false;
  bool stopped_by_callback = false;
};

// One epoch of optimization plus a validation pass. run_training drives it;
// tests substitute scripted tasks.
class EpochTask {
 public:
  virtual ~EpochTask() = default;
  virtual double train_epoch(Model& model, Nadam& optimizer, Rng& rng, int epoch) = 0;
  virtual double validate(const Model& model) = 0;
};

// Called after every epoch with the current weights; returning true ends
// training after that epoch.
using EpochCallback = std::function<bool(const EpochRecord&, const Model& current)>;

// Iterate epochs until the validation loss has not improved for `patience`
// epochs or max_epochs is reached; returns the weights of the best epoch.
// Throws NumericError naming the epoch if a loss turns non-finite.
TrainResult run_training(Model model, EpochTask& task, const TrainConfig& config, const EpochCallback& on_epoch = {});

// Shuffled mini-batch Nadam training on patches with eval-mode validation loss.
TrainResult train(Model model, const SampleSet& train_set, const SampleSet& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Eval-mode loss over a whole set, averaged over every non-ignored pixel.
double evaluate_loss(const Model& model, const SampleSet& set, int batch_size, ClassWeights weights = {});

// Share of non-ignored label pixels whose argmax prediction is correct.
double pixel_accuracy(const Model& model, const SampleSet& set, int batch_size);

// "epoch,train_loss,val_loss,seconds" header and one line per epoch.
void write_history_header(std::ostream& out);
void write_history_line(std::ostream& out, const EpochRecord& record);

}  // namespace hse
