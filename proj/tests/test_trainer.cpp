#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "hse/error.hpp"
#include "hse/optim.hpp"
#include "hse/parallel.hpp"
#include "hse/synth.hpp"
#include "hse/trainer.hpp"

using namespace hse;

namespace {

// Hand-rolled single-variable Nadam step; t is the 1-based step index.
struct ScalarNadam {
  double m = 0.0;
  double v = 0.0;
  int t = 0;
  double step(double theta, double g, double lr) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double m_hat = m / (1 - std::pow(b1, t + 1));
    const double g_hat = g / (1 - std::pow(b1, t));
    const double v_hat = v / (1 - std::pow(b2, t));
    return theta - lr * (b1 * m_hat + (1 - b1) * g_hat) / (std::sqrt(v_hat) + eps);
  }
};

void nadam_step(Nadam& opt, std::vector<double>& params, const std::vector<double>& grads, double lr) {
  const std::span<double> p(params);
  const std::span<const double> g(grads);
  opt.step(std::span<const std::span<double>>(&p, 1), std::span<const std::span<const double>>(&g, 1), lr);
}

// Scripted epochs: the model's first bias records the epoch that produced it.
class ScriptedTask : public EpochTask {
 public:
  explicit ScriptedTask(std::vector<double> losses) : losses_(std::move(losses)) {}
  double train_epoch(Model& model, Nadam&, Rng&, int epoch) override {
    epoch_ = epoch;
    model.conv_layers()[0]->bias[0] = epoch;
    return 1.0;
  }
  double validate(const Model&) override {
    return epoch_ <= static_cast<int>(losses_.size()) ? losses_[epoch_ - 1] : losses_.back();
  }

 private:
  std::vector<double> losses_;
  int epoch_ = 0;
};

Model tiny_model(std::uint64_t seed = 1) {
  Rng rng(seed);
  return build({1, 1, 10}, rng);
}

SampleSet grid_samples(int scene, int height, int width, int size, int stride) {
  SampleSet set;
  set.patch_size = size;
  set.scenes[scene] = {height, width};
  for (int r = 0; r + size <= height; r += stride) {
    for (int c = 0; c + size <= width; c += stride) set.samples.push_back({scene, r, c, {}, {}});
  }
  return set;
}

bool overlaps(const Sample& a, const Sample& b, int size) {
  return a.scene == b.scene && a.row < b.row + size && b.row < a.row + size && a.col < b.col + size &&
         b.col < a.col + size;
}

SampleSet synthetic_patches(int scenes, int size, std::uint64_t seed) {
  SampleSet set;
  for (int i = 0; i < scenes; ++i) {
    SynthSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.seed = seed + static_cast<std::uint64_t>(i);
    const SynthScene s = synth_scene(spec);
    set.append(extract_patches(s.image, s.labels, i, size, size));
  }
  return set;
}

}  // namespace

TEST(Nadam, ZeroGradientLeavesParameters) {
  Nadam opt;
  std::vector<double> p = {1.5, -2.0, 0.25};
  nadam_step(opt, p, {0.0, 0.0, 0.0}, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.5, -2.0, 0.25}));
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Nadam, MatchesScalarOracle) {
  Nadam opt;
  ScalarNadam oracle;
  std::vector<double> p = {0.0};
  double theta = 0.0;
  nadam_step(opt, p, {1.0}, 0.1);
  theta = oracle.step(theta, 1.0, 0.1);
  EXPECT_NEAR(p[0], theta, 1e-12);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const double g = rng.uniform(-2.0, 2.0);
    nadam_step(opt, p, {g}, 0.1);
    theta = oracle.step(theta, g, 0.1);
    EXPECT_NEAR(p[0], theta, 1e-12) << "step " << i + 2;
  }
  EXPECT_EQ(opt.first_moments()[0].size(), 1u);
  EXPECT_NEAR(opt.first_moments()[0][0], oracle.m, 1e-15);
  EXPECT_NEAR(opt.second_moments()[0][0], oracle.v, 1e-15);
}

TEST(Nadam, NegatedGradientsNegateUpdate) {
  Rng rng(4);
  std::vector<double> g(20);
  for (double& v : g) v = rng.uniform(-1.0, 1.0);
  std::vector<double> neg(g.size());
  std::transform(g.begin(), g.end(), neg.begin(), [](double v) { return -v; });
  Nadam a, b;
  std::vector<double> pa(20, 0.0), pb(20, 0.0);
  for (int i = 0; i < 3; ++i) {
    nadam_step(a, pa, g, 0.01);
    nadam_step(b, pb, neg, 0.01);
  }
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i], -pb[i]);
}

TEST(Nadam, StepDecreasesConvexQuadratic) {
  // f(x) = (x - 3)^2
  for (double x0 : {-4.0, 0.0, 2.9, 10.0}) {
    Nadam opt;
    std::vector<double> x = {x0};
    const double before = (x[0] - 3) * (x[0] - 3);
    nadam_step(opt, x, {2 * (x[0] - 3)}, 1e-3);
    EXPECT_LT((x[0] - 3) * (x[0] - 3), before);
  }
}

TEST(Nadam, NonFiniteGradientAbortsWithoutUpdating) {
  Nadam opt;
  std::vector<double> p = {1.0, 2.0};
  try {
    nadam_step(opt, p, {0.5, std::numeric_limits<double>::quiet_NaN()}, 0.1);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("group 0"), std::string::npos) << e.what();
  }
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(nadam_step(opt, p, {std::numeric_limits<double>::infinity(), 0.0}, 0.1), NumericError);
}

TEST(Nadam, RejectsMismatchedGroups) {
  Nadam opt;
  std::vector<double> p = {1.0, 2.0};
  EXPECT_THROW(nadam_step(opt, p, {1.0}, 0.1), ContractError);
}

TEST(TrainConfig, DefaultsFollowRecipe) {
  const TrainConfig c;
  EXPECT_EQ(c.lr, 2e-4);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_EQ(c.patience, 10);
  EXPECT_EQ(c.val_fraction, 0.25);
  EXPECT_EQ(c.split, SplitMode::Spatial);
  EXPECT_EQ(c.class_weights.hse, 1.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, RejectsOutOfRangeValues) {
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), InvalidConfig);
  };
  bad([](TrainConfig& c) { c.lr = 0.0; });
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.patience = 0; });
  bad([](TrainConfig& c) { c.max_epochs = 0; });
  bad([](TrainConfig& c) { c.val_fraction = 0.0; });
  bad([](TrainConfig& c) { c.val_fraction = 1.0; });
  EXPECT_THROW(parse_split_mode("diagonal"), InvalidConfig);
  EXPECT_EQ(parse_split_mode("random"), SplitMode::Random);
}

TEST(EarlyStopping, StopsPatienceEpochsAfterMinimum) {
  for (int k : {1, 4, 17}) {
    std::vector<double> losses;
    for (int e = 1; e <= 60; ++e) losses.push_back(std::abs(e - k) + 1.0);
    ScriptedTask task(losses);
    TrainConfig cfg;
    cfg.max_epochs = 200;
    const TrainResult r = run_training(tiny_model(), task, cfg);
    EXPECT_TRUE(r.early_stopped);
    EXPECT_EQ(r.best_epoch, k);
    EXPECT_EQ(static_cast<int>(r.history.size()), k + cfg.patience);
    EXPECT_EQ(r.best.conv_layers()[0]->bias[0], k);
    double min_loss = 1e300;
    for (const auto& h : r.history) min_loss = std::min(min_loss, h.val_loss);
    EXPECT_EQ(r.history[static_cast<std::size_t>(k - 1)].val_loss, min_loss);
  }
}

TEST(EarlyStopping, MonotonicallyWorseningLossStopsAfterPatiencePlusOne) {
  std::vector<double> losses;
  for (int e = 1; e <= 30; ++e) losses.push_back(e);
  ScriptedTask task(losses);
  TrainConfig cfg;
  cfg.patience = 5;
  const TrainResult r = run_training(tiny_model(), task, cfg);
  EXPECT_EQ(r.history.size(), 6u);
  EXPECT_EQ(r.best_epoch, 1);
}

TEST(EarlyStopping, TiesDoNotCountAsImprovement) {
  EarlyStopping s(2);
  EXPECT_TRUE(s.update(1, 1.0));
  EXPECT_FALSE(s.update(2, 1.0));
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.update(3, 1.0));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 1);
}

TEST(RunTraining, MaxEpochsWithoutStopping) {
  std::vector<double> losses;
  for (int e = 1; e <= 10; ++e) losses.push_back(10.0 - e);
  ScriptedTask task(losses);
  TrainConfig cfg;
  cfg.max_epochs = 7;
  const TrainResult r = run_training(tiny_model(), task, cfg);
  EXPECT_FALSE(r.early_stopped);
  EXPECT_EQ(r.history.size(), 7u);
  EXPECT_EQ(r.best_epoch, 7);
}

TEST(RunTraining, CallbackCanEndTraining) {
  ScriptedTask task({5, 4, 3, 2, 1});
  TrainConfig cfg;
  int calls = 0;
  const TrainResult r = run_training(tiny_model(), task, cfg, [&](const EpochRecord& rec, const Model& current) {
    ++calls;
    EXPECT_EQ(current.conv_layers()[0]->bias[0], rec.epoch);
    EXPECT_TRUE(rec.improved);
    return rec.epoch == 3;
  });
  EXPECT_EQ(calls, 3);
  EXPECT_TRUE(r.stopped_by_callback);
  EXPECT_EQ(r.best_epoch, 3);
}

TEST(RunTraining, DivergenceNamesEpoch) {
  ScriptedTask task({1.0, 0.5, std::numeric_limits<double>::quiet_NaN()});
  try {
    run_training(tiny_model(), task, TrainConfig{});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 3"), std::string::npos) << e.what();
  }
}

TEST(SplitDataset, SpatialFootprintsAreDisjoint) {
  SampleSet all = grid_samples(0, 608, 512, 128, 96);
  all.append(grid_samples(1, 320, 896, 128, 96));
  Rng rng(1);
  const DatasetSplit split = split_dataset(all, SplitMode::Spatial, 0.25, rng);
  EXPECT_EQ(split.train.size() + split.val.size() + split.discarded, all.size());
  EXPECT_GT(split.val.size(), 0u);
  EXPECT_GT(split.discarded, 0u);
  for (const auto& v : split.val.samples) {
    const auto& ext = all.scenes.at(v.scene);
    EXPECT_LE(v.row + 128, 0.5 * ext.height);
    EXPECT_LE(v.col + 128, 0.5 * ext.width);
    for (const auto& t : split.train.samples) EXPECT_FALSE(overlaps(v, t, 128));
  }
}

TEST(SplitDataset, RandomPreservesCountAndIsReproducible) {
  const SampleSet all = grid_samples(0, 800, 800, 128, 96);
  Rng a(9), b(9), c(10);
  const DatasetSplit s1 = split_dataset(all, SplitMode::Random, 0.25, a);
  const DatasetSplit s2 = split_dataset(all, SplitMode::Random, 0.25, b);
  const DatasetSplit s3 = split_dataset(all, SplitMode::Random, 0.25, c);
  EXPECT_EQ(s1.train.size() + s1.val.size(), all.size());
  EXPECT_EQ(s1.discarded, 0u);
  EXPECT_EQ(s1.val.size(), static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(all.size()))));
  auto key = [](const SampleSet& s) {
    std::vector<std::pair<int, int>> out;
    for (const auto& x : s.samples) out.emplace_back(x.row, x.col);
    return out;
  };
  EXPECT_EQ(key(s1.val), key(s2.val));
  EXPECT_NE(key(s1.val), key(s3.val));
}

TEST(SplitDataset, RejectsDegenerateFractionsAndEmptySides) {
  const SampleSet all = grid_samples(0, 512, 512, 128, 96);
  Rng rng(1);
  EXPECT_THROW(split_dataset(all, SplitMode::Spatial, 0.0, rng), InvalidConfig);
  EXPECT_THROW(split_dataset(all, SplitMode::Random, 1.0, rng), InvalidConfig);
  const SampleSet one = grid_samples(0, 128, 128, 128, 96);
  EXPECT_THROW(split_dataset(one, SplitMode::Spatial, 0.25, rng), InvalidSplit);
  EXPECT_THROW(split_dataset(one, SplitMode::Random, 0.25, rng), InvalidSplit);
}

TEST(Train, DeterministicHistoryAcrossRunsAndThreadCounts) {
  const SampleSet train_set = synthetic_patches(2, 32, 100);
  const SampleSet val_set = synthetic_patches(1, 32, 200);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.batch_size = 4;
  auto run = [&](int threads) {
    set_num_threads(threads);
    Rng rng(5);
    return train(build({2, 1, 10}, rng), train_set, val_set, cfg);
  };
  const TrainResult a = run(1);
  const TrainResult b = run(1);
  const TrainResult c = run(3);
  set_num_threads(1);
  ASSERT_EQ(a.history.size(), 3u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
    EXPECT_EQ(a.history[i].train_loss, c.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, c.history[i].val_loss);
  }
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.best, c.best);
}

TEST(Train, LossKeepsFallingOnSeparableData) {
  const SampleSet train_set = synthetic_patches(4, 32, 300);
  const SampleSet val_set = synthetic_patches(1, 32, 400);
  TrainConfig cfg;
  cfg.max_epochs = 15;
  cfg.lr = 2e-3;
  Rng rng(6);
  const TrainResult r = train(build({4, 1, 10}, rng, 0.0), train_set, val_set, cfg);
  ASSERT_EQ(r.history.size(), 15u);
  for (std::size_t e = 5; e < r.history.size(); ++e) {
    EXPECT_LE(r.history[e].train_loss, 1.05 * r.history[e - 1].train_loss) << "epoch " << e + 1;
  }
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_GT(pixel_accuracy(r.best, val_set, 8), 0.8);
}

TEST(Train, RejectsEmptySets) {
  const SampleSet some = synthetic_patches(1, 32, 1);
  EXPECT_THROW(train(tiny_model(), SampleSet{}, some, TrainConfig{}), InvalidInput);
  EXPECT_THROW(train(tiny_model(), some, SampleSet{}, TrainConfig{}), InvalidInput);
}

TEST(History, LineFormat) {
  std::ostringstream out;
  write_history_header(out);
  write_history_line(out, EpochRecord{3, 0.5, 0.25, 1.5});
  EXPECT_EQ(out.str(), "epoch,train_loss,val_loss,seconds\n3,0.5,0.25,1.5\n");
}
