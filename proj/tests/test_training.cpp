#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "scalant/data/batching.hpp"
#include "scalant/model/transformer.hpp"
#include "scalant/training/adam.hpp"
#include "scalant/training/losses.hpp"
#include "scalant/training/schedule.hpp"
#include "scalant/training/trainer.hpp"
#include "support.hpp"

namespace scalant {
namespace {

using testing::random_store;
using testing::relative_error;
using testing::tiny_config;

Batch tiny_batch(std::uint64_t seed, std::size_t pairs = 3) {
  Rng rng(seed);
  Corpus c;
  for (std::size_t i = 0; i < pairs; ++i) {
    auto src = testing::random_tokens(rng, 2 + rng.index(4), 9);
    auto tgt = testing::random_tokens(rng, 1 + rng.index(4), 9);
    c.push_back({src, tgt});
  }
  std::vector<std::size_t> idx(pairs);
  for (std::size_t i = 0; i < pairs; ++i) idx[i] = i;
  return make_batch(c, idx);
}

TEST(Schedule, Lambda2GoldenValues) {
  EXPECT_EQ(lambda2(0, 1000), 1.0);
  EXPECT_EQ(lambda2(500, 1000), 0.75);
  EXPECT_EQ(lambda2(1000, 1000), 0.5);
  EXPECT_EQ(lambda2(5000, 1000), 0.5);
  EXPECT_THROW(lambda2(1, 0), Error);
}

TEST(Schedule, LearningRateGoldenValues) {
  EXPECT_DOUBLE_EQ(lr_at(4000, 1e-3, 4000), 1e-3);
  EXPECT_DOUBLE_EQ(lr_at(16000, 1e-3, 4000), 5e-4);
  EXPECT_DOUBLE_EQ(lr_at(1, 1e-3, 4000, 5e-4), 5e-4 + 5e-4 / 4000.0);
  double prev = 0.0;
  for (std::size_t j = 1; j <= 4000; j += 37) {
    EXPECT_GT(lr_at(j, 1e-3, 4000), prev);
    prev = lr_at(j, 1e-3, 4000);
  }
  EXPECT_THROW(lr_at(0, 1e-3, 10), Error);
}

TEST(Schedule, LabelSmoothing) {
  const Tensor s = label_smooth(Tensor::matrix({{0, 1, 0, 0}, {1, 0, 0, 0}}), 0.3);
  EXPECT_DOUBLE_EQ(s.at(0, 1), 0.7);
  EXPECT_DOUBLE_EQ(s.at(0, 0), 0.1);
  EXPECT_DOUBLE_EQ(s.at(1, 3), 0.1);
  EXPECT_THROW(label_smooth(Tensor::matrix({{0.5, 0.5}}), 0.1), Error);
}

TEST(Losses, HardTargetsMatchLabelSmoothingAndSkipPadding) {
  const auto labels = decoder_labels({{5, 6}, {7}});
  const Tensor t = hard_targets(labels, 9, 0.1);
  Tensor one_hot({1, 9});
  one_hot.at(0, 6) = 1.0;
  const Tensor expect = label_smooth(one_hot, 0.1);
  for (std::size_t c = 0; c < 9; ++c) EXPECT_EQ(t.at(1, c), expect.at(0, c));
  for (std::size_t c = 0; c < 9; ++c) EXPECT_EQ(t.at(5, c), 0.0);  // padding row
  EXPECT_EQ(position_weights(labels).data()[5], 0.0);
}

TEST(Adam, MatchesScalarReferenceWithPerElementCounts) {
  ModelConfig c = tiny_config();
  ParameterStore store = random_store(c, 1);
  const ParameterStore before = store;
  Adam adam(store, {0.9, 0.98, 1e-8});
  GradientBuffer g(store);
  const std::size_t p = store.index("proj_in.bias");
  const std::vector<double> g1{0.5, -1.0}, g2{0.25, 2.0, 3.0};

  g.add_block(p, {1, 2}, g1);  // elements 0, 1 at step 1
  adam.step(store, g, 0.01);
  g.reset();
  g.add_block(p, {1, 3}, g2);  // elements 0, 1, 2 at step 2; element 2 sees its first update
  adam.step(store, g, 0.02);

  auto reference = [](double x, const std::vector<std::pair<double, double>>& steps) {
    double m = 0.0, v = 0.0;
    int t = 0;
    for (auto [grad, lr] : steps) {
      ++t;
      m = 0.9 * m + 0.1 * grad;
      v = 0.98 * v + 0.02 * grad * grad;
      x -= lr * (m / (1.0 - std::pow(0.9, t))) / (std::sqrt(v / (1.0 - std::pow(0.98, t))) + 1e-8);
    }
    return x;
  };
  const auto& x0 = before.value(p);
  const auto& x = store.value(p);
  EXPECT_NEAR(x[0], reference(x0[0], {{0.5, 0.01}, {0.25, 0.02}}), 1e-15);
  EXPECT_NEAR(x[1], reference(x0[1], {{-1.0, 0.01}, {2.0, 0.02}}), 1e-15);
  EXPECT_NEAR(x[2], reference(x0[2], {{3.0, 0.02}}), 1e-15);
  for (std::size_t e = 3; e < x.size(); ++e) EXPECT_EQ(x[e], x0[e]);
  for (std::size_t i = 0; i < store.size(); ++i)
    if (i != p) {
      EXPECT_TRUE(bitwise_equal(store.value(i), before.value(i)));
    }
}

double full_loss(const ParameterStore& store, const Batch& batch, const std::vector<WidthSpec>& specs,
                 SubModelWeights w) {
  ad::Tape tape;
  TapeBinding binding(tape, store, false);
  return distillation_loss(binding, batch, specs, w, 0.1, {}).total.value()[0];
}

TEST(Losses, Stage2AtLambdaOneEqualsStage1) {
  const ParameterStore store = random_store(tiny_config(), 2);
  const Batch batch = tiny_batch(3);
  const std::vector<WidthSpec> specs{WidthSpec::uniform(4, 4), WidthSpec::parse("8:4,8,8,4", 4)};
  ad::Tape t1, t2;
  TapeBinding b1(t1, store), b2(t2, store);
  const double s1 = stage1_loss(b1, batch, specs, 0.1).total.value()[0];
  const auto s2 = stage2_loss(b2, batch, specs, 1.0, 0.1);
  EXPECT_NEAR(s2.total.value()[0], s1, 1e-12);
  EXPECT_EQ(s2.sub_soft.size(), 2u);  // the teacher term is formed even at weight zero
}

TEST(Losses, OneTapeAndPerModelTapesAgree) {
  const ParameterStore store = random_store(tiny_config(), 4);
  const Batch batch = tiny_batch(5, 4);
  const std::vector<WidthSpec> specs{WidthSpec::uniform(4, 4), WidthSpec::parse("8:8,4,4,4", 4)};
  for (const SubModelWeights w : {stage1_weights(), stage2_weights(0.7), stage3_weights(0.1)}) {
    GradientBuffer joint(store), split(store);
    {
      ad::Tape tape;
      TapeBinding binding(tape, store);
      const auto terms = distillation_loss(binding, batch, specs, w, 0.1, {});
      tape.backward(terms.total);
      binding.collect(joint);
    }
    Rng rng(1);
    const double total = accumulate_gradients(store, batch, specs, w, 0.1, rng, 0.0, split);
    EXPECT_NEAR(total, full_loss(store, batch, specs, w), 1e-12);
    for (std::size_t i = 0; i < store.size(); ++i)
      EXPECT_LT(max_abs_diff(joint.grad(i), split.grad(i)), 1e-12) << store.info(i).name;
  }
}

TEST(Losses, PaddingContentDoesNotAffectTheLoss) {
  const ParameterStore store = random_store(tiny_config(), 6);
  const std::vector<WidthSpec> specs{WidthSpec::uniform(4, 4)};
  Batch batch = tiny_batch(7, 4);
  const double base = full_loss(store, batch, specs, stage2_weights(0.6));
  Rng rng(3);
  for (TokenBlock* block : {&batch.source, &batch.target_in, &batch.target_out})
    for (std::size_t b = 0; b < block->batch; ++b)
      for (std::size_t t = block->lengths[b]; t < block->len; ++t)
        block->ids[b * block->len + t] = static_cast<int>(kFirstContentToken + rng.index(5));
  EXPECT_EQ(full_loss(store, batch, specs, stage2_weights(0.6)), base);
}

TEST(Losses, SplitBatchesAccumulateToTheFullBatchGradient) {
  const ParameterStore store = random_store(tiny_config(), 8);
  Rng data(9);
  Corpus corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back({testing::random_tokens(data, 3, 9), testing::random_tokens(data, 2, 9)});
  const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5}, first{0, 1, 2}, second{3, 4, 5};
  const Batch whole = make_batch(corpus, all), a = make_batch(corpus, first), b = make_batch(corpus, second);
  const std::vector<WidthSpec> specs{WidthSpec::uniform(4, 4)};
  const double denom = static_cast<double>(whole.target_out.token_count());
  GradientBuffer g_whole(store), g_split(store);
  Rng rng(1);
  accumulate_gradients(store, whole, specs, stage1_weights(), 0.1, rng, denom, g_whole);
  accumulate_gradients(store, a, specs, stage1_weights(), 0.1, rng, denom, g_split);
  accumulate_gradients(store, b, specs, stage1_weights(), 0.1, rng, denom, g_split);
  for (std::size_t i = 0; i < store.size(); ++i) EXPECT_LT(max_abs_diff(g_whole.grad(i), g_split.grad(i)), 1e-12);
}

TEST(Training, StepThroughSubModelChangesOnlyItsSlices) {
  ParameterStore store = random_store(tiny_config(), 10);
  const ParameterStore before = store;
  const auto spec = WidthSpec::parse("4:8,4,4,8", 4);
  const Batch batch = tiny_batch(11, 4);
  GradientBuffer grads(store);
  {
    ad::Tape tape;
    TapeBinding binding(tape, store);
    const SubModel sub(store, spec);
    const ad::Var logits = forward_logits(binding, sub, batch.source, batch.target_in, {});
    tape.backward(ad::cross_entropy(logits, hard_targets(batch.target_out, 9, 0.1), position_weights(batch.target_out)));
    binding.collect(grads);
  }
  Adam adam(store);
  adam.step(store, grads, 1e-3);
  std::size_t active = 0, changed = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Block blk = store.active_block(i, spec);
    const std::size_t cols = store.value(i).cols();
    for (std::size_t e = 0; e < store.value(i).size(); ++e) {
      const bool inside = e / cols < blk.rows && e % cols < blk.cols;
      const bool diff = std::bit_cast<std::uint64_t>(store.value(i)[e]) != std::bit_cast<std::uint64_t>(before.value(i)[e]);
      EXPECT_EQ(static_cast<bool>(grads.touched(i)[e]), inside) << store.info(i).name << " " << e;
      if (!inside) {
        EXPECT_FALSE(diff) << store.info(i).name << " " << e;
      }
      // Dead ReLU units and key biases get exactly zero gradient and stay put.
      if (inside) {
        EXPECT_EQ(diff, grads.grad(i)[e] != 0.0) << store.info(i).name << " " << e;
      }
      active += inside;
      changed += diff;
    }
  }
  EXPECT_EQ(active, SubModel(store, spec).active_parameter_count());
  EXPECT_GT(changed, active / 2);
}

TEST(Training, FullModelGradientMatchesFiniteDifferences) {
  const ParameterStore store = random_store(tiny_config(), 12);
  const Batch batch = tiny_batch(13, 2);
  const std::vector<WidthSpec> specs{WidthSpec::parse("8:4,8,4,4", 4)};
  GradientBuffer grads(store);
  {
    ad::Tape tape;
    TapeBinding binding(tape, store);
    tape.backward(stage1_loss(binding, batch, specs, 0.1).total);
    binding.collect(grads);
  }
  ParameterStore probe = store;
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < probe.size(); ++i)
    for (std::size_t e = 0; e < probe.value(i).size(); ++e) {
      double& x = probe.value(i)[e];
      const double saved = x;
      x = saved + h;
      const double up = full_loss(probe, batch, specs, stage1_weights());
      x = saved - h;
      const double down = full_loss(probe, batch, specs, stage1_weights());
      x = saved;
      worst = std::max(worst, relative_error(grads.grad(i)[e], (up - down) / (2 * h)));
    }
  EXPECT_LT(worst, 1e-4);
}

class TrainerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("scalant_train_" + std::to_string(::getpid()));
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(TrainerTest, RunsDeterministicallyAndWritesArtifacts) {
  const Corpus train = synth_task(TaskKind::Reverse, 40, 9, 2, 5, 1);
  const Corpus valid = synth_task(TaskKind::Reverse, 10, 9, 2, 5, 2);
  StageConfig cfg;
  cfg.stage = 2;
  cfg.n_sampled = 1;
  cfg.warmup_iters = 5;
  cfg.token_budget = 40;
  cfg.epochs = 2;
  cfg.average_last = 2;
  cfg.lambda2_threshold = 4;
  ParameterStore a = ParameterStore::initialized(tiny_config(), 1), b = a;
  TrainOptions opts;
  opts.out_dir = dir_;
  const StageResult r = train_stage(a, train, valid, cfg, opts);
  train_stage(b, train, valid, cfg);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(r.records.size(), 4u);  // two epochs, two probe widths
  EXPECT_TRUE(std::filesystem::exists(dir_ / "stage2_epoch1.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "stage2_epoch2.ckpt"));
  std::ifstream log(dir_ / "stage2_metrics.csv");
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header, metrics_header());

  cfg.max_updates = 3;
  ParameterStore c = ParameterStore::initialized(tiny_config(), 1);
  EXPECT_EQ(train_stage(c, train, valid, cfg).updates, 3u);
}

TEST(Trainer, RejectsInvalidConfigs) {
  StageConfig cfg;
  cfg.stage = 4;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = StageConfig{};
  cfg.average_last = 2;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = StageConfig{};
  ParameterStore s(tiny_config());
  EXPECT_THROW(train_stage(s, {}, {}, cfg), Error);
}

}  // namespace
}  // namespace scalant
