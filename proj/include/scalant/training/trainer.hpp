#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "scalant/data/corpus.hpp"
#include "scalant/model/config.hpp"
#include "scalant/model/parameters.hpp"
#include "scalant/training/adam.hpp"

namespace scalant {

struct StageConfig {
  int stage = 1;
  Variant variant = Variant::Type1;
  std::size_t n_sampled = 3;
  std::size_t lambda2_threshold = 1000;
  double lambda3 = 0.1;
  double max_lr = 1e-3;
  double init_lr = 5e-4;
  std::size_t warmup_iters = 4000;
  std::size_t epochs = 1;
  /// Stops the stage after this many optimizer updates; 0 means no cap.
  std::size_t max_updates = 0;
  double label_smoothing = 0.1;
  std::size_t grad_accum_steps = 1;
  std::size_t token_budget = 2048;
  AdamConfig adam;
  std::uint64_t seed = 1;
  /// Number of trailing epoch checkpoints averaged into the final weights.
  std::size_t average_last = 1;

  void validate() const;
};

/// One line of the metrics log: the state after an epoch, evaluated for one
/// probe spec.
struct EpochRecord {
  int stage = 0;
  std::size_t epoch = 0;
  std::size_t updates = 0;
  double lr = 0.0;
  double train_loss = 0.0;   // summed loss of all models per scored token
  double widest_loss = 0.0;  // widest model's label-smoothed loss per scored token
  WidthSpec spec;
  double valid_accuracy = 0.0;
  double valid_nll = 0.0;
};

struct TrainOptions {
  /// Epoch checkpoints and the metrics log go here; empty disables file output.
  std::filesystem::path out_dir;
  /// Specs evaluated after every epoch; empty means every type-1 width.
  std::vector<WidthSpec> probes;
  std::size_t eval_token_budget = 4096;
  /// Receives progress lines when set.
  std::ostream* progress = nullptr;
};

struct StageResult {
  std::vector<EpochRecord> records;
  std::size_t updates = 0;
  double seconds = 0.0;
};

/// Header and rows of the metrics log (CSV).
std::string metrics_header();
std::string metrics_row(const EpochRecord& r);

/// Trains `store` in place on `train` (ground-truth pairs for stages 1 and
/// 2, distillation pairs for stage 3) and evaluates the probes on `valid`
/// after each epoch.
StageResult train_stage(ParameterStore& store, const Corpus& train, const Corpus& valid, const StageConfig& config,
                        const TrainOptions& options = {});

}  // namespace scalant
