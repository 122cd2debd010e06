#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scalant/data/corpus.hpp"
#include "scalant/decoding/distill.hpp"
#include "scalant/eval/search.hpp"
#include "scalant/model/config.hpp"
#include "scalant/training/trainer.hpp"

namespace scalant {

/// Where the pairs come from: a synthetic task, or tab-separated text files.
struct DataConfig {
  std::optional<TaskKind> task;
  std::size_t train_pairs = 20000;
  std::size_t valid_pairs = 500;
  std::size_t test_pairs = 500;
  std::size_t min_len = 4;
  std::size_t max_len = 12;
  std::filesystem::path train_file, valid_file, test_file;
};

struct DecodeConfig {
  std::size_t beam = 4;
  double alpha = 0.6;
};

/// Everything one run needs. Artifacts are laid out under `out_dir`:
///
///   data/{train,valid,test}.tsv, data/vocab.txt   written by prep
///   stageN/                                       epoch checkpoints and metrics
///   stageN.ckpt                                   final weights of stage N
///   distill.tsv                                   beam targets for stage 3
///   search.csv                                    type-2 search report
struct RunConfig {
  ModelConfig model;
  DataConfig data;
  std::array<StageConfig, 3> stages;
  /// Checkpoint each stage starts from; empty for stage 1 means fresh weights.
  std::array<std::filesystem::path, 3> init_from;
  DistillSettings distill;
  /// Decode only the first this-many training sources; 0 decodes all.
  std::size_t distill_max_sources = 0;
  std::filesystem::path teacher_checkpoint;
  SearchOptions search;
  std::filesystem::path search_checkpoint;
  DecodeConfig decode;
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 1;

  /// Fills derived defaults (paths under out_dir, per-stage seeds) and checks
  /// every section.
  void finalize();

  std::filesystem::path data_dir() const { return out_dir / "data"; }
  std::filesystem::path vocab_path() const { return data_dir() / "vocab.txt"; }
  std::filesystem::path stage_checkpoint(int stage) const;
  std::filesystem::path distill_path() const { return out_dir / "distill.tsv"; }
};

/// Parses a YAML run configuration. Unknown keys anywhere are errors.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& yaml_text);

/// Seed of the `index`-th random stream of a run.
std::uint64_t derived_seed(std::uint64_t run_seed, std::size_t index);

}  // namespace scalant
