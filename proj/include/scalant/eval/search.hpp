#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scalant/data/corpus.hpp"
#include "scalant/model/parameters.hpp"

namespace scalant {

enum class SearchMetric { Accuracy, Bleu };

struct SearchOptions {
  std::vector<std::size_t> menu_subset;
  std::size_t n_samples = 1000;
  std::size_t top_k = 10;
  std::uint64_t seed = 1;
  SearchMetric metric = SearchMetric::Accuracy;
  std::size_t token_budget = 4096;
};

struct SearchEntry {
  WidthSpec spec;
  double params = 0.0;
  double flops = 0.0;
  double metric = 0.0;
  std::size_t draws = 1;  // times the sampler produced this spec
};

struct SearchReport {
  /// Distinct specs, best metric first.
  std::vector<SearchEntry> ranked;
  std::size_t draws = 0;
  double candidates = 0.0;
  std::size_t top_k = 0;
  double top_mean = 0.0;
  double top_std = 0.0;  // sample standard deviation
  SearchEntry widest;
  bool beats_widest = false;

  /// "mean±std" of the top-k metric values.
  std::string top_summary(int precision = 4) const;
};

/// Draws `n_samples` type-2 specs whose attention widths come from
/// `menu_subset`. Draws are distinct while the candidate space allows it and
/// fall back to sampling with replacement when it is smaller than
/// `n_samples`; each distinct spec is evaluated once on `valid`.
SearchReport random_search_type2(const ParameterStore& store, const Corpus& valid, const SearchOptions& options);

/// One row per ranked spec followed by a summary row.
void write_search_csv(const std::filesystem::path& path, const SearchReport& report);

std::string format_mean_std(double mean, double std, int precision = 4);

}  // namespace scalant
