#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scalant/data/corpus.hpp"
#include "scalant/data/vocab.hpp"
#include "scalant/model/submodel.hpp"

namespace scalant {

struct DistillSettings {
  std::size_t beam = 4;
  double alpha = 0.6;
  double ratio_cap = 20.0;   // max(src, tgt) / min(src, tgt)
  std::size_t len_cap = 250; // applies to source and target alike
  std::size_t max_len = 0;   // decode cap; 0 picks default_max_len per source
};

/// True when both lengths are within `len_cap` and the longer-to-shorter
/// ratio does not exceed `ratio_cap`. An empty side against a non-empty one
/// has an infinite ratio, so only an infinite cap keeps it.
bool passes_filter(std::size_t source_len, std::size_t target_len, double ratio_cap, std::size_t len_cap);

/// Keeps the pairs that pass the caps, in their original order.
Corpus filter_pairs(const Corpus& pairs, double ratio_cap, std::size_t len_cap);

struct DistillCorpus {
  Corpus pairs;
  std::map<std::string, std::string> provenance;

  /// Beam target generated for `source`; throws when that source was filtered out.
  const TokenSeq& target_for(const TokenSeq& source) const;
};

/// Beam-decodes every source with `teacher`, drops pairs outside the caps and
/// records the settings. Throws when nothing survives.
DistillCorpus generate_distill_corpus(const SubModel& teacher, const std::vector<TokenSeq>& sources,
                                      const DistillSettings& settings);

/// Text form: "# key: value" header lines, then one tab-separated pair per
/// line written through `vocab`.
void save_distill_corpus(const std::filesystem::path& path, const DistillCorpus& corpus, const Vocab& vocab);
DistillCorpus load_distill_corpus(const std::filesystem::path& path, const Vocab& vocab);

}  // namespace scalant
