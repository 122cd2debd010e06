#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scalant/data/corpus.hpp"
#include "scalant/model/tokens.hpp"

namespace scalant {

struct Batch {
  TokenBlock source;
  TokenBlock target_in;   // BOS + target
  TokenBlock target_out;  // target + EOS; its lengths mark the scored positions
  std::vector<std::size_t> pair_index;
  std::size_t tokens = 0;  // non-pad source + target tokens
};

/// Source plus target length of one pair, the unit of the token budget.
std::size_t pair_tokens(const Pair& p);

Batch make_batch(const Corpus& corpus, std::span<const std::size_t> indices);

/// Groups pairs of similar length into batches holding at most
/// `token_budget` non-pad tokens each, then shuffles the batch order. The
/// same seed always yields the same batches.
std::vector<Batch> make_batches(const Corpus& corpus, std::size_t token_budget, std::uint64_t seed);

}  // namespace scalant
