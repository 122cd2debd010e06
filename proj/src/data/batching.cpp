#include "scalant/data/batching.hpp"

#include <algorithm>
#include <numeric>

#include "scalant/core/rng.hpp"
#include "scalant/core/tensor.hpp"

namespace scalant {

std::size_t pair_tokens(const Pair& p) { return p.source.size() + p.target.size(); }

Batch make_batch(const Corpus& corpus, std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error("empty batch");
  std::vector<TokenSeq> src, tgt;
  Batch b;
  for (auto i : indices) {
    const Pair& p = corpus.at(i);
    if (p.source.empty()) throw Error("pair " + std::to_string(i) + " has an empty source");
    src.push_back(p.source);
    tgt.push_back(p.target);
    b.tokens += pair_tokens(p);
  }
  b.source = TokenBlock::from_sequences(src);
  b.target_in = decoder_input(tgt);
  b.target_out = decoder_labels(tgt);
  b.pair_index.assign(indices.begin(), indices.end());
  return b;
}

std::vector<Batch> make_batches(const Corpus& corpus, std::size_t token_budget, std::uint64_t seed) {
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (pair_tokens(corpus[i]) > token_budget)
      throw Error("pair " + std::to_string(i) + " has " + std::to_string(pair_tokens(corpus[i])) +
                  " tokens, more than the batch budget " + std::to_string(token_budget));
  Rng rng(seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = corpus[a];
    const auto& pb = corpus[b];
    if (pa.source.size() != pb.source.size()) return pa.source.size() < pb.source.size();
    return pa.target.size() < pb.target.size();
  });

  std::vector<Batch> batches;
  std::vector<std::size_t> current;
  std::size_t used = 0;
  for (auto i : order) {
    const std::size_t t = pair_tokens(corpus[i]);
    if (!current.empty() && used + t > token_budget) {
      batches.push_back(make_batch(corpus, current));
      current.clear();
      used = 0;
    }
    current.push_back(i);
    used += t;
  }
  if (!current.empty()) batches.push_back(make_batch(corpus, current));
  rng.shuffle(batches);
  return batches;
}

}  // namespace scalant
