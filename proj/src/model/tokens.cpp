#include "scalant/model/tokens.hpp"

#include <algorithm>

#include "scalant/core/tensor.hpp"
#include "scalant/model/config.hpp"

namespace scalant {

TokenBlock TokenBlock::from_sequences(const std::vector<TokenSeq>& seqs) {
  TokenBlock b;
  b.batch = seqs.size();
  for (const auto& s : seqs) {
    if (s.empty()) throw Error("empty token sequence in batch");
    b.len = std::max(b.len, s.size());
    b.lengths.push_back(s.size());
  }
  b.ids.assign(b.batch * b.len, kPad);
  for (std::size_t i = 0; i < seqs.size(); ++i) std::copy(seqs[i].begin(), seqs[i].end(), b.ids.begin() + i * b.len);
  return b;
}

std::size_t TokenBlock::token_count() const {
  std::size_t n = 0;
  for (auto l : lengths) n += l;
  return n;
}

TokenBlock decoder_input(const std::vector<TokenSeq>& targets) {
  std::vector<TokenSeq> seqs;
  seqs.reserve(targets.size());
  for (const auto& t : targets) {
    TokenSeq s{kBos};
    s.insert(s.end(), t.begin(), t.end());
    seqs.push_back(std::move(s));
  }
  return TokenBlock::from_sequences(seqs);
}

TokenBlock decoder_labels(const std::vector<TokenSeq>& targets) {
  std::vector<TokenSeq> seqs;
  seqs.reserve(targets.size());
  for (const auto& t : targets) {
    TokenSeq s(t);
    s.push_back(kEos);
    seqs.push_back(std::move(s));
  }
  return TokenBlock::from_sequences(seqs);
}

}  // namespace scalant
