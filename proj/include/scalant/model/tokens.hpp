#pragma once

#include <cstddef>
#include <vector>

namespace scalant {

using TokenSeq = std::vector<int>;

/// A batch of token sequences padded to a common length.
struct TokenBlock {
  std::size_t batch = 0;
  std::size_t len = 0;
  std::vector<int> ids;               // batch * len, padded with kPad
  std::vector<std::size_t> lengths;   // unpadded length of each sequence

  static TokenBlock from_sequences(const std::vector<TokenSeq>& seqs);

  int at(std::size_t b, std::size_t t) const { return ids[b * len + t]; }
  std::size_t token_count() const;
};

/// Decoder input: BOS followed by the target.
TokenBlock decoder_input(const std::vector<TokenSeq>& targets);
/// Decoder labels aligned with decoder_input: the target followed by EOS.
TokenBlock decoder_labels(const std::vector<TokenSeq>& targets);

}  // namespace scalant
