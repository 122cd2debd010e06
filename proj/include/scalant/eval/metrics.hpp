#pragma once

#include <cstddef>
#include <vector>

#include "scalant/core/tensor.hpp"
#include "scalant/data/corpus.hpp"
#include "scalant/model/submodel.hpp"
#include "scalant/model/tokens.hpp"

namespace scalant {

/// Corpus BLEU in [0, 1]: brevity penalty times the geometric mean of the
/// clipped n-gram precisions for n = 1..max_n. Any zero precision gives 0.
double bleu(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references, int max_n = 4);

struct TokenAccuracy {
  double accuracy = 0.0;  // fraction of target tokens (and final EOS) predicted by argmax
  double nll = 0.0;       // mean negative log-likelihood per scored token
  std::size_t tokens = 0;
};

/// Running totals over batches of teacher-forced logits. Rows follow the
/// layout of `labels`; only the first lengths[b] positions of each row count.
class TokenAccuracyCounter {
 public:
  void add(const Tensor& logits, const TokenBlock& labels);
  /// Throws when nothing has been scored.
  TokenAccuracy result() const;

 private:
  double correct_ = 0.0;
  double nll_ = 0.0;
  std::size_t tokens_ = 0;
};

/// Teacher-forced evaluation of `sub` on `corpus`. Throws when there is
/// nothing to score.
TokenAccuracy token_accuracy(const SubModel& sub, const Corpus& corpus, std::size_t token_budget = 4096);

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(const double* row, std::size_t n);

}  // namespace scalant
