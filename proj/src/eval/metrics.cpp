#include "scalant/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "scalant/data/batching.hpp"
#include "scalant/model/inference.hpp"

namespace scalant {

namespace {

using NGram = std::vector<int>;

std::map<NGram, std::size_t> ngram_counts(const TokenSeq& s, std::size_t n) {
  std::map<NGram, std::size_t> counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[NGram(s.begin() + i, s.begin() + i + n)];
  return counts;
}

}  // namespace

double bleu(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references, int max_n) {
  if (hypotheses.size() != references.size()) throw Error("BLEU needs one reference per hypothesis");
  if (hypotheses.empty()) throw Error("BLEU of an empty corpus");
  if (max_n < 1) throw Error("BLEU order must be positive");
  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  double hyp_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += static_cast<double>(hypotheses[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (int n = 1; n <= max_n; ++n) {
      const auto hyp = ngram_counts(hypotheses[i], n);
      const auto ref = ngram_counts(references[i], n);
      for (const auto& [gram, count] : hyp) {
        const auto it = ref.find(gram);
        const std::size_t clip = it == ref.end() ? 0 : it->second;
        matched[n - 1] += static_cast<double>(std::min(count, clip));
        total[n - 1] += static_cast<double>(count);
      }
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    if (matched[n] == 0.0 || total[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  const double brevity = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
  return brevity * std::exp(log_sum / max_n);
}

std::size_t argmax(const double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < n; ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

void TokenAccuracyCounter::add(const Tensor& logits, const TokenBlock& labels) {
  const std::size_t n = logits.cols();
  if (logits.rows() != labels.batch * labels.len) throw Error("logits do not match the label block");
  for (std::size_t s = 0; s < labels.batch; ++s) {
    for (std::size_t t = 0; t < labels.lengths[s]; ++t) {
      const std::size_t r = s * labels.len + t;
      const double* row = logits.ptr() + r * n;
      const int label = labels.ids[r];
      if (argmax(row, n) == static_cast<std::size_t>(label)) correct_ += 1.0;
      const double mx = *std::max_element(row, row + n);
      double z = 0.0;
      for (std::size_t c = 0; c < n; ++c) z += std::exp(row[c] - mx);
      nll_ += std::log(z) - (row[label] - mx);
      ++tokens_;
    }
  }
}

TokenAccuracy TokenAccuracyCounter::result() const {
  if (tokens_ == 0) throw Error("token accuracy: no target tokens to score");
  return {correct_ / static_cast<double>(tokens_), nll_ / static_cast<double>(tokens_), tokens_};
}

TokenAccuracy token_accuracy(const SubModel& sub, const Corpus& corpus, std::size_t token_budget) {
  TokenAccuracyCounter counter;
  if (!corpus.empty())
    for (const Batch& b : make_batches(corpus, token_budget, 0))
      counter.add(inference_logits(sub, b.source, b.target_in), b.target_out);
  return counter.result();
}

}  // namespace scalant
