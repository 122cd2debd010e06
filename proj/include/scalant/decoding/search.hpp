#pragma once

#include <cstddef>
#include <vector>

#include "scalant/model/submodel.hpp"
#include "scalant/model/tokens.hpp"

namespace scalant {

struct Hypothesis {
  TokenSeq tokens;          // emitted tokens, ending in EOS when finished by it
  double log_prob = 0.0;
  bool finished = false;
  double score = 0.0;       // log_prob / length^alpha once finished
};

/// Default output cap: twice the source length plus ten, within max_seq_len.
std::size_t default_max_len(const ModelConfig& config, std::size_t source_len);

/// log_prob / length^alpha.
double length_penalized(double log_prob, std::size_t length, double alpha);

/// `tokens` without a trailing EOS.
TokenSeq strip_eos(const TokenSeq& tokens);

/// Argmax decoding; PAD and BOS are never emitted and ties go to the lowest
/// id. Returns tokens without the final EOS. `max_len` counts emitted tokens
/// including EOS; 0 picks default_max_len.
TokenSeq greedy_decode(const SubModel& sub, const TokenSeq& source, std::size_t max_len = 0);
std::vector<TokenSeq> greedy_decode_batch(const SubModel& sub, const std::vector<TokenSeq>& sources,
                                          std::size_t max_len = 0);

/// Beam search keeping the `beam` best extensions per step. Hypotheses that
/// emit EOS or reach `max_len` tokens are finished and scored with the
/// length penalty; the search stops once no live hypothesis can beat the
/// best finished score.
Hypothesis beam_search(const SubModel& sub, const TokenSeq& source, std::size_t beam, double alpha,
                       std::size_t max_len = 0);
std::vector<Hypothesis> beam_search_batch(const SubModel& sub, const std::vector<TokenSeq>& sources,
                                          std::size_t beam, double alpha, std::size_t max_len = 0);

}  // namespace scalant
