#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scalant/core/tensor.hpp"
#include "scalant/model/submodel.hpp"
#include "scalant/model/tokens.hpp"

// Evaluation-mode forward pass without a tape. Produces logits bitwise equal
// to the tape forward with dropout off, and supports step-by-step decoding
// with cached self-attention keys and values.

namespace scalant {

/// Encoder output reduced to what the decoder reads: per decoder layer, the
/// cross-attention keys and values of every source position.
struct EncodedSources {
  std::size_t batch = 0;
  std::size_t len = 0;
  std::vector<std::size_t> lengths;
  std::vector<Tensor> cross_keys;    // (batch * len) x D per decoder layer
  std::vector<Tensor> cross_values;
};

/// Final encoder states, (src.batch * src.len) x C.
Tensor encoder_states(const SubModel& sub, const TokenBlock& src);
EncodedSources encode_sources(const SubModel& sub, const TokenBlock& src);

/// Teacher-forced logits, (tgt_in.batch * tgt_in.len) x N.
Tensor decode_logits(const SubModel& sub, const EncodedSources& enc, const TokenBlock& tgt_in);
Tensor inference_logits(const SubModel& sub, const TokenBlock& src, const TokenBlock& tgt_in);

/// Decodes a set of rows one position at a time. Each row belongs to one
/// encoded source; beam search keeps several rows per source and reorders
/// them with select().
class IncrementalDecoder {
 public:
  IncrementalDecoder(const SubModel& sub, const EncodedSources& enc, std::vector<std::size_t> row_source,
                     std::size_t max_steps);

  std::size_t rows() const noexcept { return row_source_.size(); }
  std::size_t position() const noexcept { return pos_; }
  std::size_t source_of(std::size_t row) const { return row_source_.at(row); }

  /// Feeds one token per row and returns the next-token logits, rows x N.
  Tensor step(std::span<const int> tokens);

  /// Keeps rows `parents` (in that order, repeats allowed) with their caches.
  void select(std::span<const std::size_t> parents);

 private:
  const SubModel* sub_;
  const EncodedSources* enc_;
  std::vector<std::size_t> row_source_;
  std::size_t capacity_;
  std::size_t pos_ = 0;
  Tensor pe_;
  std::vector<Tensor> keys_;    // (rows * capacity) x D per decoder layer
  std::vector<Tensor> values_;
};

}  // namespace scalant
