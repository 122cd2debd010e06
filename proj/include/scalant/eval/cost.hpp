#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "scalant/model/config.hpp"

namespace scalant {

struct CostReport {
  WidthSpec spec;
  double params = 0.0;
  double flops = 0.0;
  /// FLOPs per component: "embedding", "encoder", "decoder", "output".
  std::map<std::string, double> flops_breakdown;
};

/// Active scalars of the sub-model. With projections the embedding keeps its
/// full N x M_max size and both projection maps are counted; without them the
/// embedding is taken at the io width and no projection exists, which is how
/// a standalone model of that width would be built.
double count_params(const ModelConfig& config, const WidthSpec& spec, bool include_projections = true);

/// Forward-pass FLOPs of one teacher-forced pass over a source of `src_len`
/// and a target of `tgt_len` tokens. A multiply-accumulate counts as 2 FLOPs;
/// bias adds, residual adds, activations, scaling, normalization and softmax
/// count 1 FLOP per element.
double estimate_flops(const ModelConfig& config, const WidthSpec& spec, std::size_t src_len = 20,
                      std::size_t tgt_len = 20);

CostReport cost_report(const ModelConfig& config, const WidthSpec& spec, std::size_t src_len = 20,
                       std::size_t tgt_len = 20);

}  // namespace scalant
