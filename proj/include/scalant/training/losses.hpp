#pragma once

#include <cstddef>
#include <vector>

#include "scalant/core/autodiff.hpp"
#include "scalant/data/batching.hpp"
#include "scalant/model/parameters.hpp"
#include "scalant/model/transformer.hpp"

namespace scalant {

/// Label-smoothed one-hot rows for the positions of `labels` (rows past a
/// sequence's length are left zero).
Tensor hard_targets(const TokenBlock& labels, std::size_t vocab, double label_smoothing);
/// 1 at scored positions, 0 at padding.
Tensor position_weights(const TokenBlock& labels);
/// Row softmax of the widest model's logits, used as a constant target.
Tensor teacher_distribution(const Tensor& logits);

/// How sampled sub-models are supervised: `hard` weighs the cross-entropy
/// against the batch targets, `soft` the cross-entropy against the widest
/// model's predictions. The teacher term is only formed when `teacher` is set.
struct SubModelWeights {
  double hard = 1.0;
  double soft = 0.0;
  bool teacher = false;
};

SubModelWeights stage1_weights();
SubModelWeights stage2_weights(double lambda2);
SubModelWeights stage3_weights(double lambda3);

struct LossTerms {
  ad::Var total;
  double widest = 0.0;
  std::vector<double> sub_hard;
  std::vector<double> sub_soft;
};

/// Widest cross-entropy against the batch targets plus, for each sampled
/// spec, hard * CE(targets) + soft * CE(teacher). All models are recorded on
/// the binding's tape. Each cross-entropy is summed over scored positions and
/// divided by `denominator` (0: the batch's own scored-token count).
LossTerms distillation_loss(TapeBinding& params, const Batch& batch, const std::vector<WidthSpec>& sampled,
                            SubModelWeights weights, double label_smoothing, ForwardMode mode,
                            double denominator = 0.0);

LossTerms stage1_loss(TapeBinding& params, const Batch& batch, const std::vector<WidthSpec>& sampled,
                      double label_smoothing, ForwardMode mode = {});
LossTerms stage2_loss(TapeBinding& params, const Batch& batch, const std::vector<WidthSpec>& sampled,
                      double lambda2, double label_smoothing, ForwardMode mode = {});
/// `batch` targets must be the beam-decoded distillation targets.
LossTerms stage3_loss(TapeBinding& params, const Batch& batch, const std::vector<WidthSpec>& sampled,
                      double lambda3, double label_smoothing, ForwardMode mode = {});

/// Same loss as distillation_loss, evaluated one model per tape so that only
/// one graph is alive at a time. Adds the gradients into `grads` and returns
/// the loss value.
double accumulate_gradients(const ParameterStore& store, const Batch& batch, const std::vector<WidthSpec>& sampled,
                            SubModelWeights weights, double label_smoothing, Rng& rng, double denominator,
                            GradientBuffer& grads, std::vector<double>* per_model = nullptr);

}  // namespace scalant
