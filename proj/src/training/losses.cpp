#include "scalant/training/losses.hpp"

#include "scalant/core/kernels.hpp"
#include "scalant/training/schedule.hpp"

namespace scalant {

Tensor hard_targets(const TokenBlock& labels, std::size_t vocab, double label_smoothing) {
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw Error("label smoothing must lie in [0, 1)");
  Tensor out({labels.batch * labels.len, vocab});
  const double off = label_smoothing / static_cast<double>(vocab - 1);
  for (std::size_t b = 0; b < labels.batch; ++b) {
    for (std::size_t t = 0; t < labels.lengths[b]; ++t) {
      const std::size_t r = b * labels.len + t;
      const int id = labels.ids[r];
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) throw Error("target id out of vocabulary");
      double* row = out.ptr() + r * vocab;
      if (label_smoothing > 0.0)
        for (std::size_t c = 0; c < vocab; ++c) row[c] = off;
      row[id] = 1.0 - label_smoothing;
    }
  }
  return out;
}

Tensor position_weights(const TokenBlock& labels) {
  Tensor w({labels.batch * labels.len});
  for (std::size_t b = 0; b < labels.batch; ++b)
    for (std::size_t t = 0; t < labels.lengths[b]; ++t) w[b * labels.len + t] = 1.0;
  return w;
}

Tensor teacher_distribution(const Tensor& logits) {
  Tensor p(logits.shape());
  kernels::softmax_rows(logits.ptr(), p.ptr(), logits.rows(), logits.cols());
  return p;
}

SubModelWeights stage1_weights() { return {1.0, 0.0}; }
SubModelWeights stage2_weights(double l2) { return {l2, 1.0 - l2, true}; }
SubModelWeights stage3_weights(double l3) {
  if (!(l3 >= 0.0 && l3 <= 1.0)) throw Error("lambda3 must lie in [0, 1]");
  return {l3, 1.0 - l3, true};
}

LossTerms distillation_loss(TapeBinding& params, const Batch& batch, const std::vector<WidthSpec>& sampled,
                            SubModelWeights weights, double label_smoothing, ForwardMode mode,
                            double denominator) {
  const ParameterStore& store = params.store();
  const std::size_t vocab = store.config().vocab_size;
  const Tensor targets = hard_targets(batch.target_out, vocab, label_smoothing);
  const Tensor mask = position_weights(batch.target_out);
  const double denom = denominator > 0.0 ? denominator : static_cast<double>(batch.target_out.token_count());

  const SubModel widest(store, WidthSpec::widest(store.config()));
  ad::Var widest_logits = forward_logits(params, widest, batch.source, batch.target_in, mode);
  LossTerms terms;
  terms.total = ad::cross_entropy(widest_logits, targets, mask, denom);
  terms.widest = terms.total.value()[0];

  Tensor teacher;
  if (weights.teacher) teacher = teacher_distribution(widest_logits.value());

  for (const auto& spec : sampled) {
    const SubModel sub(store, spec);
    ad::Var logits = forward_logits(params, sub, batch.source, batch.target_in, mode);
    ad::Var hard = ad::cross_entropy(logits, targets, mask, denom);
    terms.sub_hard.push_back(hard.value()[0]);
    ad::Var term = ad::scale(hard, weights.hard);
    if (weights.teacher) {
      ad::Var soft = ad::cross_entropy(logits, teacher, mask, denom);
      terms.sub_soft.push_back(soft.value()[0]);
      term = ad::add(term, ad::scale(soft, weights.soft));
    }
    terms.total = ad::add(terms.total, term);
  }
  return terms;
}

LossTerms stage1_loss(TapeBinding& params, const Batch& batch, const std::vector<WidthSpec>& sampled,
                      double label_smoothing, ForwardMode mode) {
  return distillation_loss(params, batch, sampled, stage1_weights(), label_smoothing, mode);
}

LossTerms stage2_loss(TapeBinding& params, const Batch& batch, const std::vector<WidthSpec>& sampled, double l2,
                      double label_smoothing, ForwardMode mode) {
  return distillation_loss(params, batch, sampled, stage2_weights(l2), label_smoothing, mode);
}

LossTerms stage3_loss(TapeBinding& params, const Batch& batch, const std::vector<WidthSpec>& sampled, double l3,
                      double label_smoothing, ForwardMode mode) {
  return distillation_loss(params, batch, sampled, stage3_weights(l3), label_smoothing, mode);
}

double accumulate_gradients(const ParameterStore& store, const Batch& batch, const std::vector<WidthSpec>& sampled,
                            SubModelWeights weights, double label_smoothing, Rng& rng, double denominator,
                            GradientBuffer& grads, std::vector<double>* per_model) {
  const std::size_t vocab = store.config().vocab_size;
  const Tensor targets = hard_targets(batch.target_out, vocab, label_smoothing);
  const Tensor mask = position_weights(batch.target_out);
  const ForwardMode mode{true, &rng};
  if (per_model) per_model->clear();

  Tensor teacher;
  double total = 0.0;
  {
    ad::Tape tape;
    tape.set_retain_grads(false);
    TapeBinding params(tape, store);
    const SubModel widest(store, WidthSpec::widest(store.config()));
    ad::Var logits = forward_logits(params, widest, batch.source, batch.target_in, mode);
    ad::Var loss = ad::cross_entropy(logits, targets, mask, denominator);
    if (weights.teacher) teacher = teacher_distribution(logits.value());
    tape.backward(loss);
    params.collect(grads);
    total += loss.value()[0];
    if (per_model) per_model->push_back(loss.value()[0]);
  }
  for (const auto& spec : sampled) {
    ad::Tape tape;
    tape.set_retain_grads(false);
    TapeBinding params(tape, store);
    const SubModel sub(store, spec);
    ad::Var logits = forward_logits(params, sub, batch.source, batch.target_in, mode);
    ad::Var loss = ad::scale(ad::cross_entropy(logits, targets, mask, denominator), weights.hard);
    if (weights.teacher)
      loss = ad::add(loss, ad::scale(ad::cross_entropy(logits, teacher, mask, denominator), weights.soft));
    tape.backward(loss);
    params.collect(grads);
    total += loss.value()[0];
    if (per_model) per_model->push_back(loss.value()[0]);
  }
  return total;
}

}  // namespace scalant
