#include "scalant/model/parameters.hpp"

#include <cmath>
#include <cstring>

#include "scalant/core/rng.hpp"

namespace scalant {

ParameterStore::ParameterStore(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t m = config_.max_width;

  layout_.embedding = add("embed", {config_.vocab_size, m}, CropRole::Embedding, -1);
  layout_.proj_in_weight = add("proj_in.weight", {m, m}, CropRole::ProjInWeight, -1);
  layout_.proj_in_bias = add("proj_in.bias", {m}, CropRole::ProjInBias, -1);
  layout_.proj_out_weight = add("proj_out.weight", {m, m}, CropRole::ProjOutWeight, -1);
  layout_.proj_out_bias = add("proj_out.bias", {m}, CropRole::ProjOutBias, -1);

  int layer = 0;
  for (std::size_t i = 0; i < config_.n_encoder_layers; ++i, ++layer) {
    const std::string p = "enc." + std::to_string(i) + ".";
    EncoderLayerParams l{};
    add_attention(p + "self_attn.", layer, l.self_attn);
    add_norm(p + "norm1.", layer, l.norm1);
    add_ffn(p + "ffn.", layer, l.ffn);
    add_norm(p + "norm2.", layer, l.norm2);
    layout_.encoder.push_back(l);
  }
  for (std::size_t i = 0; i < config_.n_decoder_layers; ++i, ++layer) {
    const std::string p = "dec." + std::to_string(i) + ".";
    DecoderLayerParams l{};
    add_attention(p + "self_attn.", layer, l.self_attn);
    add_norm(p + "norm1.", layer, l.norm1);
    add_attention(p + "cross_attn.", layer, l.cross_attn);
    add_norm(p + "norm2.", layer, l.norm2);
    add_ffn(p + "ffn.", layer, l.ffn);
    add_norm(p + "norm3.", layer, l.norm3);
    layout_.decoder.push_back(l);
  }
}

std::size_t ParameterStore::add(std::string name, Shape shape, CropRole role, int layer) {
  const std::size_t id = values_.size();
  by_name_.emplace(name, id);
  values_.emplace_back(shape);
  infos_.push_back(ParamInfo{std::move(name), std::move(shape), role, layer});
  return id;
}

std::size_t ParameterStore::add_attention(const std::string& prefix, int layer, AttentionParams& out) {
  const std::size_t m = config_.max_width;
  out.q_weight = add(prefix + "query.weight", {m, m}, CropRole::AttnInWeight, layer);
  out.q_bias = add(prefix + "query.bias", {m}, CropRole::AttnInBias, layer);
  out.k_weight = add(prefix + "key.weight", {m, m}, CropRole::AttnInWeight, layer);
  out.k_bias = add(prefix + "key.bias", {m}, CropRole::AttnInBias, layer);
  out.v_weight = add(prefix + "value.weight", {m, m}, CropRole::AttnInWeight, layer);
  out.v_bias = add(prefix + "value.bias", {m}, CropRole::AttnInBias, layer);
  out.out_weight = add(prefix + "out.weight", {m, m}, CropRole::AttnOutWeight, layer);
  out.out_bias = add(prefix + "out.bias", {m}, CropRole::WidthVector, layer);
  return out.q_weight;
}

void ParameterStore::add_norm(const std::string& prefix, int layer, NormParams& out) {
  const std::size_t m = config_.max_width;
  out.gain = add(prefix + "gain", {m}, CropRole::WidthVector, layer);
  out.bias = add(prefix + "bias", {m}, CropRole::WidthVector, layer);
  for (auto& g : values_[out.gain].data()) g = 1.0;
}

void ParameterStore::add_ffn(const std::string& prefix, int layer, FfnParams& out) {
  const std::size_t m = config_.max_width;
  const std::size_t f = config_.ffn_multiplier * m;
  out.in_weight = add(prefix + "in.weight", {m, f}, CropRole::FfnInWeight, layer);
  out.in_bias = add(prefix + "in.bias", {f}, CropRole::FfnInBias, layer);
  out.out_weight = add(prefix + "out.weight", {f, m}, CropRole::FfnOutWeight, layer);
  out.out_bias = add(prefix + "out.bias", {m}, CropRole::WidthVector, layer);
}

ParameterStore ParameterStore::initialized(ModelConfig config, std::uint64_t seed) {
  ParameterStore store(std::move(config));
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(store.config_.max_width));
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (store.values_[i].rank() != 2) continue;
    for (auto& v : store.values_[i].data()) v = rng.uniform(-bound, bound);
  }
  return store;
}

std::size_t ParameterStore::index(std::string_view name) const {
  const auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw Error("no parameter named '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Block ParameterStore::active_block(std::size_t i, const WidthSpec& spec) const {
  const ParamInfo& p = infos_.at(i);
  const std::size_t m = config_.max_width;
  const std::size_t c = spec.io_width;
  const std::size_t d = p.layer >= 0 ? spec.attn_widths.at(static_cast<std::size_t>(p.layer)) : 0;
  const std::size_t f = config_.ffn_multiplier * d;
  switch (p.role) {
    case CropRole::Embedding: return {config_.vocab_size, m};
    case CropRole::ProjInWeight: return {m, c};
    case CropRole::ProjInBias: return {1, c};
    case CropRole::ProjOutWeight: return {c, m};
    case CropRole::ProjOutBias: return {1, m};
    case CropRole::AttnInWeight: return {c, d};
    case CropRole::AttnInBias: return {1, d};
    case CropRole::AttnOutWeight: return {d, c};
    case CropRole::FfnInWeight: return {c, f};
    case CropRole::FfnInBias: return {1, f};
    case CropRole::FfnOutWeight: return {f, c};
    case CropRole::WidthVector: return {1, c};
  }
  throw Error("unknown crop role");
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (!(a.config_ == b.config_) || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.infos_[i].name != b.infos_[i].name) return false;
    if (!bitwise_equal(a.values_[i], b.values_[i])) return false;
  }
  return true;
}

GradientBuffer::GradientBuffer(const ParameterStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    grads_.emplace_back(store.value(i).shape());
    touched_.emplace_back(store.value(i).size(), 0);
  }
  any_.assign(store.size(), 0);
}

void GradientBuffer::reset() {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (!any_[i]) continue;
    std::fill(grads_[i].data().begin(), grads_[i].data().end(), 0.0);
    std::fill(touched_[i].begin(), touched_[i].end(), 0);
    any_[i] = 0;
  }
}

void GradientBuffer::add_block(std::size_t i, Block block, std::span<const double> g) {
  Tensor& dst = grads_.at(i);
  if (g.size() != block.size()) throw Error("gradient block size mismatch");
  const std::size_t full_cols = dst.cols();
  const std::size_t full_rows = dst.rank() == 1 ? 1 : dst.rows();
  if (block.rows > full_rows || block.cols > full_cols) throw Error("gradient block exceeds parameter shape");
  auto& mask = touched_[i];
  for (std::size_t r = 0; r < block.rows; ++r) {
    double* row = dst.ptr() + r * full_cols;
    const double* src = g.data() + r * block.cols;
    for (std::size_t c = 0; c < block.cols; ++c) row[c] += src[c];
    std::memset(mask.data() + r * full_cols, 1, block.cols);
  }
  any_[i] = 1;
}

void GradientBuffer::scale(double factor) {
  for (std::size_t i = 0; i < grads_.size(); ++i)
    if (any_[i])
      for (auto& v : grads_[i].data()) v *= factor;
}

}  // namespace scalant
