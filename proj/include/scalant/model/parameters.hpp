#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scalant/core/tensor.hpp"
#include "scalant/model/config.hpp"

namespace scalant {

/// How a stored tensor is cropped for a sub-model. C is the io width, D the
/// attention width of the owning layer and F = ffn_multiplier * D.
enum class CropRole {
  Embedding,      // N x M, never cropped
  ProjInWeight,   // M x M -> M x C
  ProjInBias,     // M -> C
  ProjOutWeight,  // M x M -> C x M
  ProjOutBias,    // M, never cropped
  AttnInWeight,   // M x M -> C x D (query, key, value)
  AttnInBias,     // M -> D
  AttnOutWeight,  // M x M -> D x C
  FfnInWeight,    // M x FM -> C x F
  FfnInBias,      // FM -> F
  FfnOutWeight,   // FM x M -> F x C
  WidthVector,    // M -> C (output biases and layer-norm gain/bias)
};

struct ParamInfo {
  std::string name;
  Shape shape;
  CropRole role;
  /// Global layer index (encoder layers first) or -1 for model-level tensors.
  int layer;
};

struct AttentionParams {
  std::size_t q_weight, q_bias, k_weight, k_bias, v_weight, v_bias, out_weight, out_bias;
};
struct NormParams {
  std::size_t gain, bias;
};
struct FfnParams {
  std::size_t in_weight, in_bias, out_weight, out_bias;
};
struct EncoderLayerParams {
  AttentionParams self_attn;
  NormParams norm1;
  FfnParams ffn;
  NormParams norm2;
};
struct DecoderLayerParams {
  AttentionParams self_attn;
  NormParams norm1;
  AttentionParams cross_attn;
  NormParams norm2;
  FfnParams ffn;
  NormParams norm3;
};

/// Indices of every tensor in a ParameterStore, grouped by role in the
/// network.
struct ParamLayout {
  std::size_t embedding;
  std::size_t proj_in_weight, proj_in_bias;
  std::size_t proj_out_weight, proj_out_bias;
  std::vector<EncoderLayerParams> encoder;
  std::vector<DecoderLayerParams> decoder;
};

/// Active block of a stored tensor: rank-1 tensors use rows == 1.
struct Block {
  std::size_t rows, cols;
  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const Block&) const = default;
};

/// The widest Transformer's weights. Sub-models never own storage; they read
/// and write top-left blocks of these tensors.
class ParameterStore {
 public:
  /// All tensors zero, layer-norm gains one.
  explicit ParameterStore(ModelConfig config);

  /// Matrices uniform in +-1/sqrt(max_width), biases zero, layer-norm gains one.
  static ParameterStore initialized(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const ParamLayout& layout() const noexcept { return layout_; }

  std::size_t size() const noexcept { return values_.size(); }
  const ParamInfo& info(std::size_t i) const { return infos_.at(i); }
  Tensor& value(std::size_t i) { return values_.at(i); }
  const Tensor& value(std::size_t i) const { return values_.at(i); }

  std::size_t index(std::string_view name) const;
  Tensor& at(std::string_view name) { return values_[index(name)]; }
  const Tensor& at(std::string_view name) const { return values_[index(name)]; }

  std::size_t scalar_count() const;

  /// Block of tensor `i` used by the sub-model with widths `spec`.
  Block active_block(std::size_t i, const WidthSpec& spec) const;

  /// Same configuration, names and bitwise-equal values.
  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  std::size_t add(std::string name, Shape shape, CropRole role, int layer);
  std::size_t add_attention(const std::string& prefix, int layer, AttentionParams& out);
  void add_norm(const std::string& prefix, int layer, NormParams& out);
  void add_ffn(const std::string& prefix, int layer, FfnParams& out);

  ModelConfig config_;
  ParamLayout layout_{};
  std::vector<ParamInfo> infos_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

/// Dense gradients shaped like a ParameterStore, with a per-element record of
/// which entries received any contribution since the last reset.
class GradientBuffer {
 public:
  explicit GradientBuffer(const ParameterStore& store);

  void reset();

  /// grad[i][:rows, :cols] += g, where g is a dense rows x cols block.
  void add_block(std::size_t i, Block block, std::span<const double> g);
  void scale(double factor);

  std::size_t size() const noexcept { return grads_.size(); }
  const Tensor& grad(std::size_t i) const { return grads_.at(i); }
  std::span<const std::uint8_t> touched(std::size_t i) const { return touched_.at(i); }
  bool any_touched(std::size_t i) const { return any_.at(i) != 0; }

 private:
  std::vector<Tensor> grads_;
  std::vector<std::vector<std::uint8_t>> touched_;
  std::vector<std::uint8_t> any_;
};

}  // namespace scalant
