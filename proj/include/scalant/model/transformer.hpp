#pragma once

#include <cstddef>
#include <map>
#include <utility>

#include "scalant/core/autodiff.hpp"
#include "scalant/core/rng.hpp"
#include "scalant/model/parameters.hpp"
#include "scalant/model/submodel.hpp"
#include "scalant/model/tokens.hpp"

namespace scalant {

/// Sinusoidal position table of `len` rows at `width` channels.
Tensor positional_encoding(std::size_t len, std::size_t width);

/// Places cropped parameter blocks on a tape as leaves and routes their
/// gradients back into full-size buffers. Several sub-models may share one
/// binding; each distinct block becomes one leaf.
class TapeBinding {
 public:
  TapeBinding(ad::Tape& tape, const ParameterStore& store, bool trainable = true);

  ad::Tape& tape() const noexcept { return *tape_; }
  const ParameterStore& store() const noexcept { return *store_; }

  ad::Var get(std::size_t param, Block block);

  /// Adds the gradient of every bound leaf into `grads` after tape.backward().
  void collect(GradientBuffer& grads) const;

 private:
  ad::Tape* tape_;
  const ParameterStore* store_;
  bool trainable_;
  std::map<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>, ad::Var> leaves_;
};

struct ForwardMode {
  bool training = false;
  Rng* rng = nullptr;  // required when training with a nonzero dropout rate
};

/// Encoder states, (src.batch * src.len) x C.
ad::Var encode(TapeBinding& params, const SubModel& sub, const TokenBlock& src, ForwardMode mode);

/// Next-token logits for every decoder input position, (tgt_in.batch * tgt_in.len) x N.
ad::Var decode(TapeBinding& params, const SubModel& sub, ad::Var memory, const TokenBlock& src,
               const TokenBlock& tgt_in, ForwardMode mode);

ad::Var forward_logits(TapeBinding& params, const SubModel& sub, const TokenBlock& src, const TokenBlock& tgt_in,
                       ForwardMode mode);

}  // namespace scalant
