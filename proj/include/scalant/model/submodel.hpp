#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scalant/core/rng.hpp"
#include "scalant/core/tensor.hpp"
#include "scalant/model/config.hpp"
#include "scalant/model/parameters.hpp"

namespace scalant {

/// A sub-Transformer: a width spec over a borrowed ParameterStore. Holds no
/// weights of its own, so it must not outlive the store.
class SubModel {
 public:
  SubModel(const ParameterStore& store, WidthSpec spec);

  const ParameterStore& store() const noexcept { return *store_; }
  const ModelConfig& config() const noexcept { return store_->config(); }
  const ParamLayout& layout() const noexcept { return store_->layout(); }
  const WidthSpec& spec() const noexcept { return spec_; }

  std::size_t io_width() const noexcept { return spec_.io_width; }
  /// Attention width of global layer `layer` (encoder layers come first).
  std::size_t attn_width(std::size_t layer) const { return spec_.attn_widths.at(layer); }
  std::size_t heads(std::size_t layer) const { return attn_width(layer) / config().head_dim; }
  double dropout() const noexcept { return dropout_; }

  Block block(std::size_t param) const { return store_->active_block(param, spec_); }
  ConstMatrixView view(std::size_t param) const;

  /// Number of stored scalars this sub-model reads.
  std::size_t active_parameter_count() const;

 private:
  const ParameterStore* store_;
  WidthSpec spec_;
  double dropout_;
};

SubModel materialize(const ParameterStore& store, const WidthSpec& spec);

/// One random spec. Type-1 draws a single width for every layer; type-2 fixes
/// the io width at max_width and draws each layer width independently. An
/// empty `menu` means the config's full menu.
WidthSpec sample_submodel(const ModelConfig& config, Variant variant, Rng& rng,
                          std::span<const std::size_t> menu = {});

/// Up to `n` distinct specs, none equal to the widest one. Returns fewer when
/// the variant has fewer candidates.
std::vector<WidthSpec> sample_distinct_submodels(const ModelConfig& config, Variant variant, std::size_t n,
                                                 Rng& rng);

/// Number of distinct specs the sampler can emit over `menu_size` widths.
double candidate_count(Variant variant, std::size_t menu_size, std::size_t n_layers);

}  // namespace scalant
