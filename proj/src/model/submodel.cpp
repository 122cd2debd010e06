#include "scalant/model/submodel.hpp"

#include <algorithm>
#include <cmath>

namespace scalant {

SubModel::SubModel(const ParameterStore& store, WidthSpec spec) : store_(&store), spec_(std::move(spec)) {
  spec_.validate(store.config());
  dropout_ = dropout_rate(store.config(), spec_);
}

ConstMatrixView SubModel::view(std::size_t param) const {
  const Block b = block(param);
  return crop_matrix(store_->value(param), b.rows, b.cols);
}

std::size_t SubModel::active_parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < store_->size(); ++i) n += block(i).size();
  return n;
}

SubModel materialize(const ParameterStore& store, const WidthSpec& spec) { return SubModel(store, spec); }

WidthSpec sample_submodel(const ModelConfig& config, Variant variant, Rng& rng, std::span<const std::size_t> menu) {
  if (menu.empty()) menu = config.width_menu;
  for (auto w : menu)
    if (!config.in_menu(w)) throw Error("sampling menu width " + std::to_string(w) + " is not in the model menu");
  const std::size_t n_layers = config.n_layers();
  if (variant == Variant::Type1) return WidthSpec::uniform(menu[rng.index(menu.size())], n_layers);
  WidthSpec spec;
  spec.io_width = config.max_width;
  spec.attn_widths.reserve(n_layers);
  for (std::size_t i = 0; i < n_layers; ++i) spec.attn_widths.push_back(menu[rng.index(menu.size())]);
  return spec;
}

double candidate_count(Variant variant, std::size_t menu_size, std::size_t n_layers) {
  if (variant == Variant::Type1) return static_cast<double>(menu_size);
  return std::pow(static_cast<double>(menu_size), static_cast<double>(n_layers));
}

std::vector<WidthSpec> sample_distinct_submodels(const ModelConfig& config, Variant variant, std::size_t n,
                                                 Rng& rng) {
  const WidthSpec widest = WidthSpec::widest(config);
  const double available = candidate_count(variant, config.width_menu.size(), config.n_layers()) - 1.0;
  const std::size_t target = static_cast<std::size_t>(std::min(static_cast<double>(n), available));
  std::vector<WidthSpec> out;
  while (out.size() < target) {
    WidthSpec s = sample_submodel(config, variant, rng);
    if (s == widest || std::find(out.begin(), out.end(), s) != out.end()) continue;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace scalant
