#include "scalant/training/adam.hpp"

#include <cmath>

namespace scalant {

Adam::Adam(const ParameterStore& store, AdamConfig config) : config_(config) {
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0))
    throw Error("ADAM betas must lie in [0, 1)");
  if (!(config.eps > 0.0)) throw Error("ADAM epsilon must be positive");
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::size_t n = store.value(i).size();
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
    count_.emplace_back(n, 0u);
  }
}

void Adam::step(ParameterStore& store, const GradientBuffer& grads, double lr) {
  if (grads.size() != store.size() || store.size() != m_.size()) throw Error("ADAM: parameter count mismatch");
  const double b1 = config_.beta1, b2 = config_.beta2;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!grads.any_touched(i)) continue;
    auto param = store.value(i).data();
    const auto g = grads.grad(i).data();
    const auto touched = grads.touched(i);
    if (g.size() != param.size()) throw Error("ADAM: gradient shape mismatch for " + store.info(i).name);
    auto& m = m_[i];
    auto& v = v_[i];
    auto& count = count_[i];
    for (std::size_t e = 0; e < param.size(); ++e) {
      if (!touched[e]) continue;
      const std::uint32_t t = ++count[e];
      m[e] = b1 * m[e] + (1.0 - b1) * g[e];
      v[e] = b2 * v[e] + (1.0 - b2) * g[e] * g[e];
      if (t >= bias1_.size()) extend_corrections(t);
      const double m_hat = m[e] / bias1_[t];
      const double v_hat = v[e] / bias2_[t];
      param[e] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
  ++steps_;
}

void Adam::extend_corrections(std::uint32_t t) {
  while (bias1_.size() <= t) {
    const double k = static_cast<double>(bias1_.size());
    bias1_.push_back(1.0 - std::pow(config_.beta1, k));
    bias2_.push_back(1.0 - std::pow(config_.beta2, k));
  }
}

}  // namespace scalant
