#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "scalant/model/parameters.hpp"

namespace scalant {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

/// ADAM with bias correction. Only elements that received a gradient are
/// updated; each element keeps its own update count, so the bias correction
/// of a slice first trained late starts from scratch.
class Adam {
 public:
  Adam(const ParameterStore& store, AdamConfig config = {});

  void step(ParameterStore& store, const GradientBuffer& grads, double lr);

  std::size_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  void extend_corrections(std::uint32_t t);

  AdamConfig config_;
  std::vector<double> bias1_, bias2_;  // 1 - beta^t indexed by t
  std::vector<std::vector<double>> m_, v_;
  std::vector<std::vector<std::uint32_t>> count_;
  std::size_t steps_ = 0;
};

}  // namespace scalant
