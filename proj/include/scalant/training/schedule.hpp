#pragma once

#include <cstddef>

#include "scalant/core/tensor.hpp"

namespace scalant {

/// Weight of the ground-truth term for sub-models during word-level
/// distillation: 1 - 0.5 j / threshold before the threshold, 0.5 after.
double lambda2(std::size_t iteration, std::size_t threshold);

/// Learning rate for update number `iteration` (counted from 1): a linear
/// ramp from `init_lr` to `max_lr` over `warmup` updates, then
/// max_lr * sqrt(warmup / iteration).
double lr_at(std::size_t iteration, double max_lr, std::size_t warmup, double init_lr = 5e-4);

/// Rows of a one-hot matrix become (1 - eps) on the hot class and
/// eps / (N - 1) elsewhere.
Tensor label_smooth(const Tensor& one_hot, double eps);

}  // namespace scalant
