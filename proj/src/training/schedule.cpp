#include "scalant/training/schedule.hpp"

#include <cmath>
#include <string>

namespace scalant {

double lambda2(std::size_t iteration, std::size_t threshold) {
  if (threshold == 0) throw Error("lambda2 threshold must be positive");
  if (iteration >= threshold) return 0.5;
  return 1.0 - 0.5 * static_cast<double>(iteration) / static_cast<double>(threshold);
}

double lr_at(std::size_t iteration, double max_lr, std::size_t warmup, double init_lr) {
  if (iteration == 0) throw Error("learning-rate iterations are counted from 1");
  if (warmup == 0) throw Error("warmup must be at least one iteration");
  const double j = static_cast<double>(iteration);
  const double w = static_cast<double>(warmup);
  if (iteration < warmup) return init_lr + (max_lr - init_lr) * j / w;
  return max_lr * std::sqrt(w) / std::sqrt(j);
}

Tensor label_smooth(const Tensor& one_hot, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw Error("label smoothing must lie in [0, 1)");
  const std::size_t rows = one_hot.rows(), n = one_hot.cols();
  if (n < 2) throw Error("label smoothing needs at least two classes");
  Tensor out(one_hot.shape());
  const double off = eps / static_cast<double>(n - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t hot = n, ones = 0;
    for (std::size_t c = 0; c < n; ++c) {
      const double v = one_hot[r * n + c];
      if (v == 1.0) {
        hot = c;
        ++ones;
      } else if (v != 0.0) {
        throw Error("label_smooth: row " + std::to_string(r) + " is not one-hot");
      }
    }
    if (ones != 1) throw Error("label_smooth: row " + std::to_string(r) + " is not one-hot");
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = c == hot ? 1.0 - eps : off;
  }
  return out;
}

}  // namespace scalant
