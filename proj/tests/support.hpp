#pragma once

// Small models, random data and a finite-difference gradient checker shared
// by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "scalant/core/autodiff.hpp"
#include "scalant/data/corpus.hpp"
#include "scalant/model/parameters.hpp"
#include "scalant/model/tokens.hpp"

namespace scalant::testing {

/// Two encoder and two decoder layers at widths {4, 8} with 4-wide heads.
inline ModelConfig tiny_config(std::size_t vocab = 9) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.max_width = 8;
  c.width_menu = {4, 8};
  c.dropout_by_width = {{4, 0.0}, {8, 0.0}};
  c.n_encoder_layers = 2;
  c.n_decoder_layers = 2;
  c.head_dim = 4;
  c.max_seq_len = 32;
  return c;
}

/// The copy-task model of the training study: widths 64..256, 2+2 layers.
inline ModelConfig toy_config() {
  ModelConfig c;
  c.vocab_size = 64;
  c.max_width = 256;
  c.width_menu = {64, 128, 192, 256};
  c.dropout_by_width = {{64, 0.0}, {128, 0.0}, {192, 0.0}, {256, 0.0}};
  c.n_encoder_layers = 2;
  c.n_decoder_layers = 2;
  c.head_dim = 64;
  c.max_seq_len = 64;
  return c;
}

/// Full-size configuration: 32768 tokens, widths 256..1024 in steps of 64,
/// 6+6 layers. Only used for cost accounting; never allocated.
inline ModelConfig paper_config() {
  ModelConfig c;
  c.vocab_size = 32768;
  c.max_width = 1024;
  c.width_menu.clear();
  c.dropout_by_width.clear();
  for (std::size_t w = 256; w <= 1024; w += 64) {
    c.width_menu.push_back(w);
    c.dropout_by_width[w] = 0.0;
  }
  c.n_encoder_layers = 6;
  c.n_decoder_layers = 6;
  c.head_dim = 64;
  c.max_seq_len = 256;
  return c;
}

/// Store with every tensor, biases and norms included, filled uniformly in
/// [-scale, scale] so that no gradient path is trivially zero.
inline ParameterStore random_store(const ModelConfig& config, std::uint64_t seed, double scale = 0.5) {
  ParameterStore store(config);
  Rng rng(seed);
  for (std::size_t i = 0; i < store.size(); ++i)
    for (double& v : store.value(i).data()) v = rng.uniform(-scale, scale);
  return store;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline TokenSeq random_tokens(Rng& rng, std::size_t len, std::size_t vocab) {
  TokenSeq s(len);
  for (int& t : s) t = static_cast<int>(kFirstContentToken + rng.index(vocab - kFirstContentToken));
  return s;
}

inline std::vector<TokenSeq> random_sequences(Rng& rng, std::size_t n, std::size_t min_len, std::size_t max_len,
                                              std::size_t vocab) {
  std::vector<TokenSeq> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_tokens(rng, min_len + rng.index(max_len - min_len + 1), vocab));
  return out;
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Largest relative error between the tape gradient of `loss` with respect
/// to each input and a central difference with step `h`.
inline double gradcheck(const std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>& loss,
                        std::vector<Tensor> inputs, double h = 1e-5) {
  std::vector<Tensor> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.variable(t));
    tape.backward(loss(tape, vars));
    for (const auto& v : vars) analytic.push_back(tape.has_grad(v) ? tape.grad(v) : Tensor(v.shape()));
  }
  auto evaluate = [&] {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.constant(t));
    return loss(tape, vars).value()[0];
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t e = 0; e < inputs[i].size(); ++e) {
      const double saved = inputs[i][e];
      inputs[i][e] = saved + h;
      const double up = evaluate();
      inputs[i][e] = saved - h;
      const double down = evaluate();
      inputs[i][e] = saved;
      worst = std::max(worst, relative_error(analytic[i][e], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

/// sum(x * weights): turns any tensor output into a scalar whose gradient
/// reaches every element with a different coefficient.
inline ad::Var project(ad::Var x, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(x, x.tape().constant(random_tensor(x.shape(), rng))));
}

}  // namespace scalant::testing
