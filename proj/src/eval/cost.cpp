#include "scalant/eval/cost.hpp"

namespace scalant {

namespace {

double attention_params(double c, double d) { return 3.0 * (c * d + d) + d * c + c; }
double ffn_params(double c, double hidden) { return c * hidden + hidden + hidden * c + c; }
double norm_params(double c) { return 2.0 * c; }

struct Flops {
  double embedding = 0.0, encoder = 0.0, decoder = 0.0, output = 0.0;
};

double matmul(double m, double k, double n) { return 2.0 * m * k * n; }

// Attention block for `lq` queries over `lk` keys: projections, scores,
// softmax, context and output map, plus their bias adds.
double attention_flops(double lq, double lk, double c, double d, double heads) {
  double f = matmul(lq, c, d) + 2.0 * matmul(lk, c, d);  // q, k, v
  f += lq * d + 2.0 * lk * d;                             // their biases
  f += matmul(lq, d, lk) + heads * lq * lk;               // scores and scaling
  f += heads * lq * lk;                                   // softmax
  f += matmul(lq, lk, d);                                 // context
  f += matmul(lq, d, c) + lq * c;                         // output map
  return f;
}

double ffn_flops(double l, double c, double hidden) {
  return matmul(l, c, hidden) + l * hidden + l * hidden + matmul(l, hidden, c) + l * c;
}

// Residual add followed by layer norm.
double add_norm_flops(double l, double c) { return l * c + l * c; }

}  // namespace

double count_params(const ModelConfig& config, const WidthSpec& spec, bool include_projections) {
  spec.validate(config);
  const double n = static_cast<double>(config.vocab_size);
  const double m = static_cast<double>(config.max_width);
  const double c = static_cast<double>(spec.io_width);
  const double mult = static_cast<double>(config.ffn_multiplier);

  double total = include_projections ? n * m + (m * c + c) + (c * m + m) : n * c;
  for (std::size_t l = 0; l < config.n_layers(); ++l) {
    const double d = static_cast<double>(spec.attn_widths[l]);
    const bool decoder = l >= config.n_encoder_layers;
    total += attention_params(c, d) + ffn_params(c, mult * d) + 2.0 * norm_params(c);
    if (decoder) total += attention_params(c, d) + norm_params(c);
  }
  return total;
}

CostReport cost_report(const ModelConfig& config, const WidthSpec& spec, std::size_t src_len, std::size_t tgt_len) {
  spec.validate(config);
  const double n = static_cast<double>(config.vocab_size);
  const double m = static_cast<double>(config.max_width);
  const double c = static_cast<double>(spec.io_width);
  const double s = static_cast<double>(src_len);
  const double t = static_cast<double>(tgt_len);
  const double mult = static_cast<double>(config.ffn_multiplier);

  Flops f;
  // Input projection with bias, width scaling and positional encoding.
  for (double len : {s, t}) f.embedding += matmul(len, m, c) + 3.0 * len * c;

  for (std::size_t l = 0; l < config.n_layers(); ++l) {
    const double d = static_cast<double>(spec.attn_widths[l]);
    const double heads = d / static_cast<double>(config.head_dim);
    if (l < config.n_encoder_layers) {
      f.encoder += attention_flops(s, s, c, d, heads) + add_norm_flops(s, c);
      f.encoder += ffn_flops(s, c, mult * d) + add_norm_flops(s, c);
    } else {
      f.decoder += attention_flops(t, t, c, d, heads) + add_norm_flops(t, c);
      f.decoder += attention_flops(t, s, c, d, heads) + add_norm_flops(t, c);
      f.decoder += ffn_flops(t, c, mult * d) + add_norm_flops(t, c);
    }
  }
  // Output projection with bias, product with the embedding, softmax.
  f.output = matmul(t, c, m) + t * m + matmul(t, m, n) + t * n;

  CostReport r;
  r.spec = spec;
  r.params = count_params(config, spec, true);
  r.flops = f.embedding + f.encoder + f.decoder + f.output;
  r.flops_breakdown = {{"embedding", f.embedding}, {"encoder", f.encoder}, {"decoder", f.decoder}, {"output", f.output}};
  return r;
}

double estimate_flops(const ModelConfig& config, const WidthSpec& spec, std::size_t src_len, std::size_t tgt_len) {
  return cost_report(config, spec, src_len, tgt_len).flops;
}

}  // namespace scalant
