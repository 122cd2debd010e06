#include "scalant/model/transformer.hpp"

#include <cmath>

namespace scalant {

Tensor positional_encoding(std::size_t len, std::size_t width) {
  Tensor pe({len, width});
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; i < width; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
      const double angle = static_cast<double>(pos) * freq;
      pe.at(pos, i) = std::sin(angle);
      if (i + 1 < width) pe.at(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

TapeBinding::TapeBinding(ad::Tape& tape, const ParameterStore& store, bool trainable)
    : tape_(&tape), store_(&store), trainable_(trainable) {}

ad::Var TapeBinding::get(std::size_t param, Block block) {
  const auto key = std::make_pair(param, std::make_pair(block.rows, block.cols));
  if (auto it = leaves_.find(key); it != leaves_.end()) return it->second;
  const Tensor& full = store_->value(param);
  Tensor value = crop_matrix(full, block.rows, block.cols).to_tensor();
  if (full.rank() == 1) value = value.reshaped({block.cols});
  ad::Var v = trainable_ ? tape_->variable(std::move(value)) : tape_->constant(std::move(value));
  leaves_.emplace(key, v);
  return v;
}

void TapeBinding::collect(GradientBuffer& grads) const {
  for (const auto& [key, var] : leaves_) {
    if (!tape_->has_grad(var)) continue;
    grads.add_block(key.first, Block{key.second.first, key.second.second}, tape_->grad(var).data());
  }
}

namespace {

struct Ctx {
  TapeBinding& params;
  const SubModel& sub;
  ForwardMode mode;

  ad::Var w(std::size_t id) const { return params.get(id, sub.block(id)); }

  ad::Var drop(ad::Var x) const {
    if (!mode.training || sub.dropout() == 0.0) return x;
    if (!mode.rng) throw Error("training forward with dropout needs a random generator");
    return ad::dropout(x, sub.dropout(), *mode.rng, true);
  }
};

void check_block(const TokenBlock& b, const ModelConfig& config, const char* what) {
  if (b.batch == 0 || b.len == 0) throw Error(std::string("empty ") + what + " batch");
  if (b.len > config.max_seq_len)
    throw Error(std::string(what) + " length " + std::to_string(b.len) + " exceeds max_seq_len " +
                std::to_string(config.max_seq_len));
}

ad::Var embed(const Ctx& ctx, const TokenBlock& tokens) {
  const auto& lay = ctx.sub.layout();
  const std::size_t c = ctx.sub.io_width();
  ad::Var x = ad::gather_rows(ctx.w(lay.embedding), tokens.ids);
  x = ad::linear(x, ctx.w(lay.proj_in_weight), ctx.w(lay.proj_in_bias));
  x = ad::scale(x, std::sqrt(static_cast<double>(c)));
  const Tensor pe = positional_encoding(tokens.len, c);
  Tensor tiled({tokens.batch * tokens.len, c});
  for (std::size_t b = 0; b < tokens.batch; ++b)
    std::copy(pe.data().begin(), pe.data().end(), tiled.ptr() + b * tokens.len * c);
  x = ad::add_constant(x, tiled);
  return ctx.drop(x);
}

ad::Var attention_block(const Ctx& ctx, const AttentionParams& ap, std::size_t layer, ad::Var queries,
                        ad::Var keys_values, std::size_t batch, std::size_t lq, std::size_t lk,
                        const std::vector<std::size_t>& key_len, bool causal) {
  ad::Var q = ad::linear(queries, ctx.w(ap.q_weight), ctx.w(ap.q_bias));
  ad::Var k = ad::linear(keys_values, ctx.w(ap.k_weight), ctx.w(ap.k_bias));
  ad::Var v = ad::linear(keys_values, ctx.w(ap.v_weight), ctx.w(ap.v_bias));
  kernels::AttentionShape shape;
  shape.batch = batch;
  shape.lq = lq;
  shape.lk = lk;
  shape.heads = ctx.sub.heads(layer);
  shape.head_dim = ctx.sub.config().head_dim;
  shape.causal = causal;
  ad::Var a = ad::attention(q, k, v, shape, key_len);
  return ad::linear(a, ctx.w(ap.out_weight), ctx.w(ap.out_bias));
}

ad::Var feed_forward(const Ctx& ctx, const FfnParams& fp, ad::Var x) {
  ad::Var h = ad::relu(ad::linear(x, ctx.w(fp.in_weight), ctx.w(fp.in_bias)));
  return ad::linear(h, ctx.w(fp.out_weight), ctx.w(fp.out_bias));
}

ad::Var add_norm(const Ctx& ctx, const NormParams& np, ad::Var residual, ad::Var update) {
  return ad::layer_norm(ad::add(residual, ctx.drop(update)), ctx.w(np.gain), ctx.w(np.bias),
                        ctx.sub.config().layer_norm_eps);
}

}  // namespace

ad::Var encode(TapeBinding& params, const SubModel& sub, const TokenBlock& src, ForwardMode mode) {
  check_block(src, sub.config(), "source");
  const Ctx ctx{params, sub, mode};
  ad::Var x = embed(ctx, src);
  const auto& layers = sub.layout().encoder;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& lp = layers[i];
    ad::Var a = attention_block(ctx, lp.self_attn, i, x, x, src.batch, src.len, src.len, src.lengths, false);
    x = add_norm(ctx, lp.norm1, x, a);
    x = add_norm(ctx, lp.norm2, x, feed_forward(ctx, lp.ffn, x));
  }
  return x;
}

ad::Var decode(TapeBinding& params, const SubModel& sub, ad::Var memory, const TokenBlock& src,
               const TokenBlock& tgt_in, ForwardMode mode) {
  check_block(tgt_in, sub.config(), "target");
  if (src.batch != tgt_in.batch) throw Error("source and target batch sizes differ");
  const Ctx ctx{params, sub, mode};
  const auto& lay = sub.layout();
  const std::size_t offset = sub.config().n_encoder_layers;
  ad::Var x = embed(ctx, tgt_in);
  for (std::size_t i = 0; i < lay.decoder.size(); ++i) {
    const auto& lp = lay.decoder[i];
    const std::size_t layer = offset + i;
    ad::Var a = attention_block(ctx, lp.self_attn, layer, x, x, tgt_in.batch, tgt_in.len, tgt_in.len,
                                tgt_in.lengths, true);
    x = add_norm(ctx, lp.norm1, x, a);
    ad::Var c = attention_block(ctx, lp.cross_attn, layer, x, memory, tgt_in.batch, tgt_in.len, src.len,
                                src.lengths, false);
    x = add_norm(ctx, lp.norm2, x, c);
    x = add_norm(ctx, lp.norm3, x, feed_forward(ctx, lp.ffn, x));
  }
  ad::Var out = ad::linear(x, ctx.w(lay.proj_out_weight), ctx.w(lay.proj_out_bias));
  return ad::matmul_nt(out, ctx.w(lay.embedding));
}

ad::Var forward_logits(TapeBinding& params, const SubModel& sub, const TokenBlock& src, const TokenBlock& tgt_in,
                       ForwardMode mode) {
  ad::Var memory = encode(params, sub, src, mode);
  return decode(params, sub, memory, src, tgt_in, mode);
}

}  // namespace scalant
