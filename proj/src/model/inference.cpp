#include "scalant/model/inference.hpp"

#include <algorithm>
#include <cmath>

#include "scalant/core/kernels.hpp"
#include "scalant/model/transformer.hpp"

namespace scalant {

namespace {

using kernels::Trans;

Tensor linear(const Tensor& x, ConstMatrixView w, ConstMatrixView b) {
  const std::size_t rows = x.rows(), in = x.cols(), out_dim = w.cols();
  if (w.rows() != in) throw Error("inference: linear input width mismatch");
  Tensor out({rows, out_dim});
  kernels::gemm(Trans::No, Trans::No, rows, out_dim, in, x.ptr(), in, w.data(), w.stride(), false, out.ptr(),
                out_dim);
  const double* bias = b.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < out_dim; ++c) out[r * out_dim + c] += bias[c];
  return out;
}

void add_into(Tensor& residual, const Tensor& update) {
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] += update[i];
}

void relu_inplace(Tensor& x) {
  for (auto& v : x.data()) v = v > 0.0 ? v : 0.0;
}

Tensor layer_norm(const Tensor& x, ConstMatrixView gain, ConstMatrixView bias, double eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out({rows, cols});
  std::vector<double> xhat(rows * cols), rstd(rows);
  kernels::layer_norm_rows(x.ptr(), gain.data(), bias.data(), eps, out.ptr(), xhat.data(), rstd.data(), rows, cols);
  return out;
}

struct Net {
  const SubModel& sub;

  ConstMatrixView w(std::size_t id) const { return sub.view(id); }

  Tensor embed_rows(std::span<const int> ids, std::span<const std::size_t> positions, const Tensor& pe) const {
    const auto& lay = sub.layout();
    const Tensor& table = sub.store().value(lay.embedding);
    const std::size_t m = table.cols(), n = table.rows();
    Tensor x({ids.size(), m});
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= n)
        throw Error("token id " + std::to_string(ids[r]) + " out of range");
      std::copy_n(table.ptr() + static_cast<std::size_t>(ids[r]) * m, m, x.ptr() + r * m);
    }
    Tensor h = linear(x, w(lay.proj_in_weight), w(lay.proj_in_bias));
    const double s = std::sqrt(static_cast<double>(sub.io_width()));
    for (auto& v : h.data()) v *= s;
    const std::size_t c = h.cols();
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (std::size_t j = 0; j < c; ++j) h[r * c + j] += pe.at(positions[r], j);
    return h;
  }

  Tensor embed_block(const TokenBlock& tokens) const {
    std::vector<std::size_t> pos(tokens.ids.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i % tokens.len;
    return embed_rows(tokens.ids, pos, positional_encoding(tokens.len, sub.io_width()));
  }

  kernels::AttentionShape shape(std::size_t layer, std::size_t batch, std::size_t lq, std::size_t lk,
                                bool causal) const {
    kernels::AttentionShape s;
    s.batch = batch;
    s.lq = lq;
    s.lk = lk;
    s.heads = sub.heads(layer);
    s.head_dim = sub.config().head_dim;
    s.causal = causal;
    return s;
  }

  Tensor attend(const kernels::AttentionShape& s, std::span<const std::size_t> key_len, const Tensor& q,
                const Tensor& k, const Tensor& v) const {
    Tensor out(q.shape());
    std::vector<double> probs(s.batch * s.heads * s.lq * s.lk);
    kernels::attention_forward(s, key_len, q.ptr(), k.ptr(), v.ptr(), out.ptr(), probs.data());
    return out;
  }

  void add_norm(Tensor& x, const Tensor& update, const NormParams& np) const {
    add_into(x, update);
    x = layer_norm(x, w(np.gain), w(np.bias), sub.config().layer_norm_eps);
  }

  Tensor feed_forward(const FfnParams& fp, const Tensor& x) const {
    Tensor h = linear(x, w(fp.in_weight), w(fp.in_bias));
    relu_inplace(h);
    return linear(h, w(fp.out_weight), w(fp.out_bias));
  }

  Tensor output_logits(const Tensor& x) const {
    const auto& lay = sub.layout();
    Tensor out = linear(x, w(lay.proj_out_weight), w(lay.proj_out_bias));
    const Tensor& table = sub.store().value(lay.embedding);
    const std::size_t rows = out.rows(), m = out.cols(), n = table.rows();
    Tensor logits({rows, n});
    kernels::gemm(Trans::No, Trans::Yes, rows, n, m, out.ptr(), m, table.ptr(), m, false, logits.ptr(), n);
    return logits;
  }
};

void check_len(const TokenBlock& b, const ModelConfig& config) {
  if (b.batch == 0 || b.len == 0) throw Error("empty token batch");
  if (b.len > config.max_seq_len)
    throw Error("sequence length " + std::to_string(b.len) + " exceeds max_seq_len " +
                std::to_string(config.max_seq_len));
}

}  // namespace

Tensor encoder_states(const SubModel& sub, const TokenBlock& src) {
  check_len(src, sub.config());
  const Net net{sub};
  Tensor x = net.embed_block(src);
  const auto& layers = sub.layout().encoder;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& ap = layers[i].self_attn;
    Tensor q = linear(x, net.w(ap.q_weight), net.w(ap.q_bias));
    Tensor k = linear(x, net.w(ap.k_weight), net.w(ap.k_bias));
    Tensor v = linear(x, net.w(ap.v_weight), net.w(ap.v_bias));
    Tensor a = net.attend(net.shape(i, src.batch, src.len, src.len, false), src.lengths, q, k, v);
    net.add_norm(x, linear(a, net.w(ap.out_weight), net.w(ap.out_bias)), layers[i].norm1);
    net.add_norm(x, net.feed_forward(layers[i].ffn, x), layers[i].norm2);
  }
  return x;
}

EncodedSources encode_sources(const SubModel& sub, const TokenBlock& src) {
  const Tensor memory = encoder_states(sub, src);
  const Net net{sub};
  EncodedSources enc;
  enc.batch = src.batch;
  enc.len = src.len;
  enc.lengths = src.lengths;
  for (const auto& lp : sub.layout().decoder) {
    enc.cross_keys.push_back(linear(memory, net.w(lp.cross_attn.k_weight), net.w(lp.cross_attn.k_bias)));
    enc.cross_values.push_back(linear(memory, net.w(lp.cross_attn.v_weight), net.w(lp.cross_attn.v_bias)));
  }
  return enc;
}

Tensor decode_logits(const SubModel& sub, const EncodedSources& enc, const TokenBlock& tgt_in) {
  check_len(tgt_in, sub.config());
  if (tgt_in.batch != enc.batch) throw Error("source and target batch sizes differ");
  const Net net{sub};
  const std::size_t offset = sub.config().n_encoder_layers;
  Tensor x = net.embed_block(tgt_in);
  const auto& layers = sub.layout().decoder;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& lp = layers[i];
    const std::size_t layer = offset + i;
    const auto& sa = lp.self_attn;
    Tensor q = linear(x, net.w(sa.q_weight), net.w(sa.q_bias));
    Tensor k = linear(x, net.w(sa.k_weight), net.w(sa.k_bias));
    Tensor v = linear(x, net.w(sa.v_weight), net.w(sa.v_bias));
    Tensor a = net.attend(net.shape(layer, tgt_in.batch, tgt_in.len, tgt_in.len, true), tgt_in.lengths, q, k, v);
    net.add_norm(x, linear(a, net.w(sa.out_weight), net.w(sa.out_bias)), lp.norm1);

    const auto& ca = lp.cross_attn;
    Tensor cq = linear(x, net.w(ca.q_weight), net.w(ca.q_bias));
    Tensor c = net.attend(net.shape(layer, tgt_in.batch, tgt_in.len, enc.len, false), enc.lengths, cq,
                          enc.cross_keys[i], enc.cross_values[i]);
    net.add_norm(x, linear(c, net.w(ca.out_weight), net.w(ca.out_bias)), lp.norm2);
    net.add_norm(x, net.feed_forward(lp.ffn, x), lp.norm3);
  }
  return net.output_logits(x);
}

Tensor inference_logits(const SubModel& sub, const TokenBlock& src, const TokenBlock& tgt_in) {
  return decode_logits(sub, encode_sources(sub, src), tgt_in);
}

IncrementalDecoder::IncrementalDecoder(const SubModel& sub, const EncodedSources& enc,
                                       std::vector<std::size_t> row_source, std::size_t max_steps)
    : sub_(&sub), enc_(&enc), row_source_(std::move(row_source)), capacity_(max_steps) {
  if (capacity_ == 0) throw Error("incremental decoder needs at least one step");
  if (capacity_ > sub.config().max_seq_len)
    throw Error("decode length " + std::to_string(capacity_) + " exceeds max_seq_len");
  for (auto s : row_source_)
    if (s >= enc.batch) throw Error("decoder row refers to a missing source");
  pe_ = positional_encoding(capacity_, sub.io_width());
  const std::size_t offset = sub.config().n_encoder_layers;
  for (std::size_t i = 0; i < sub.config().n_decoder_layers; ++i) {
    const std::size_t d = sub.attn_width(offset + i);
    keys_.emplace_back(Shape{std::max<std::size_t>(rows(), 1) * capacity_, d});
    values_.emplace_back(Shape{std::max<std::size_t>(rows(), 1) * capacity_, d});
  }
}

Tensor IncrementalDecoder::step(std::span<const int> tokens) {
  if (tokens.size() != rows()) throw Error("one token per decoder row required");
  if (pos_ >= capacity_) throw Error("incremental decoder is past its step limit");
  if (rows() == 0) throw Error("no decoder rows left");
  const Net net{*sub_};
  const std::size_t n_rows = rows();
  const std::size_t offset = sub_->config().n_encoder_layers;
  const std::vector<std::size_t> positions(n_rows, pos_);
  Tensor x = net.embed_rows(tokens, positions, pe_);

  const auto& layers = sub_->layout().decoder;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& lp = layers[i];
    const std::size_t layer = offset + i;
    const std::size_t d = sub_->attn_width(layer);

    const auto& sa = lp.self_attn;
    Tensor q = linear(x, net.w(sa.q_weight), net.w(sa.q_bias));
    Tensor k = linear(x, net.w(sa.k_weight), net.w(sa.k_bias));
    Tensor v = linear(x, net.w(sa.v_weight), net.w(sa.v_bias));
    for (std::size_t r = 0; r < n_rows; ++r) {
      std::copy_n(k.ptr() + r * d, d, keys_[i].ptr() + (r * capacity_ + pos_) * d);
      std::copy_n(v.ptr() + r * d, d, values_[i].ptr() + (r * capacity_ + pos_) * d);
    }
    Tensor a({n_rows, d});
    {
      const auto s = net.shape(layer, 1, 1, pos_ + 1, false);
      const std::size_t key_len[1] = {pos_ + 1};
      std::vector<double> probs(s.heads * s.lk);
      for (std::size_t r = 0; r < n_rows; ++r)
        kernels::attention_forward(s, key_len, q.ptr() + r * d, keys_[i].ptr() + r * capacity_ * d,
                                   values_[i].ptr() + r * capacity_ * d, a.ptr() + r * d, probs.data());
    }
    net.add_norm(x, linear(a, net.w(sa.out_weight), net.w(sa.out_bias)), lp.norm1);

    const auto& ca = lp.cross_attn;
    Tensor cq = linear(x, net.w(ca.q_weight), net.w(ca.q_bias));
    Tensor c({n_rows, d});
    {
      const auto s = net.shape(layer, 1, 1, enc_->len, false);
      std::vector<double> probs(s.heads * s.lk);
      for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t src = row_source_[r];
        const std::size_t key_len[1] = {enc_->lengths[src]};
        kernels::attention_forward(s, key_len, cq.ptr() + r * d, enc_->cross_keys[i].ptr() + src * enc_->len * d,
                                   enc_->cross_values[i].ptr() + src * enc_->len * d, c.ptr() + r * d,
                                   probs.data());
      }
    }
    net.add_norm(x, linear(c, net.w(ca.out_weight), net.w(ca.out_bias)), lp.norm2);
    net.add_norm(x, net.feed_forward(lp.ffn, x), lp.norm3);
  }
  ++pos_;
  return net.output_logits(x);
}

void IncrementalDecoder::select(std::span<const std::size_t> parents) {
  for (auto p : parents)
    if (p >= rows()) throw Error("beam parent index out of range");
  std::vector<std::size_t> sources;
  sources.reserve(parents.size());
  for (auto p : parents) sources.push_back(row_source_[p]);
  const std::size_t new_rows = std::max<std::size_t>(parents.size(), 1);
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const std::size_t d = keys_[i].cols();
    Tensor nk({new_rows * capacity_, d}), nv({new_rows * capacity_, d});
    for (std::size_t r = 0; r < parents.size(); ++r) {
      std::copy_n(keys_[i].ptr() + parents[r] * capacity_ * d, pos_ * d, nk.ptr() + r * capacity_ * d);
      std::copy_n(values_[i].ptr() + parents[r] * capacity_ * d, pos_ * d, nv.ptr() + r * capacity_ * d);
    }
    keys_[i] = std::move(nk);
    values_[i] = std::move(nv);
  }
  row_source_ = std::move(sources);
}

}  // namespace scalant
