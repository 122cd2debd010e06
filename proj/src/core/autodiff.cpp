#include "scalant/core/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

namespace scalant::ad {

using kernels::Trans;

namespace {

#if defined(SCALANT_CHECK_FINITE) || !defined(NDEBUG)
constexpr bool kCheckFiniteDefault = true;
#else
constexpr bool kCheckFiniteDefault = false;
#endif

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error("operands recorded on different tapes");
  return a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw Error(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                shape_string(b.shape()));
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw Error(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

struct AxisSplit {
  std::size_t outer, dim, inner;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) throw Error("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

// ---- Var / Tape -------------------------------------------------------------

Tape& Var::tape() const {
  if (!tape_) throw Error("use of an unbound Var");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value(*this); }

Tape::Tape() : check_finite_(kCheckFiniteDefault) {}

std::size_t Tape::check(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw Error("Var does not belong to this tape");
  return v.id_;
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (check_finite_) value.check_finite("autodiff op");
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (Var in : inputs) {
    const std::size_t id = check(in);
    node.inputs.push_back(id);
    node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const { return nodes_[check(v)].value; }

bool Tape::requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }

bool Tape::has_grad(Var v) const { return !nodes_[check(v)].grad.empty(); }

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[check(v)];
  if (n.grad.empty()) throw Error("no gradient recorded for this Var");
  return n.grad;
}

void Tape::backward(Var loss) {
  const std::size_t root = check(loss);
  if (nodes_[root].value.size() != 1) throw Error("backward: loss must be a scalar");
  if (!nodes_[root].requires_grad) return;

  // Contributions of this call only, so repeated calls add up correctly.
  std::vector<Tensor> fresh(root + 1);
  fresh[root] = Tensor(nodes_[root].value.shape(), 1.0);

  std::vector<Tensor*> slots;
  for (std::size_t i = root + 1; i-- > 0;) {
    if (fresh[i].empty()) continue;
    Node& node = nodes_[i];
    if (node.backward) {
      slots.assign(node.inputs.size(), nullptr);
      for (std::size_t s = 0; s < node.inputs.size(); ++s) {
        const std::size_t in = node.inputs[s];
        if (!nodes_[in].requires_grad) continue;
        if (fresh[in].empty()) fresh[in] = Tensor(nodes_[in].value.shape());
        slots[s] = &fresh[in];
      }
      node.backward(fresh[i], slots);
    }
    if (!retain_grads_ && node.backward) {
      fresh[i] = Tensor();
      continue;
    }
    if (node.grad.empty()) {
      node.grad = std::move(fresh[i]);
    } else {
      for (std::size_t e = 0; e < node.grad.size(); ++e) node.grad[e] += fresh[i][e];
      fresh[i] = Tensor();
    }
  }
}


// ---- elementwise ------------------------------------------------------------

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t.record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> d) {
    for (Tensor* slot : d)
      if (slot)
        for (std::size_t i = 0; i < g.size(); ++i) (*slot)[i] += g[i];
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return t.record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> d) {
    if (d[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*d[0])[i] += g[i];
    if (d[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*d[1])[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.record(std::move(out), {a, b}, [a, b](const Tensor& g, std::span<Tensor* const> d) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (d[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*d[0])[i] += g[i] * bv[i];
    if (d[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*d[1])[i] += g[i] * av[i];
  });
}

Var scale(Var x, double s) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= s;
  return x.tape().record(std::move(out), {x}, [s](const Tensor& g, std::span<Tensor* const> d) {
    for (std::size_t i = 0; i < g.size(); ++i) (*d[0])[i] += g[i] * s;
  });
}

Var add_constant(Var x, const Tensor& c) {
  require_same_shape(x.value(), c, "add_constant");
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return x.tape().record(std::move(out), {x}, [](const Tensor& g, std::span<Tensor* const> d) {
    for (std::size_t i = 0; i < g.size(); ++i) (*d[0])[i] += g[i];
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return x.tape().record(std::move(out), {x}, [x](const Tensor& g, std::span<Tensor* const> d) {
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0.0) (*d[0])[i] += g[i];
  });
}

Var dropout(Var x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<Tensor>(x.shape());
  for (auto& m : mask->data()) m = rng.uniform() >= rate ? keep_scale : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*mask)[i];
  return x.tape().record(std::move(out), {x}, [mask](const Tensor& g, std::span<Tensor* const> d) {
    for (std::size_t i = 0; i < g.size(); ++i) (*d[0])[i] += g[i] * (*mask)[i];
  });
}

// ---- linear algebra ---------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k)
    throw Error("matmul: inner dimensions differ " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  Tensor out({m, n});
  const auto exec = t.exec();
  kernels::gemm(Trans::No, Trans::No, m, n, k, av.ptr(), k, bv.ptr(), n, false, out.ptr(), n, exec);
  return t.record(std::move(out), {a, b}, [a, b, m, n, k, exec](const Tensor& g, std::span<Tensor* const> d) {
    if (d[0]) kernels::gemm(Trans::No, Trans::Yes, m, k, n, g.ptr(), n, b.value().ptr(), n, true, d[0]->ptr(), k, exec);
    if (d[1]) kernels::gemm(Trans::Yes, Trans::No, k, n, m, a.value().ptr(), k, g.ptr(), n, true, d[1]->ptr(), n, exec);
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul_nt");
  require_matrix(bv, "matmul_nt");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  if (bv.cols() != k)
    throw Error("matmul_nt: inner dimensions differ " + shape_string(av.shape()) + " x " + shape_string(bv.shape()) + "^T");
  Tensor out({m, n});
  const auto exec = t.exec();
  kernels::gemm(Trans::No, Trans::Yes, m, n, k, av.ptr(), k, bv.ptr(), k, false, out.ptr(), n, exec);
  return t.record(std::move(out), {a, b}, [a, b, m, n, k, exec](const Tensor& g, std::span<Tensor* const> d) {
    if (d[0]) kernels::gemm(Trans::No, Trans::No, m, k, n, g.ptr(), n, b.value().ptr(), k, true, d[0]->ptr(), k, exec);
    if (d[1]) kernels::gemm(Trans::Yes, Trans::No, n, k, m, g.ptr(), n, a.value().ptr(), k, true, d[1]->ptr(), k, exec);
  });
}

Var linear(Var x, Var w, Var bias) {
  Tape& t = same_tape(x, w);
  same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = bias.value();
  require_matrix(wv, "linear");
  const std::size_t rows = xv.rows(), in = xv.cols(), out_dim = wv.cols();
  if (wv.rows() != in) throw Error("linear: input width " + std::to_string(in) + " vs weight " + shape_string(wv.shape()));
  if (bv.size() != out_dim) throw Error("linear: bias length mismatch");
  Shape shape = xv.shape();
  shape.back() = out_dim;
  Tensor out(shape);
  const auto exec = t.exec();
  kernels::gemm(Trans::No, Trans::No, rows, out_dim, in, xv.ptr(), in, wv.ptr(), out_dim, false, out.ptr(), out_dim, exec);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < out_dim; ++c) out[r * out_dim + c] += bv[c];
  return t.record(std::move(out), {x, w, bias},
                  [x, w, rows, in, out_dim, exec](const Tensor& g, std::span<Tensor* const> d) {
                    if (d[0])
                      kernels::gemm(Trans::No, Trans::Yes, rows, in, out_dim, g.ptr(), out_dim, w.value().ptr(), out_dim, true,
                                    d[0]->ptr(), in, exec);
                    if (d[1])
                      kernels::gemm(Trans::Yes, Trans::No, in, out_dim, rows, x.value().ptr(), in, g.ptr(), out_dim, true,
                                    d[1]->ptr(), out_dim, exec);
                    if (d[2]) {
                      Tensor& db = *d[2];
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < out_dim; ++c) db[c] += g[r * out_dim + c];
                    }
                  });
}

Var transpose(Var x) {
  const Tensor& xv = x.value();
  require_matrix(xv, "transpose");
  const std::size_t r = xv.rows(), c = xv.cols();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
  return x.tape().record(std::move(out), {x}, [r, c](const Tensor& g, std::span<Tensor* const> d) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*d[0])[i * c + j] += g[j * r + i];
  });
}

// ---- shape manipulation -----------------------------------------------------

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw Error("concat: no inputs");
  Tape& t = parts[0].tape();
  const Shape& first = parts[0].shape();
  Shape shape = first;
  if (axis >= shape.size()) throw Error("concat: axis out of range");
  shape[axis] = 0;
  std::vector<std::size_t> dims;
  for (Var p : parts) {
    same_tape(parts[0], p);
    const Shape& s = p.shape();
    if (s.size() != first.size()) throw Error("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i]) throw Error("concat: shape mismatch off the concat axis");
    dims.push_back(s[axis]);
    shape[axis] += s[axis];
  }
  const AxisSplit out_split = split_axis(shape, axis);
  Tensor out(shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = parts[p].value();
    const std::size_t block = dims[p] * out_split.inner;
    for (std::size_t o = 0; o < out_split.outer; ++o)
      std::copy_n(v.ptr() + o * block, block, out.ptr() + (o * out_split.dim + offset) * out_split.inner);
    offset += dims[p];
  }
  return t.record(std::move(out), parts, [dims, out_split](const Tensor& g, std::span<Tensor* const> d) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < dims.size(); ++p) {
      const std::size_t block = dims[p] * out_split.inner;
      if (d[p])
        for (std::size_t o = 0; o < out_split.outer; ++o) {
          const double* src = g.ptr() + (o * out_split.dim + offset) * out_split.inner;
          double* dst = d[p]->ptr() + o * block;
          for (std::size_t e = 0; e < block; ++e) dst[e] += src[e];
        }
      offset += dims[p];
    }
  });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  const AxisSplit sp = split_axis(xv.shape(), axis);
  if (begin >= end || end > sp.dim) throw Error("slice: bad range");
  Shape shape = xv.shape();
  shape[axis] = end - begin;
  Tensor out(shape);
  const std::size_t block = (end - begin) * sp.inner;
  for (std::size_t o = 0; o < sp.outer; ++o)
    std::copy_n(xv.ptr() + (o * sp.dim + begin) * sp.inner, block, out.ptr() + o * block);
  return x.tape().record(std::move(out), {x}, [sp, begin, block](const Tensor& g, std::span<Tensor* const> d) {
    for (std::size_t o = 0; o < sp.outer; ++o) {
      double* dst = d[0]->ptr() + (o * sp.dim + begin) * sp.inner;
      const double* src = g.ptr() + o * block;
      for (std::size_t e = 0; e < block; ++e) dst[e] += src[e];
    }
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Tensor& tv = table.value();
  require_matrix(tv, "gather_rows");
  const std::size_t n = tv.rows(), c = tv.cols();
  if (ids.empty()) throw Error("gather_rows: no ids");
  std::vector<int> idx(ids.begin(), ids.end());
  Tensor out({idx.size(), c});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= n)
      throw Error("gather_rows: id " + std::to_string(idx[r]) + " out of range");
    std::copy_n(tv.ptr() + idx[r] * c, c, out.ptr() + r * c);
  }
  return table.tape().record(std::move(out), {table}, [idx, c](const Tensor& g, std::span<Tensor* const> d) {
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = d[0]->ptr() + idx[r] * c;
      for (std::size_t e = 0; e < c; ++e) dst[e] += g[r * c + e];
    }
  });
}

// ---- reductions and normalisers --------------------------------------------

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record(Tensor({1}, std::vector<double>{s}), {x}, [](const Tensor& g, std::span<Tensor* const> d) {
    for (auto& v : d[0]->data()) v += g[0];
  });
}

Var softmax(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const AxisSplit sp = split_axis(xv.shape(), axis);
  Tensor out(xv.shape());
  const auto exec = x.tape().exec();
  if (sp.inner == 1) {
    kernels::softmax_rows(xv.ptr(), out.ptr(), sp.outer, sp.dim, exec);
  } else {
    std::vector<double> lane(sp.dim), res(sp.dim);
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        for (std::size_t j = 0; j < sp.dim; ++j) lane[j] = xv[(o * sp.dim + j) * sp.inner + i];
        kernels::softmax_rows(lane.data(), res.data(), 1, sp.dim, kernels::Exec::Serial);
        for (std::size_t j = 0; j < sp.dim; ++j) out[(o * sp.dim + j) * sp.inner + i] = res[j];
      }
  }
  auto y = std::make_shared<Tensor>(out);
  return x.tape().record(std::move(out), {x}, [sp, y, exec](const Tensor& g, std::span<Tensor* const> d) {
    const Tensor& yv = *y;
    if (sp.inner == 1) {
      kernels::softmax_rows_backward(yv.ptr(), g.ptr(), d[0]->ptr(), sp.outer, sp.dim, exec);
      return;
    }
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < sp.dim; ++j) {
          const std::size_t e = (o * sp.dim + j) * sp.inner + i;
          dot += g[e] * yv[e];
        }
        for (std::size_t j = 0; j < sp.dim; ++j) {
          const std::size_t e = (o * sp.dim + j) * sp.inner + i;
          (*d[0])[e] += yv[e] * (g[e] - dot);
        }
      }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = same_tape(x, gain);
  same_tape(x, bias);
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (cols < 2) throw Error("layer_norm needs at least two features");
  if (gain.value().size() != cols || bias.value().size() != cols) throw Error("layer_norm: affine size mismatch");
  Tensor out(xv.shape());
  auto xhat = std::make_shared<Tensor>(xv.shape());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  const auto exec = t.exec();
  kernels::layer_norm_rows(xv.ptr(), gain.value().ptr(), bias.value().ptr(), eps, out.ptr(), xhat->ptr(), rstd->data(),
                           rows, cols, exec);
  return t.record(std::move(out), {x, gain, bias},
                  [gain, xhat, rstd, rows, cols, exec](const Tensor& g, std::span<Tensor* const> d) {
                    kernels::layer_norm_rows_backward(g.ptr(), xhat->ptr(), rstd->data(), gain.value().ptr(),
                                                      d[0] ? d[0]->ptr() : nullptr, d[1] ? d[1]->ptr() : nullptr,
                                                      d[2] ? d[2]->ptr() : nullptr, rows, cols, exec);
                  });
}

Var cross_entropy(Var logits, const Tensor& target, const Tensor& row_weight, double denominator) {
  const Tensor& lv = logits.value();
  require_same_shape(lv, target, "cross_entropy");
  const std::size_t rows = lv.rows(), cols = lv.cols();
  if (row_weight.size() != rows) throw Error("cross_entropy: one weight per row required");
  double wsum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double w = row_weight[r];
    wsum += w;
    if (w == 0.0) continue;
    double ts = 0.0;
    for (std::size_t c = 0; c < cols; ++c) ts += target[r * cols + c];
    if (std::abs(ts - 1.0) > 1e-6)
      throw Error("cross_entropy: target row " + std::to_string(r) + " sums to " + std::to_string(ts));
  }
  const double denom = denominator > 0.0 ? denominator : wsum;
  if (!(denom > 0.0)) throw Error("cross_entropy: no weighted rows");

  auto probs = std::make_shared<Tensor>(lv.shape());
  std::vector<double> per_row(rows);
  const auto exec = logits.tape().exec();
  kernels::cross_entropy_rows(lv.ptr(), target.ptr(), row_weight.ptr(), per_row.data(), probs->ptr(), rows, cols, exec);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) total += row_weight[r] * per_row[r];
  total /= denom;

  auto tgt = std::make_shared<Tensor>(target);
  auto w = std::make_shared<Tensor>(row_weight);
  return logits.tape().record(
      Tensor({1}, std::vector<double>{total}), {logits},
      [probs, tgt, w, rows, cols, denom](const Tensor& g, std::span<Tensor* const> d) {
        Tensor& dl = *d[0];
        for (std::size_t r = 0; r < rows; ++r) {
          const double wr = (*w)[r];
          if (wr == 0.0) continue;
          const double coef = g[0] * wr / denom;
          double ts = 0.0;
          for (std::size_t c = 0; c < cols; ++c) ts += (*tgt)[r * cols + c];
          for (std::size_t c = 0; c < cols; ++c)
            dl[r * cols + c] += coef * ((*probs)[r * cols + c] * ts - (*tgt)[r * cols + c]);
        }
      });
}

Var attention(Var q, Var k, Var v, const kernels::AttentionShape& shape, std::vector<std::size_t> key_len) {
  Tape& t = same_tape(q, k);
  same_tape(q, v);
  const std::size_t width = shape.heads * shape.head_dim;
  if (q.value().rows() != shape.batch * shape.lq || q.value().cols() != width)
    throw Error("attention: query shape " + shape_string(q.shape()) + " does not match layout");
  if (k.value().rows() != shape.batch * shape.lk || k.value().cols() != width || v.shape() != k.shape())
    throw Error("attention: key/value shape does not match layout");
  if (key_len.size() != shape.batch) throw Error("attention: one key length per sequence required");
  for (auto len : key_len)
    if (len == 0) throw Error("attention: empty key sequence");
  Tensor out(q.shape());
  auto probs = std::make_shared<std::vector<double>>(shape.batch * shape.heads * shape.lq * shape.lk);
  const auto exec = t.exec();
  kernels::attention_forward(shape, key_len, q.value().ptr(), k.value().ptr(), v.value().ptr(), out.ptr(), probs->data(),
                             exec);
  return t.record(std::move(out), {q, k, v}, [q, k, v, shape, probs, exec](const Tensor& g, std::span<Tensor* const> d) {
    kernels::attention_backward(shape, q.value().ptr(), k.value().ptr(), v.value().ptr(), probs->data(), g.ptr(),
                                d[0] ? d[0]->ptr() : nullptr, d[1] ? d[1]->ptr() : nullptr, d[2] ? d[2]->ptr() : nullptr,
                                exec);
  });
}

}  // namespace scalant::ad
