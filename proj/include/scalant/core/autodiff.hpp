#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "scalant/core/kernels.hpp"
#include "scalant/core/rng.hpp"
#include "scalant/core/tensor.hpp"

namespace scalant::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while
/// the tape is alive.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const;
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the list is
/// topologically sorted by construction. A tape belongs to one thread.
class Tape {
 public:
  /// Receives the output gradient and one slot per input; a slot is null
  /// when that input does not need a gradient. Implementations accumulate.
  using BackwardFn = std::function<void(const Tensor& grad_out, std::span<Tensor* const> grads)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  bool has_grad(Var v) const;
  const Tensor& grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable node that
  /// requires a gradient. Gradients add up over repeated calls.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  void set_check_finite(bool on) noexcept { check_finite_ = on; }
  /// When off, backward keeps gradients for leaves only and frees interior
  /// ones as soon as they are consumed.
  void set_retain_grads(bool on) noexcept { retain_grads_ = on; }
  kernels::Exec exec() const noexcept { return exec_; }
  void set_exec(kernels::Exec e) noexcept { exec_ = e; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  std::size_t check(Var v) const;

  std::vector<Node> nodes_;
  bool check_finite_;
  bool retain_grads_ = true;
  kernels::Exec exec_ = kernels::Exec::Parallel;
};

// ---- shape-preserving elementwise ops --------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double s);
/// x + c for a constant tensor c of the same shape.
Var add_constant(Var x, const Tensor& c);
Var relu(Var x);
/// Inverted dropout: kept units are divided by (1 - rate). Identity when
/// rate == 0 or when not training.
Var dropout(Var x, double rate, Rng& rng, bool training);

// ---- linear algebra ---------------------------------------------------------

/// a[m x k] * b[k x n].
Var matmul(Var a, Var b);
/// a[m x k] * b[n x k]^T.
Var matmul_nt(Var a, Var b);
/// x[rows x in] * w[in x out] + bias[out].
Var linear(Var x, Var w, Var bias);
Var transpose(Var x);

// ---- shape manipulation -----------------------------------------------------

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
/// Rows of `table` selected by `ids`.
Var gather_rows(Var table, std::span<const int> ids);

// ---- reductions and normalisers --------------------------------------------

Var sum(Var x);
Var softmax(Var x, std::size_t axis);
Var layer_norm(Var x, Var gain, Var bias, double eps);

/// Weighted mean cross-entropy: sum_r w_r * (-sum_c t_rc log softmax(x)_rc) / denom.
/// Rows with w_r != 0 must have targets summing to 1 within 1e-6.
/// A non-positive `denominator` means sum(w).
Var cross_entropy(Var logits, const Tensor& target, const Tensor& row_weight,
                  double denominator = 0.0);

/// Multi-head scaled dot-product attention (see kernels::AttentionShape).
Var attention(Var q, Var k, Var v, const kernels::AttentionShape& shape,
              std::vector<std::size_t> key_len);

}  // namespace scalant::ad
