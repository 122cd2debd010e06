#pragma once

#include <cstddef>
#include <span>

namespace scalant::kernels {

enum class Trans { No, Yes };

/// Serial runs every loop on the calling thread; Parallel fans out with
/// OpenMP. Both produce bit-identical results: each output element is
/// reduced in a fixed order that does not depend on the thread count.
enum class Exec { Serial, Parallel };

/// Worker count used by Exec::Parallel. Reads SCALANT_THREADS on first use.
int thread_count();
void set_thread_count(int n);

/// C[m x n] (+)= op(A)[m x k] * op(B)[k x n], all row-major with leading
/// dimensions. op(X) is X or its transpose. Every element is accumulated as
/// an FMA chain over k in ascending order, starting from C when
/// `accumulate` is set and from zero otherwise.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, bool accumulate, double* c,
          std::size_t ldc, Exec exec = Exec::Parallel);

namespace reference {

/// Textbook triple loop with the same accumulation contract as kernels::gemm.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, bool accumulate, double* c,
          std::size_t ldc);

}  // namespace reference

// Row-wise primitives over a rows x cols row-major block.

void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t cols,
                  Exec exec = Exec::Parallel);
/// dx += y * (dy - sum(dy * y)) per row.
void softmax_rows_backward(const double* y, const double* dy, double* dx, std::size_t rows,
                           std::size_t cols, Exec exec = Exec::Parallel);

/// y = (x - mean) * rstd * gain + bias. Saves xhat and rstd for backward.
void layer_norm_rows(const double* x, const double* gain, const double* bias, double eps,
                     double* y, double* xhat, double* rstd, std::size_t rows, std::size_t cols,
                     Exec exec = Exec::Parallel);
/// Accumulates into dx, dgain and dbias (any may be null).
void layer_norm_rows_backward(const double* dy, const double* xhat, const double* rstd,
                              const double* gain, double* dx, double* dgain, double* dbias,
                              std::size_t rows, std::size_t cols, Exec exec = Exec::Parallel);

/// Per row: loss_r = -sum_c target[r,c] * log_softmax(logits)[r,c], and the
/// softmax probabilities (rows with weight 0 are skipped and left at zero).
void cross_entropy_rows(const double* logits, const double* target, const double* weight,
                        double* loss, double* probs, std::size_t rows, std::size_t cols,
                        Exec exec = Exec::Parallel);

/// Scaled dot-product attention for `batch` sequences and `heads` heads.
/// Q is (batch*lq) x (heads*head_dim), K and V are (batch*lk) x (heads*head_dim).
/// Keys at positions >= key_len[b] are masked; with `causal`, query i only
/// sees keys j <= i + causal_offset.
struct AttentionShape {
  std::size_t batch = 1;
  std::size_t lq = 1;
  std::size_t lk = 1;
  std::size_t heads = 1;
  std::size_t head_dim = 1;
  bool causal = false;
  std::size_t causal_offset = 0;
};

/// Writes O (same layout as Q) and the attention probabilities P laid out as
/// [batch][heads][lq][lk].
void attention_forward(const AttentionShape& s, std::span<const std::size_t> key_len,
                       const double* q, const double* k, const double* v, double* out,
                       double* probs, Exec exec = Exec::Parallel);

/// Accumulates into dq, dk, dv (any may be null).
void attention_backward(const AttentionShape& s, const double* q, const double* k,
                        const double* v, const double* probs, const double* dout, double* dq,
                        double* dk, double* dv, Exec exec = Exec::Parallel);

}  // namespace scalant::kernels
