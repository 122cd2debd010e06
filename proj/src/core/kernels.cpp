#include "scalant/core/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <vector>

#include <omp.h>

namespace scalant::kernels {

namespace {

int g_threads = 0;

int threads_from_env() {
  if (const char* env = std::getenv("SCALANT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

// Work below this many multiply-adds stays on one thread.
constexpr std::size_t kParallelGemmThreshold = 1u << 16;

constexpr std::size_t MR = 6;
constexpr std::size_t NR = 16;
constexpr std::size_t KC = 256;

typedef double v8 __attribute__((vector_size(64)));

// acc (MR x NR, row-major) continues its FMA chain over kc packed steps.
#if defined(__clang__)
#pragma clang fp contract(fast)
#endif
__attribute__((optimize("fp-contract=fast"))) void micro_kernel(std::size_t kc,
                                                                const double* __restrict ap,
                                                                const double* __restrict bp,
                                                                double* __restrict acc) {
  v8 c0[MR], c1[MR];
  for (std::size_t r = 0; r < MR; ++r) {
    std::memcpy(&c0[r], acc + r * NR, sizeof(v8));
    std::memcpy(&c1[r], acc + r * NR + 8, sizeof(v8));
  }
  for (std::size_t p = 0; p < kc; ++p) {
    v8 b0, b1;
    std::memcpy(&b0, bp + p * NR, sizeof(v8));
    std::memcpy(&b1, bp + p * NR + 8, sizeof(v8));
    for (std::size_t r = 0; r < MR; ++r) {
      const double a = ap[p * MR + r];
      c0[r] = a * b0 + c0[r];
      c1[r] = a * b1 + c1[r];
    }
  }
  for (std::size_t r = 0; r < MR; ++r) {
    std::memcpy(acc + r * NR, &c0[r], sizeof(v8));
    std::memcpy(acc + r * NR + 8, &c1[r], sizeof(v8));
  }
}

inline double elem(const double* x, std::size_t ld, Trans t, std::size_t i, std::size_t j) {
  return t == Trans::No ? x[i * ld + j] : x[j * ld + i];
}

struct GemmArgs {
  Trans ta, tb;
  std::size_t m, n, k;
  const double* a;
  std::size_t lda;
  const double* b;
  std::size_t ldb;
  bool accumulate;
  double* c;
  std::size_t ldc;
};

void pack_b_strip(const GemmArgs& g, std::size_t pc, std::size_t kc, std::size_t strip,
                  double* dst) {
  const std::size_t j0 = strip * NR;
  const std::size_t nr = std::min(NR, g.n - j0);
  for (std::size_t p = 0; p < kc; ++p) {
    double* row = dst + p * NR;
    for (std::size_t c = 0; c < nr; ++c) row[c] = elem(g.b, g.ldb, g.tb, pc + p, j0 + c);
    for (std::size_t c = nr; c < NR; ++c) row[c] = 0.0;
  }
}

void compute_row_block(const GemmArgs& g, std::size_t pc, std::size_t kc, std::size_t ib,
                       const double* bpack, std::size_t nstrips, double* apack) {
  const std::size_t i0 = ib * MR;
  const std::size_t mr = std::min(MR, g.m - i0);
  for (std::size_t p = 0; p < kc; ++p)
    for (std::size_t r = 0; r < MR; ++r)
      apack[p * MR + r] = r < mr ? elem(g.a, g.lda, g.ta, i0 + r, pc + p) : 0.0;

  const bool load_c = pc > 0 || g.accumulate;
  alignas(64) double acc[MR * NR];
  for (std::size_t s = 0; s < nstrips; ++s) {
    const std::size_t j0 = s * NR;
    const std::size_t nr = std::min(NR, g.n - j0);
    for (std::size_t r = 0; r < MR; ++r)
      for (std::size_t c = 0; c < NR; ++c)
        acc[r * NR + c] = (load_c && r < mr && c < nr) ? g.c[(i0 + r) * g.ldc + j0 + c] : 0.0;
    micro_kernel(kc, apack, bpack + s * kc * NR, acc);
    for (std::size_t r = 0; r < mr; ++r)
      std::memcpy(g.c + (i0 + r) * g.ldc + j0, acc + r * NR, nr * sizeof(double));
  }
}

void gemm_blocked(const GemmArgs& g, bool parallel) {
  const std::size_t nstrips = (g.n + NR - 1) / NR;
  const std::size_t mblocks = (g.m + MR - 1) / MR;
  std::vector<double> bpack(std::min(KC, g.k) * nstrips * NR);
  const int nt = parallel ? thread_count() : 1;

  for (std::size_t pc = 0; pc < g.k; pc += KC) {
    const std::size_t kc = std::min(KC, g.k - pc);
#pragma omp parallel num_threads(nt) if (nt > 1)
    {
#pragma omp for schedule(static)
      for (std::size_t s = 0; s < nstrips; ++s) pack_b_strip(g, pc, kc, s, bpack.data() + s * kc * NR);

      std::vector<double> apack(kc * MR);
#pragma omp for schedule(static)
      for (std::size_t ib = 0; ib < mblocks; ++ib)
        compute_row_block(g, pc, kc, ib, bpack.data(), nstrips, apack.data());
    }
  }
}

}  // namespace

int thread_count() {
  if (g_threads <= 0) g_threads = threads_from_env();
  return g_threads;
}

void set_thread_count(int n) { g_threads = n > 0 ? n : threads_from_env(); }

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, bool accumulate, double* c,
          std::size_t ldc, Exec exec) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate)
      for (std::size_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, 0.0);
    return;
  }
  const GemmArgs g{ta, tb, m, n, k, a, lda, b, ldb, accumulate, c, ldc};
  const bool parallel = exec == Exec::Parallel && m * n * k >= kParallelGemmThreshold;
  gemm_blocked(g, parallel);
}

namespace reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, bool accumulate, double* c,
          std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = accumulate ? c[i * ldc + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p)
        s = std::fma(elem(a, lda, ta, i, p), elem(b, ldb, tb, p, j), s);
      c[i * ldc + j] = s;
    }
}

}  // namespace reference

namespace {

int workers(Exec exec) { return exec == Exec::Parallel ? thread_count() : 1; }

void softmax_row(const double* x, double* y, std::size_t n) {
  double mx = x[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < n; ++j) y[j] *= inv;
}

}  // namespace

void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t cols, Exec exec) {
  const int nt = workers(exec);
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * cols > 4096) schedule(static)
  for (std::size_t r = 0; r < rows; ++r) softmax_row(x + r * cols, y + r * cols, cols);
}

void softmax_rows_backward(const double* y, const double* dy, double* dx, std::size_t rows,
                           std::size_t cols, Exec exec) {
  const int nt = workers(exec);
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * cols > 4096) schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    const double* yr = y + r * cols;
    const double* gr = dy + r * cols;
    double dot = 0.0;
    for (std::size_t j = 0; j < cols; ++j) dot += gr[j] * yr[j];
    double* out = dx + r * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += yr[j] * (gr[j] - dot);
  }
}

void layer_norm_rows(const double* x, const double* gain, const double* bias, double eps,
                     double* y, double* xhat, double* rstd, std::size_t rows, std::size_t cols,
                     Exec exec) {
  const int nt = workers(exec);
  const double inv_n = 1.0 / static_cast<double>(cols);
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * cols > 4096) schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += xr[j];
    mean *= inv_n;
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var *= inv_n;
    const double rs = 1.0 / std::sqrt(var + eps);
    rstd[r] = rs;
    double* hr = xhat + r * cols;
    double* yr = y + r * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      hr[j] = (xr[j] - mean) * rs;
      yr[j] = hr[j] * gain[j] + bias[j];
    }
  }
}

void layer_norm_rows_backward(const double* dy, const double* xhat, const double* rstd,
                              const double* gain, double* dx, double* dgain, double* dbias,
                              std::size_t rows, std::size_t cols, Exec exec) {
  const int nt = workers(exec);
  const double inv_n = 1.0 / static_cast<double>(cols);
  if (dx) {
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * cols > 4096) schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = dy + r * cols;
      const double* hr = xhat + r * cols;
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double g = gr[j] * gain[j];
        s1 += g;
        s2 += g * hr[j];
      }
      s1 *= inv_n;
      s2 *= inv_n;
      double* out = dx + r * cols;
      for (std::size_t j = 0; j < cols; ++j)
        out[j] += rstd[r] * (gr[j] * gain[j] - s1 - hr[j] * s2);
    }
  }
  if (dgain || dbias) {
    // Column sums run over rows in order so the result is thread-count free.
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * cols > 4096) schedule(static)
    for (std::size_t j = 0; j < cols; ++j) {
      double sg = 0.0, sb = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        sg += dy[r * cols + j] * xhat[r * cols + j];
        sb += dy[r * cols + j];
      }
      if (dgain) dgain[j] += sg;
      if (dbias) dbias[j] += sb;
    }
  }
}

void cross_entropy_rows(const double* logits, const double* target, const double* weight,
                        double* loss, double* probs, std::size_t rows, std::size_t cols,
                        Exec exec) {
  const int nt = workers(exec);
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * cols > 4096) schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    double* pr = probs + r * cols;
    if (weight[r] == 0.0) {
      std::fill_n(pr, cols, 0.0);
      loss[r] = 0.0;
      continue;
    }
    const double* xr = logits + r * cols;
    const double* tr = target + r * cols;
    double mx = xr[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      pr[j] = std::exp(xr[j] - mx);
      sum += pr[j];
    }
    const double log_z = mx + std::log(sum);
    const double inv = 1.0 / sum;
    double l = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      pr[j] *= inv;
      if (tr[j] != 0.0) l -= tr[j] * (xr[j] - log_z);
    }
    loss[r] = l;
  }
}

namespace {

inline std::size_t key_limit(const AttentionShape& s, std::span<const std::size_t> key_len,
                             std::size_t b, std::size_t i) {
  std::size_t lim = std::min(s.lk, key_len[b]);
  if (s.causal) lim = std::min(lim, i + s.causal_offset + 1);
  return lim;
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t d = 0; d < n; ++d) s += a[d] * b[d];
  return s;
}

}  // namespace

void attention_forward(const AttentionShape& s, std::span<const std::size_t> key_len,
                       const double* q, const double* k, const double* v, double* out,
                       double* probs, Exec exec) {
  const std::size_t width = s.heads * s.head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.head_dim));
  const std::size_t jobs = s.batch * s.heads;
  const int nt = workers(exec);
#pragma omp parallel for num_threads(nt) if (nt > 1 && jobs > 1) schedule(static)
  for (std::size_t job = 0; job < jobs; ++job) {
    const std::size_t b = job / s.heads;
    const std::size_t h = job % s.heads;
    const std::size_t col = h * s.head_dim;
    for (std::size_t i = 0; i < s.lq; ++i) {
      double* p = probs + ((b * s.heads + h) * s.lq + i) * s.lk;
      const double* qi = q + (b * s.lq + i) * width + col;
      const std::size_t lim = key_limit(s, key_len, b, i);
      double mx = -HUGE_VAL;
      for (std::size_t j = 0; j < lim; ++j) {
        p[j] = dot(qi, k + (b * s.lk + j) * width + col, s.head_dim) * scale;
        mx = std::max(mx, p[j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < lim; ++j) {
        p[j] = std::exp(p[j] - mx);
        sum += p[j];
      }
      const double inv = 1.0 / sum;
      for (std::size_t j = 0; j < lim; ++j) p[j] *= inv;
      for (std::size_t j = lim; j < s.lk; ++j) p[j] = 0.0;

      double* oi = out + (b * s.lq + i) * width + col;
      std::fill_n(oi, s.head_dim, 0.0);
      for (std::size_t j = 0; j < lim; ++j) {
        const double* vj = v + (b * s.lk + j) * width + col;
        for (std::size_t d = 0; d < s.head_dim; ++d) oi[d] += p[j] * vj[d];
      }
    }
  }
}

void attention_backward(const AttentionShape& s, const double* q, const double* k,
                        const double* v, const double* probs, const double* dout, double* dq,
                        double* dk, double* dv, Exec exec) {
  const std::size_t width = s.heads * s.head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.head_dim));
  const std::size_t jobs = s.batch * s.heads;
  const int nt = workers(exec);
#pragma omp parallel for num_threads(nt) if (nt > 1 && jobs > 1) schedule(static)
  for (std::size_t job = 0; job < jobs; ++job) {
    const std::size_t b = job / s.heads;
    const std::size_t h = job % s.heads;
    const std::size_t col = h * s.head_dim;
    std::vector<double> ds(s.lk);
    for (std::size_t i = 0; i < s.lq; ++i) {
      const double* p = probs + ((b * s.heads + h) * s.lq + i) * s.lk;
      const double* go = dout + (b * s.lq + i) * width + col;
      // dP_ij = dO_i . V_j ; dS = P * (dP - sum_j P dP)
      double acc = 0.0;
      for (std::size_t j = 0; j < s.lk; ++j) {
        if (p[j] == 0.0) {
          ds[j] = 0.0;
          continue;
        }
        ds[j] = dot(go, v + (b * s.lk + j) * width + col, s.head_dim);
        acc += p[j] * ds[j];
      }
      for (std::size_t j = 0; j < s.lk; ++j) ds[j] = p[j] == 0.0 ? 0.0 : p[j] * (ds[j] - acc) * scale;

      const double* qi = q + (b * s.lq + i) * width + col;
      for (std::size_t j = 0; j < s.lk; ++j) {
        if (p[j] == 0.0) continue;
        if (dv) {
          double* dvj = dv + (b * s.lk + j) * width + col;
          for (std::size_t d = 0; d < s.head_dim; ++d) dvj[d] += p[j] * go[d];
        }
        if (dq) {
          double* dqi = dq + (b * s.lq + i) * width + col;
          const double* kj = k + (b * s.lk + j) * width + col;
          for (std::size_t d = 0; d < s.head_dim; ++d) dqi[d] += ds[j] * kj[d];
        }
        if (dk) {
          double* dkj = dk + (b * s.lk + j) * width + col;
          for (std::size_t d = 0; d < s.head_dim; ++d) dkj[d] += ds[j] * qi[d];
        }
      }
    }
  }
}

}  // namespace scalant::kernels
