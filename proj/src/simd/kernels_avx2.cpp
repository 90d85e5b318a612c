// Compiled with -mavx2 -mfma -ffp-contract=off; only reached after a runtime
// CPU check. Elementwise kernels avoid FMA so they round exactly like the
// scalar reference.

#include <immintrin.h>

#include <cmath>
#include <vector>

#include "mcce/simd/kernels.hpp"
#include "kernels_internal.hpp"

namespace mcce::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      __m256d c00, c01, c10, c11, c20, c21, c30, c31;
      double* c0 = c + (i + 0) * ldc + j;
      double* c1 = c + (i + 1) * ldc + j;
      double* c2 = c + (i + 2) * ldc + j;
      double* c3 = c + (i + 3) * ldc + j;
      if (accumulate) {
        c00 = _mm256_loadu_pd(c0);
        c01 = _mm256_loadu_pd(c0 + 4);
        c10 = _mm256_loadu_pd(c1);
        c11 = _mm256_loadu_pd(c1 + 4);
        c20 = _mm256_loadu_pd(c2);
        c21 = _mm256_loadu_pd(c2 + 4);
        c30 = _mm256_loadu_pd(c3);
        c31 = _mm256_loadu_pd(c3 + 4);
      } else {
        c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
      }
      const double* a0 = a + (i + 0) * lda;
      const double* a1 = a + (i + 1) * lda;
      const double* a2 = a + (i + 2) * lda;
      const double* a3 = a + (i + 3) * lda;
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * ldb + j;
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        __m256d av = _mm256_broadcast_sd(a0 + p);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(a1 + p);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(a2 + p);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(a3 + p);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
      }
      _mm256_storeu_pd(c0, c00);
      _mm256_storeu_pd(c0 + 4, c01);
      _mm256_storeu_pd(c1, c10);
      _mm256_storeu_pd(c1 + 4, c11);
      _mm256_storeu_pd(c2, c20);
      _mm256_storeu_pd(c2 + 4, c21);
      _mm256_storeu_pd(c3, c30);
      _mm256_storeu_pd(c3 + 4, c31);
    }
    for (; i < m; ++i) {
      double* ci = c + i * ldc + j;
      __m256d s0 = accumulate ? _mm256_loadu_pd(ci) : _mm256_setzero_pd();
      __m256d s1 = accumulate ? _mm256_loadu_pd(ci + 4) : _mm256_setzero_pd();
      const double* ai = a + i * lda;
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * ldb + j;
        const __m256d av = _mm256_broadcast_sd(ai + p);
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), s1);
      }
      _mm256_storeu_pd(ci, s0);
      _mm256_storeu_pd(ci + 4, s1);
    }
  }
  for (; j + 4 <= n; j += 4) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * ldc + j;
      __m256d s = accumulate ? _mm256_loadu_pd(ci) : _mm256_setzero_pd();
      const double* ai = a + i * lda;
      for (std::size_t p = 0; p < k; ++p)
        s = _mm256_fmadd_pd(_mm256_broadcast_sd(ai + p), _mm256_loadu_pd(b + p * ldb + j), s);
      _mm256_storeu_pd(ci, s);
    }
  }
  for (; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      double s = accumulate ? c[i * ldc + j] : 0.0;
      const double* ai = a + i * lda;
      for (std::size_t p = 0; p < k; ++p) s = std::fma(ai[p], b[p * ldb + j], s);
      c[i * ldc + j] = s;
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const double* a0 = a + i * lda;
    const double* a1 = a0 + lda;
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
      const double* b0 = b + j * ldb;
      const double* b1 = b0 + ldb;
      __m256d s00 = _mm256_setzero_pd(), s01 = _mm256_setzero_pd();
      __m256d s10 = _mm256_setzero_pd(), s11 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d va0 = _mm256_loadu_pd(a0 + p);
        const __m256d va1 = _mm256_loadu_pd(a1 + p);
        const __m256d vb0 = _mm256_loadu_pd(b0 + p);
        const __m256d vb1 = _mm256_loadu_pd(b1 + p);
        s00 = _mm256_fmadd_pd(va0, vb0, s00);
        s01 = _mm256_fmadd_pd(va0, vb1, s01);
        s10 = _mm256_fmadd_pd(va1, vb0, s10);
        s11 = _mm256_fmadd_pd(va1, vb1, s11);
      }
      double r00 = hsum(s00), r01 = hsum(s01), r10 = hsum(s10), r11 = hsum(s11);
      for (; p < k; ++p) {
        r00 = std::fma(a0[p], b0[p], r00);
        r01 = std::fma(a0[p], b1[p], r01);
        r10 = std::fma(a1[p], b0[p], r10);
        r11 = std::fma(a1[p], b1[p], r11);
      }
      double* c0 = c + i * ldc + j;
      double* c1 = c0 + ldc;
      if (accumulate) {
        c0[0] += r00;
        c0[1] += r01;
        c1[0] += r10;
        c1[1] += r11;
      } else {
        c0[0] = r00;
        c0[1] = r01;
        c1[0] = r10;
        c1[1] = r11;
      }
    }
    for (; j < n; ++j) {
      const double r0 = dot(a0, b + j * ldb, k);
      const double r1 = dot(a1, b + j * ldb, k);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + r0 : r0;
      c[(i + 1) * ldc + j] = accumulate ? c[(i + 1) * ldc + j] + r1 : r1;
    }
  }
  for (; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double r = dot(a + i * lda, b + j * ldb, k);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + r : r;
    }
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamCoeffs& k) {
  const double one_minus_b1 = 1.0 - k.beta1;
  const double one_minus_b2 = 1.0 - k.beta2;
  const __m256d b1 = _mm256_set1_pd(k.beta1);
  const __m256d b2 = _mm256_set1_pd(k.beta2);
  const __m256d omb1 = _mm256_set1_pd(one_minus_b1);
  const __m256d omb2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bc1 = _mm256_set1_pd(k.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(k.bias_correction2);
  const __m256d lr = _mm256_set1_pd(k.learning_rate);
  const __m256d eps = _mm256_set1_pd(k.epsilon);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grads + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vi =
        _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bc1);
    const __m256d vhat = _mm256_div_pd(vi, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), eps));
    _mm256_storeu_pd(params + i, _mm256_sub_pd(_mm256_loadu_pd(params + i), step));
  }
  for (; i < n; ++i) {
    const double g = grads[i];
    const double mi = k.beta1 * m[i] + one_minus_b1 * g;
    const double vi = k.beta2 * v[i] + one_minus_b2 * (g * g);
    m[i] = mi;
    v[i] = vi;
    const double mhat = mi / k.bias_correction1;
    const double vhat = vi / k.bias_correction2;
    params[i] -= k.learning_rate * mhat / (std::sqrt(vhat) + k.epsilon);
  }
}

void power_sums(const double* w, const double* zr, const double* zi, std::size_t nodes,
                std::size_t terms, double* out_re, double* out_im) {
  std::vector<double> acc(terms * 8, 0.0);
  std::size_t node = 0;
  for (; node + 4 <= nodes; node += 4) {
    __m256d pr = _mm256_loadu_pd(w + node);
    __m256d pi = _mm256_setzero_pd();
    const __m256d ar = _mm256_loadu_pd(zr + node);
    const __m256d ai = _mm256_loadu_pd(zi + node);
    for (std::size_t j = 0; j < terms; ++j) {
      double* slot = acc.data() + j * 8;
      _mm256_storeu_pd(slot, _mm256_add_pd(_mm256_loadu_pd(slot), pr));
      _mm256_storeu_pd(slot + 4, _mm256_add_pd(_mm256_loadu_pd(slot + 4), pi));
      const __m256d nr = _mm256_fmsub_pd(pr, ar, _mm256_mul_pd(pi, ai));
      const __m256d ni = _mm256_fmadd_pd(pr, ai, _mm256_mul_pd(pi, ar));
      pr = nr;
      pi = ni;
    }
  }
  for (std::size_t j = 0; j < terms; ++j) {
    out_re[j] = hsum(_mm256_loadu_pd(acc.data() + j * 8));
    out_im[j] = hsum(_mm256_loadu_pd(acc.data() + j * 8 + 4));
  }
  for (; node < nodes; ++node) {
    double pr = w[node];
    double pi = 0.0;
    for (std::size_t j = 0; j < terms; ++j) {
      out_re[j] += pr;
      out_im[j] += pi;
      const double nr = pr * zr[node] - pi * zi[node];
      const double ni = pr * zi[node] + pi * zr[node];
      pr = nr;
      pi = ni;
    }
  }
}

}  // namespace

namespace detail {

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::avx2, "avx2", &gemm_nn,     &gemm_nt,
                                 &dot,      &axpy,  &adam_update, &power_sums};
  return table;
}

}  // namespace detail
}  // namespace mcce::simd
