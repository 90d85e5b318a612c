#include <cmath>

#include "mcce/simd/kernels.hpp"
#include "kernels_internal.hpp"

namespace mcce::simd {
namespace {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * ldc;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * lda + p];
      const double* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double s = dot(a + i * lda, b + j * ldb, k);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
    }
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamCoeffs& k) {
  const double one_minus_b1 = 1.0 - k.beta1;
  const double one_minus_b2 = 1.0 - k.beta2;
  for (std::size_t i = 0; i < n; ++i) {
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
  for (std::size_t j = 0; j < terms; ++j) {
    out_re[j] = 0.0;
    out_im[j] = 0.0;
  }
  for (std::size_t node = 0; node < nodes; ++node) {
    double pr = w[node];
    double pi = 0.0;
    const double ar = zr[node];
    const double ai = zi[node];
    for (std::size_t j = 0; j < terms; ++j) {
      out_re[j] += pr;
      out_im[j] += pi;
      const double nr = pr * ar - pi * ai;
      const double ni = pr * ai + pi * ar;
      pr = nr;
      pi = ni;
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, "scalar", &gemm_nn,     &gemm_nt,
                                 &dot,        &axpy,    &adam_update, &power_sums};
  return table;
}

}  // namespace mcce::simd
