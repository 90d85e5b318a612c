#pragma once

#include <cstddef>

// Dense real kernels behind the network layers, the optimizer and the
// covariance quadrature. Every entry has a scalar reference implementation;
// an AVX2/FMA variant is selected at runtime when the CPU supports it.
// Elementwise kernels are bit-identical across variants; reductions agree
// to rounding (summation order differs).

namespace mcce::simd {

enum class Isa { scalar, avx2 };

struct AdamCoeffs {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  const char* name;

  // C[m x n] = A[m x k] * B[k x n]  (C += ... when accumulate). Row-major.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

  // C[m x n] = A[m x k] * B[n x k]^T  (C += ... when accumulate).
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

  double (*dot)(const double* x, const double* y, std::size_t n);

  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // In-place Adam descent step on n parameters.
  void (*adam_update)(double* params, const double* grads, double* m, double* v, std::size_t n,
                      const AdamCoeffs& coeffs);

  // out[j] = sum_k w[k] * z[k]^j for j < terms, z[k] = zr[k] + i zi[k].
  void (*power_sums)(const double* w, const double* zr, const double* zi, std::size_t nodes,
                     std::size_t terms, double* out_re, double* out_im);
};

const KernelTable& scalar_kernels();

// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// Selected once per process: AVX2 when available unless MCCE_SIMD=scalar.
const KernelTable& active();

bool cpu_has_avx2_fma();

// transposed[j][i] = src[i][j] for a rows x cols row-major source.
void transpose(const double* src, std::size_t rows, std::size_t cols, double* transposed);

}  // namespace mcce::simd
