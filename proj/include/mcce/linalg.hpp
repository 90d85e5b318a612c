#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcce/rng.hpp"
#include "mcce/types.hpp"

// Complex kernels shared by the channel model, the network and the
// estimators. All transforms use the unitary DFT
//   (F v)[k] = M^{-1/2} sum_m v[m] exp(-j 2 pi k m / M),
// so a circulant covariance is C = F^H diag(c) F with real c >= 0.

namespace mcce::linalg {

// Relative jitter added to a Hermitian matrix whose Cholesky factorization fails.
inline constexpr double kJitter = 1e-10;

ComplexVector unitary_dft(std::span<const cplx> v, bool inverse = false);

// Same transform, written into out (size must match).
void unitary_dft(std::span<const cplx> v, std::span<cplx> out, bool inverse = false);

// F^H diag(c) F v, or F^H diag(1/c) F v when invert is set.
ComplexVector circulant_apply(const CirculantSpectrum& c, std::span<const cplx> v, bool invert = false);

DenseMatrix circulant_dense(const CirculantSpectrum& c);
DenseMatrix toeplitz_dense(const ToeplitzFirstRow& r);

// Cholesky factor L (C = L L^H) with the jitter policy: factor C, then
// C + kJitter * tr(C)/M * I. Throws NotPositiveDefinite otherwise.
DenseMatrix psd_factor(const DenseMatrix& c);

// Reusable factorization for repeated solves against one Hermitian PSD matrix.
class HermitianSolver {
 public:
  explicit HermitianSolver(const DenseMatrix& a);

  ComplexVector solve(std::span<const cplx> b) const;
  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
  bool jittered() const { return jittered_; }
  std::size_t size() const { return static_cast<std::size_t>(factor_.rows()); }

 private:
  DenseMatrix factor_;
  bool jittered_ = false;
};

// x with A x = b for Hermitian PSD A (Hermitian within 1e-10, relative).
ComplexVector hermitian_solve(const DenseMatrix& a, std::span<const cplx> b);

bool is_hermitian(const DenseMatrix& a, double tolerance = 1e-10);

// Draws from CN(0, C). Real and imaginary parts have variance diag(C)/2.
class GaussianSampler {
 public:
  explicit GaussianSampler(const ToeplitzFirstRow& c);
  explicit GaussianSampler(const DenseMatrix& c);
  explicit GaussianSampler(const CirculantSpectrum& c);

  ComplexVector draw(Rng& rng) const;
  std::size_t size() const { return size_; }

 private:
  std::size_t size_ = 0;
  bool circulant_ = false;
  DenseMatrix factor_;
  std::vector<double> sqrt_spectrum_;
};

std::vector<ComplexVector> sample_complex_gaussian(const ToeplitzFirstRow& c, std::size_t count, Rng& rng);
std::vector<ComplexVector> sample_complex_gaussian(const CirculantSpectrum& c, std::size_t count, Rng& rng);

double squared_norm(std::span<const cplx> v);

Eigen::Map<const Eigen::VectorXcd> as_eigen(std::span<const cplx> v);
ComplexVector to_vector(const Eigen::VectorXcd& v);

}  // namespace mcce::linalg
