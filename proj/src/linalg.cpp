#include "mcce/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

#include "mcce/errors.hpp"

namespace mcce::linalg {
namespace {

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine = [] {
    Eigen::FFT<double> e;
    e.SetFlag(Eigen::FFT<double>::Unscaled);
    return e;
  }();
  return engine;
}

void check_spectrum_length(const CirculantSpectrum& c, std::size_t n) {
  if (c.size() != n)
    throw std::invalid_argument("circulant spectrum length " + std::to_string(c.size()) +
                                " does not match vector length " + std::to_string(n));
}

}  // namespace

void unitary_dft(std::span<const cplx> v, std::span<cplx> out, bool inverse) {
  if (v.empty()) throw std::invalid_argument("unitary_dft: empty vector");
  if (out.size() != v.size()) throw std::invalid_argument("unitary_dft: output size mismatch");
  const auto n = static_cast<Eigen::Index>(v.size());
  if (v.data() == out.data()) {
    ComplexVector tmp(v.begin(), v.end());
    unitary_dft(tmp, out, inverse);
    return;
  }
  if (n == 1) {
    out[0] = v[0];
    return;
  }
  auto& engine = fft_engine();
  if (inverse)
    engine.inv(out.data(), v.data(), n);
  else
    engine.fwd(out.data(), v.data(), n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
  for (auto& x : out) x *= scale;
}

ComplexVector unitary_dft(std::span<const cplx> v, bool inverse) {
  ComplexVector out(v.size());
  unitary_dft(v, out, inverse);
  return out;
}

ComplexVector circulant_apply(const CirculantSpectrum& c, std::span<const cplx> v, bool invert) {
  check_spectrum_length(c, v.size());
  ComplexVector spec = unitary_dft(v, false);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double lambda = c.eigenvalues[k];
    if (invert) {
      if (lambda == 0.0) throw std::domain_error("circulant_apply: zero eigenvalue cannot be inverted");
      spec[k] /= lambda;
    } else {
      spec[k] *= lambda;
    }
  }
  return unitary_dft(spec, true);
}

DenseMatrix circulant_dense(const CirculantSpectrum& c) {
  const std::size_t n = c.size();
  if (n == 0) throw std::invalid_argument("circulant_dense: empty spectrum");
  // First column of C is F^H c (scaled): C[i][j] = (1/n) sum_k c_k exp(j 2 pi k (i - j) / n).
  ComplexVector spec(c.eigenvalues.begin(), c.eigenvalues.end());
  const ComplexVector col = unitary_dft(spec, true);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = col[(i + n - j) % n] * scale;
  return out;
}

DenseMatrix toeplitz_dense(const ToeplitzFirstRow& r) {
  const std::size_t n = r.size();
  if (n == 0) throw std::invalid_argument("toeplitz_dense: empty first row");
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = j >= i ? r.row[j - i] : std::conj(r.row[i - j]);
  return out;
}

bool is_hermitian(const DenseMatrix& a, double tolerance) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tolerance * scale;
}

namespace {

bool try_cholesky(const DenseMatrix& a, DenseMatrix& factor) {
  Eigen::LLT<DenseMatrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  factor = llt.matrixL();
  return factor.allFinite();
}

}  // namespace

DenseMatrix psd_factor(const DenseMatrix& c) {
  if (c.rows() != c.cols()) throw std::invalid_argument("psd_factor: matrix is not square");
  const auto n = c.rows();
  DenseMatrix factor;
  if (c.cwiseAbs().maxCoeff() == 0.0) return DenseMatrix::Zero(n, n);
  if (try_cholesky(c, factor)) return factor;
  const double mean_diag = c.diagonal().real().sum() / static_cast<double>(n);
  const double jitter = kJitter * std::max(mean_diag, 0.0);
  DenseMatrix shifted = c;
  shifted.diagonal().array() += jitter;
  if (jitter > 0.0 && try_cholesky(shifted, factor)) return factor;
  throw NotPositiveDefinite("covariance is indefinite beyond the jitter tolerance");
}

HermitianSolver::HermitianSolver(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("hermitian_solve: matrix is not square");
  if (!is_hermitian(a)) throw std::invalid_argument("hermitian_solve: matrix is not Hermitian");
  if (!try_cholesky(a, factor_)) {
    const double mean_diag = a.diagonal().real().sum() / static_cast<double>(a.rows());
    DenseMatrix shifted = a;
    shifted.diagonal().array() += kJitter * std::max(mean_diag, 0.0);
    if (!(mean_diag > 0.0) || !try_cholesky(shifted, factor_))
      throw NotPositiveDefinite("hermitian_solve: matrix is singular beyond the jitter tolerance");
    jittered_ = true;
  }
}

Eigen::VectorXcd HermitianSolver::solve(const Eigen::VectorXcd& b) const {
  if (b.size() != factor_.rows()) throw std::invalid_argument("hermitian_solve: dimension mismatch");
  Eigen::VectorXcd x = factor_.triangularView<Eigen::Lower>().solve(b);
  factor_.triangularView<Eigen::Lower>().adjoint().solveInPlace(x);
  return x;
}

ComplexVector HermitianSolver::solve(std::span<const cplx> b) const {
  if (b.size() != size()) throw std::invalid_argument("hermitian_solve: dimension mismatch");
  return to_vector(solve(Eigen::VectorXcd(as_eigen(b))));
}

ComplexVector hermitian_solve(const DenseMatrix& a, std::span<const cplx> b) {
  if (static_cast<std::size_t>(a.rows()) != b.size())
    throw std::invalid_argument("hermitian_solve: dimension mismatch");
  return HermitianSolver(a).solve(b);
}

GaussianSampler::GaussianSampler(const ToeplitzFirstRow& c) : GaussianSampler(toeplitz_dense(c)) {}

GaussianSampler::GaussianSampler(const DenseMatrix& c)
    : size_(static_cast<std::size_t>(c.rows())), factor_(psd_factor(c)) {}

GaussianSampler::GaussianSampler(const CirculantSpectrum& c) : size_(c.size()), circulant_(true) {
  if (c.size() == 0) throw std::invalid_argument("GaussianSampler: empty spectrum");
  sqrt_spectrum_.resize(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c.eigenvalues[k] < 0.0) throw NotPositiveDefinite("circulant spectrum has a negative eigenvalue");
    sqrt_spectrum_[k] = std::sqrt(c.eigenvalues[k]);
  }
}

ComplexVector GaussianSampler::draw(Rng& rng) const {
  ComplexVector w(size_);
  for (auto& x : w) x = standard_complex_normal(rng);
  if (circulant_) {
    for (std::size_t k = 0; k < size_; ++k) w[k] *= sqrt_spectrum_[k];
    return unitary_dft(w, true);
  }
  ComplexVector out(size_, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < size_; ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j <= i; ++j) acc += factor_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * w[j];
    out[i] = acc;
  }
  return out;
}

std::vector<ComplexVector> sample_complex_gaussian(const ToeplitzFirstRow& c, std::size_t count, Rng& rng) {
  const GaussianSampler sampler(c);
  std::vector<ComplexVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.draw(rng));
  return out;
}

std::vector<ComplexVector> sample_complex_gaussian(const CirculantSpectrum& c, std::size_t count, Rng& rng) {
  const GaussianSampler sampler(c);
  std::vector<ComplexVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.draw(rng));
  return out;
}

double squared_norm(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return s;
}

Eigen::Map<const Eigen::VectorXcd> as_eigen(std::span<const cplx> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

ComplexVector to_vector(const Eigen::VectorXcd& v) { return ComplexVector(v.data(), v.data() + v.size()); }

}  // namespace mcce::linalg
