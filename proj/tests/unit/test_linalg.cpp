#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mcce/errors.hpp"
#include "mcce/linalg.hpp"
#include "test_util.hpp"

using namespace mcce;
using namespace mcce::linalg;

namespace {

// Direct O(M^2) evaluation of the unitary DFT.
ComplexVector naive_dft(const ComplexVector& v, bool inverse) {
  const std::size_t M = v.size();
  ComplexVector out(M);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < M; ++k) {
    cplx s = 0.0;
    for (std::size_t m = 0; m < M; ++m)
      s += v[m] * std::polar(1.0, sign * 2.0 * std::numbers::pi * double(k * m) / double(M));
    out[k] = s / std::sqrt(double(M));
  }
  return out;
}

// Dense circulant built entrywise from the inverse transform of the spectrum:
// C[i][j] = (1/M) sum_k c_k exp(j 2 pi k (i - j) / M).
DenseMatrix circulant_oracle(const std::vector<double>& c) {
  const std::size_t M = c.size();
  DenseMatrix d(M, M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      cplx s = 0.0;
      for (std::size_t k = 0; k < M; ++k)
        s += c[k] * std::polar(1.0, 2.0 * std::numbers::pi * double(k) * (double(i) - double(j)) / double(M));
      d(i, j) = s / double(M);
    }
  return d;
}

ComplexVector matvec(const DenseMatrix& a, const ComplexVector& v) {
  return to_vector(a * as_eigen(v));
}

}  // namespace

TEST_CASE("unitary DFT of an impulse, norm preservation and inversion") {
  const ComplexVector e0{1.0, 0.0, 0.0, 0.0};
  for (const auto& x : unitary_dft(e0)) CHECK(std::abs(x - cplx(0.5, 0.0)) < 1e-15);

  for (std::size_t M : {1u, 2u, 3u, 8u, 17u, 32u, 128u}) {
    const auto v = testutil::random_cvec(M, 100 + M);
    const auto f = unitary_dft(v);
    CHECK(std::abs(testutil::norm(f) - testutil::norm(v)) < 1e-12 * std::max(1.0, testutil::norm(v)));
    CHECK(testutil::max_abs_diff(unitary_dft(f, true), v) < 1e-12);
    CHECK(testutil::max_abs_diff(f, naive_dft(v, false)) < 1e-12);
    CHECK(testutil::max_abs_diff(unitary_dft(v, true), naive_dft(v, true)) < 1e-12);
  }
  ComplexVector out(3);
  CHECK_THROWS_AS(unitary_dft(testutil::random_cvec(4, 1), out), std::invalid_argument);
  CHECK_THROWS_AS(unitary_dft(ComplexVector{}), std::invalid_argument);
}

TEST_CASE("circulant application") {
  const auto v = testutil::random_cvec(8, 7);
  const CirculantSpectrum ones{std::vector<double>(8, 1.0)};
  CHECK(testutil::max_abs_diff(circulant_apply(ones, v), v) < 1e-12);

  const auto cvec = testutil::random_vec(8, 8);
  CirculantSpectrum c;
  for (double x : cvec) c.eigenvalues.push_back(0.1 + std::abs(x));
  CHECK(testutil::max_abs_diff(circulant_apply(c, circulant_apply(c, v), true), v) < 1e-10);

  for (std::size_t M : {2u, 4u, 7u, 16u}) {
    CirculantSpectrum s;
    for (double x : testutil::random_vec(M, 30 + M)) s.eigenvalues.push_back(std::abs(x));
    const auto w = testutil::random_cvec(M, 40 + M);
    const DenseMatrix oracle = circulant_oracle(s.eigenvalues);
    CHECK(testutil::max_abs_diff(circulant_apply(s, w), matvec(oracle, w)) < 1e-12);
    CHECK((circulant_dense(s) - oracle).norm() < 1e-12);
  }

  CirculantSpectrum zero{std::vector<double>{1.0, 0.0, 2.0}};
  CHECK_THROWS_AS(circulant_apply(zero, testutil::random_cvec(3, 1), true), std::domain_error);
  CHECK_THROWS_AS(circulant_apply(ones, testutil::random_cvec(3, 1)), std::invalid_argument);
}

TEST_CASE("Toeplitz expansion") {
  const ToeplitzFirstRow r{{cplx(2.0, 0.0), cplx(0.5, 0.25), cplx(-0.1, 0.3)}};
  const DenseMatrix t = toeplitz_dense(r);
  CHECK(t(0, 0) == cplx(2.0));
  CHECK(t(1, 1) == cplx(2.0));
  CHECK(t(0, 1) == r.row[1]);
  CHECK(t(1, 2) == r.row[1]);
  CHECK(t(0, 2) == r.row[2]);
  CHECK(t(1, 0) == std::conj(r.row[1]));
  CHECK(t(2, 0) == std::conj(r.row[2]));
  CHECK(is_hermitian(t));
}

TEST_CASE("Hermitian solves") {
  const auto b = testutil::random_cvec(5, 3);
  const DenseMatrix I = DenseMatrix::Identity(5, 5);
  CHECK(testutil::max_abs_diff(hermitian_solve(I, b), b) < 1e-15);
  ComplexVector half = b;
  for (auto& x : half) x /= 2.0;
  CHECK(testutil::max_abs_diff(hermitian_solve(2.0 * I, b), half) < 1e-15);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const DenseMatrix a = testutil::random_psd(6, seed, 0.05);
    const auto rhs = testutil::random_cvec(6, seed + 99);
    const auto x = hermitian_solve(a, rhs);
    // Oracle: full-pivot LU inverse.
    const ComplexVector ref = to_vector(a.fullPivLu().inverse() * as_eigen(rhs));
    CHECK(testutil::max_abs_diff(x, ref) < 1e-8 * std::max(1.0, testutil::norm(ref)));
    const ComplexVector ax = matvec(a, x);
    ComplexVector res(6);
    for (int i = 0; i < 6; ++i) res[i] = ax[i] - rhs[i];
    CHECK(testutil::norm(res) / testutil::norm(rhs) <= 1e-8);
  }

  DenseMatrix nonherm = I;
  nonherm(0, 1) = cplx(1.0, 0.0);
  CHECK_THROWS_AS(hermitian_solve(nonherm, b), std::invalid_argument);
  DenseMatrix indefinite = I;
  indefinite(2, 2) = -1.0;
  CHECK_THROWS_AS(hermitian_solve(indefinite, b), NotPositiveDefinite);
}

TEST_CASE("PSD factor jitter policy") {
  // Rank-one PSD matrix: plain Cholesky fails, jitter succeeds.
  const auto a = testutil::random_cvec(4, 5);
  const DenseMatrix r1 = as_eigen(a) * as_eigen(a).adjoint();
  const DenseMatrix L = psd_factor(r1);
  CHECK((L * L.adjoint() - r1).norm() < 1e-6 * r1.norm());
  const DenseMatrix z = psd_factor(DenseMatrix::Zero(3, 3));
  CHECK(z.norm() == 0.0);
}

TEST_CASE("complex Gaussian sampling") {
  Rng rng(1);
  const ToeplitzFirstRow zero{ComplexVector(4, cplx(0.0))};
  for (const auto& s : sample_complex_gaussian(zero, 10, rng))
    for (const auto& x : s) CHECK(x == cplx(0.0));

  const ToeplitzFirstRow eye{{1.0, 0.0, 0.0, 0.0}};
  const auto draws = sample_complex_gaussian(eye, 100000, rng);
  for (std::size_t m = 0; m < 4; ++m) {
    double v = 0.0;
    for (const auto& d : draws) v += std::norm(d[m]);
    v /= double(draws.size());
    CHECK(v >= 0.98);
    CHECK(v <= 1.02);
  }

  // Random Toeplitz PSD: first row of an exponential correlation.
  ToeplitzFirstRow row;
  for (int m = 0; m < 6; ++m) row.row.push_back(std::pow(0.8, m) * std::polar(1.0, 0.4 * m));
  const DenseMatrix c = toeplitz_dense(row);
  Rng rng2(2);
  const auto many = sample_complex_gaussian(row, 200000, rng2);
  DenseMatrix sc = DenseMatrix::Zero(6, 6);
  for (const auto& d : many) sc += as_eigen(d) * as_eigen(d).adjoint();
  sc /= double(many.size());
  CHECK((sc - c).norm() <= 0.02 * c.norm());

  CirculantSpectrum spec{{2.0, 0.5, 1.0, 0.0}};
  Rng rng3(3);
  const auto cd = sample_complex_gaussian(spec, 200000, rng3);
  DenseMatrix sc2 = DenseMatrix::Zero(4, 4);
  for (const auto& d : cd) sc2 += as_eigen(d) * as_eigen(d).adjoint();
  sc2 /= double(cd.size());
  const DenseMatrix c2 = circulant_dense(spec);
  CHECK((sc2 - c2).norm() <= 0.02 * c2.norm());

  Rng a(77), b(77);
  CHECK(sample_complex_gaussian(row, 5, a) == sample_complex_gaussian(row, 5, b));
}
