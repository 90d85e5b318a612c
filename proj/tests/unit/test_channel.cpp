#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "mcce/channel.hpp"
#include "mcce/linalg.hpp"
#include "test_util.hpp"

using namespace mcce;
using namespace mcce::channel;

namespace {

constexpr double kPi = std::numbers::pi;

// Periodic trapezoid of a density over [-pi, pi).
double trapezoid_mass(const ClusterSet& delta, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += pas_eval(delta, -kPi + 2.0 * kPi * double(i) / double(n));
  return s * 2.0 * kPi / double(n);
}

// J0 by its power series, accumulated in long double.
double bessel_j0_series(double x) {
  long double term = 1.0L, sum = 1.0L;
  const long double q = -(long double)x * x / 4.0L;
  for (int k = 1; k < 200; ++k) {
    term *= q / ((long double)k * k);
    sum += term;
  }
  return double(sum);
}

Eigen::VectorXd eigenvalues(const ToeplitzFirstRow& r) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(linalg::toeplitz_dense(r));
  return es.eigenvalues();
}

}  // namespace

TEST_CASE("steering vectors") {
  for (const auto& x : steering_vector(0.0, 8)) CHECK(std::abs(x - cplx(1.0)) < 1e-15);
  const auto a = steering_vector(kPi / 2.0, 4);
  const double expect[] = {1.0, -1.0, 1.0, -1.0};
  for (int m = 0; m < 4; ++m) CHECK(std::abs(a[m] - cplx(expect[m])) < 1e-12);
  for (double t : {-1.2, -0.3, 0.4, 1.5, 2.9}) {
    const auto v = steering_vector(t, 32);
    CHECK(std::abs(linalg::squared_norm(v) - 32.0) < 1e-10);
  }
}

TEST_CASE("angle wrapping") {
  CHECK(wrap_degrees(190.0) == doctest::Approx(-170.0));
  CHECK(wrap_degrees(-190.0) == doctest::Approx(170.0));
  CHECK(wrap_degrees(45.0) == doctest::Approx(45.0));
  CHECK(wrap_degrees(540.0) == doctest::Approx(-180.0));
}

TEST_CASE("cluster geometry sampling") {
  Rng rng(5);
  const ClusterParams params;
  for (int i = 0; i < 2000; ++i) {
    const auto d = sample_delta(AngularPrior::uniform(), params, rng);
    REQUIRE(d.centers_deg.size() == params.count);
    double total = 0.0;
    for (double c : d.centers_deg) {
      CHECK(c >= -180.0);
      CHECK(c < 180.0);
    }
    for (double p : d.powers) {
      CHECK(p > 0.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }

  double mean = 0.0;
  std::size_t n = 0;
  Rng g(6);
  for (int i = 0; i < 100000 / 3 + 1; ++i)
    for (double c : sample_delta(AngularPrior::gaussian(45.0, 30.0), params, g).centers_deg) {
      mean += c;
      ++n;
    }
  mean /= double(n);
  CHECK(std::abs(mean - 45.0) < 0.5);

  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i)
    CHECK(sample_delta(AngularPrior::gaussian(0.0, 30.0), params, a) ==
          sample_delta(AngularPrior::gaussian(0.0, 30.0), params, b));

  CHECK_THROWS(ClusterParams{0, 2.0}.validate());
  CHECK_THROWS(AngularPrior::gaussian(0.0, -1.0).validate());
}

TEST_CASE("power angular spectrum") {
  const ClusterSet one{{0.0}, {1.0}, 2.0};
  const double peak = pas_eval(one, 0.0);
  for (double t = -kPi; t < kPi; t += 0.01) CHECK(pas_eval(one, t) <= peak);
  CHECK(pas_eval(one, 0.001) < peak);
  CHECK(pas_eval(one, -0.001) < peak);

  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto d = sample_delta(AngularPrior::uniform(), {3, 2.0}, rng);
    // Independent oracle: a fine uniform trapezoid; its kink error is O(h^2).
    CHECK(std::abs(trapezoid_mass(d, 1u << 20) - 1.0) < 1e-6);
    CHECK(std::abs(CcmQuadrature(2.0, 32).mass(d) - 1.0) < 1e-6);
  }

  const ClusterSet two{{-60.0, 60.0}, {0.5, 0.5}, 2.0};
  const std::size_t n = 1u << 18;
  double left = 0.0, right = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = -kPi + 2.0 * kPi * (double(i) + 0.5) / double(n);
    (t < 0.0 ? left : right) += pas_eval(two, t) * 2.0 * kPi / double(n);
  }
  CHECK(std::abs(left - 0.5) < 1e-3);
  CHECK(std::abs(right - 0.5) < 1e-3);
}

TEST_CASE("constant density gives the Bessel correlation") {
  const auto r = toeplitz_row_from_density([](double) { return 1.0 / (2.0 * kPi); }, 32);
  CHECK(std::abs(r.row[0] - cplx(1.0)) < 1e-12);
  for (std::size_t m = 0; m < 32; ++m) {
    const double x = kPi * double(m);
    CHECK(std::abs(r.row[m].real() - std::cyl_bessel_j(0.0, x)) < 1e-6);
    CHECK(std::abs(r.row[m].imag()) < 1e-6);
    if (m < 8) CHECK(std::abs(std::cyl_bessel_j(0.0, x) - bessel_j0_series(x)) < 1e-9);
  }
  // Cross-check against a 1e6-point midpoint rule of (1/2pi) int cos(pi m sin t) dt.
  for (std::size_t m : {1u, 2u, 7u, 31u}) {
    const std::size_t n = 1000000;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::cos(kPi * double(m) * std::sin(-kPi + 2.0 * kPi * (i + 0.5) / n));
    CHECK(std::abs(r.row[m].real() - s / double(n)) < 1e-6);
  }
  CHECK(r.row[1].real() == doctest::Approx(-0.3042).epsilon(1e-3));
  CHECK(r.row[2].real() == doctest::Approx(0.2203).epsilon(1e-3));
}

TEST_CASE("CCM construction") {
  Rng rng(11);
  const std::size_t M = 32;
  for (int i = 0; i < 1000; ++i) {
    const auto d = sample_delta(i % 2 ? AngularPrior::uniform() : AngularPrior::gaussian(0.0, 30.0), {}, rng);
    const auto ccm = build_ccm(d, M);
    CHECK(std::abs(ccm.first_row.row[0] - cplx(1.0)) < 1e-12);
    CHECK(eigenvalues(ccm.first_row).minCoeff() >= -1e-9);
    CHECK(ccm.source_delta == d);
  }

  // Narrow single cluster: rank one in the limit.
  const ClusterSet narrow{{20.0}, {1.0}, 0.1};
  const auto ev = eigenvalues(build_ccm(narrow, M).first_row);
  CHECK(ev[M - 2] < 0.01 * double(M));
  CHECK(ev[M - 1] > 0.9 * double(M));

  // Quadrature agrees with direct integration of the density.
  const ClusterSet three{{-40.0, 10.0, 75.0}, {0.2, 0.5, 0.3}, 2.0};
  const auto direct_density = toeplitz_row_from_density([&](double t) { return pas_eval(three, t); }, 8, 1u << 20);
  const auto quad = build_ccm(three, 8).first_row;
  CHECK(testutil::max_abs_diff(direct_density.row, quad.row) < 1e-6);

  // Refinement doubles the node count and leaves r unchanged.
  const auto fine = build_ccm(three, M, {36.0, 2}).first_row;
  CHECK(testutil::max_abs_diff(build_ccm(three, M).first_row.row, fine.row) < 1e-8);
  CHECK(CcmQuadrature(2.0, M, {36.0, 2}).nodes_per_cluster() == 2 * CcmQuadrature(2.0, M).nodes_per_cluster());

  // A narrow broadside prior moves mean beam power from endfire to broadside.
  auto beam_power = [&](AngularPrior prior) {
    Rng r(21);
    DenseMatrix mean = DenseMatrix::Zero(M, M);
    for (int i = 0; i < 1000; ++i) mean += linalg::toeplitz_dense(build_ccm(sample_delta(prior, {}, r), M).first_row);
    mean /= 1000.0;
    auto q = [&](double theta) {
      const auto a = steering_vector(theta, M);
      return (linalg::as_eigen(a).adjoint() * mean * linalg::as_eigen(a))(0, 0).real() / double(M * M);
    };
    return std::pair{q(0.0), q(kPi / 2.0)};
  };
  const auto [narrow_broadside, narrow_endfire] = beam_power(AngularPrior::gaussian(0.0, 30.0));
  const auto [wide_broadside, wide_endfire] = beam_power(AngularPrior::uniform());
  CHECK(narrow_broadside > wide_broadside);
  CHECK(narrow_endfire < 0.1 * wide_endfire);
}

TEST_CASE("cell channel draws") {
  Ccm zero;
  zero.first_row.row.assign(4, cplx(0.0));
  Rng rng(1);
  for (const auto& x : sample_cell_channel(zero, rng)) CHECK(x == cplx(0.0));

  const ClusterSet d{{-10.0, 30.0}, {0.6, 0.4}, 2.0};
  const auto ccm = build_ccm(d, 8);
  const DenseMatrix c = linalg::toeplitz_dense(ccm.first_row);
  DenseMatrix sc = DenseMatrix::Zero(8, 8);
  Rng r2(2);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto h = sample_cell_channel(ccm, r2);
    sc += linalg::as_eigen(h) * linalg::as_eigen(h).adjoint();
  }
  sc /= double(n);
  CHECK((sc - c).norm() <= 0.02 * c.norm());

  Rng a(4), b(4);
  CHECK(sample_cell_channel(ccm, a) == sample_cell_channel(ccm, b));
}
