#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mcce {

using cplx = std::complex<double>;
using cfloat = std::complex<float>;

// Antenna-domain (or Fourier-domain) complex channel vector.
using ComplexVector = std::vector<cplx>;

using DenseMatrix = Eigen::MatrixXcd;

// Eigenvalues of a circulant matrix C = F^H diag(c) F, F the unitary DFT.
struct CirculantSpectrum {
  std::vector<double> eigenvalues;

  std::size_t size() const { return eigenvalues.size(); }
};

// First row r of a Hermitian Toeplitz matrix, C[i][j] = r[j - i] for j >= i.
struct ToeplitzFirstRow {
  ComplexVector row;

  std::size_t size() const { return row.size(); }
};

}  // namespace mcce
