#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <filesystem>

#include "mcce/rng.hpp"
#include "mcce/types.hpp"

namespace testutil {

inline mcce::ComplexVector random_cvec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  mcce::Rng rng(seed);
  mcce::ComplexVector v(n);
  for (auto& x : v) x = scale * mcce::standard_complex_normal(rng);
  return v;
}

inline std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  mcce::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = scale * mcce::standard_normal(rng);
  return v;
}

// Random Hermitian PSD matrix A A^H / n (plus optional ridge).
inline mcce::DenseMatrix random_psd(std::size_t n, std::uint64_t seed, double ridge = 0.0) {
  mcce::Rng rng(seed);
  mcce::DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = mcce::standard_complex_normal(rng);
  mcce::DenseMatrix c = a * a.adjoint() / double(n);
  c += ridge * mcce::DenseMatrix::Identity(n, n);
  return c;
}

inline double max_abs_diff(const mcce::ComplexVector& a, const mcce::ComplexVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double norm(const mcce::ComplexVector& a) {
  double s = 0.0;
  for (const auto& x : a) s += std::norm(x);
  return std::sqrt(s);
}

// Scratch directory removed at scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("mcce_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
