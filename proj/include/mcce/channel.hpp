#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mcce/rng.hpp"
#include "mcce/types.hpp"

// 3GPP-style spatial channel model for a half-wavelength ULA: per-draw
// cluster angles delta, a wrapped-Laplacian power angular spectrum g(theta;
// delta), and the Toeplitz covariance C = int g(theta) a(theta) a(theta)^H.

namespace mcce::channel {

struct AngularPrior {
  enum class Kind { uniform, gaussian };

  Kind kind = Kind::uniform;
  double center_deg = 0.0;
  double std_deg = 0.0;

  static AngularPrior uniform() { return {}; }
  static AngularPrior gaussian(double center_deg, double std_deg) { return {Kind::gaussian, center_deg, std_deg}; }

  void validate() const;
  std::string label() const;
  bool operator==(const AngularPrior&) const = default;
};

struct ClusterParams {
  std::size_t count = 3;
  double spread_deg = 2.0;  // per-cluster RMS angular spread of the Laplacian

  void validate() const;
  bool operator==(const ClusterParams&) const = default;
};

// One propagation geometry delta: cluster centers, powers (sum to 1), spread.
struct ClusterSet {
  std::vector<double> centers_deg;
  std::vector<double> powers;
  double spread_deg = 2.0;

  bool operator==(const ClusterSet&) const = default;
};

struct Ccm {
  ToeplitzFirstRow first_row;
  ClusterSet source_delta;
};

double wrap_degrees(double deg);

// a[m] = exp(j pi m sin(theta)), m = 0..antennas-1.
ComplexVector steering_vector(double theta_rad, std::size_t antennas);

ClusterSet sample_delta(const AngularPrior& prior, const ClusterParams& params, Rng& rng);

// Power angular spectrum density (1/rad) at theta.
double pas_eval(const ClusterSet& delta, double theta_rad);

struct QuadratureOptions {
  double truncation = 36.0;     // Laplacian tail cut, in units of the scale parameter
  std::size_t refinement = 1;   // panel subdivision factor (2 doubles the node count)
};

// Quadrature for cluster mixtures with a fixed spread and array size. Each
// cluster is integrated on its own support with the kink at the center
// resolved by splitting there: composite 8-point Gauss-Legendre panels in the
// scaled offset u = |theta - center| / b. Nodes and weights are cached so
// building a CCM costs one sincos per node plus a power-sum kernel call.
class CcmQuadrature {
 public:
  CcmQuadrature(double spread_deg, std::size_t antennas, QuadratureOptions options = {});

  // First row normalized to r[0] = 1 (trace M); throws if the result is not PSD.
  ToeplitzFirstRow first_row(const ClusterSet& delta) const;

  // Total quadrature mass of the PAS (should be 1).
  double mass(const ClusterSet& delta) const;

  std::size_t antennas() const { return antennas_; }
  double spread_deg() const { return spread_deg_; }
  std::size_t nodes_per_cluster() const { return offsets_.size(); }

 private:
  std::size_t antennas_;
  double spread_deg_;
  std::vector<double> offsets_;
  std::vector<double> weights_;
  std::vector<double> cos_offsets_;
  std::vector<double> sin_offsets_;
};

Ccm build_ccm(const ClusterSet& delta, std::size_t antennas, QuadratureOptions options = {});

// Generic smooth PAS: periodic trapezoid on a uniform grid over [-pi, pi),
// normalized to r[0] = 1.
ToeplitzFirstRow toeplitz_row_from_density(const std::function<double(double)>& density, std::size_t antennas,
                                           std::size_t grid_points = 4096);

ComplexVector sample_cell_channel(const Ccm& ccm, Rng& rng);

}  // namespace mcce::channel
