#include "mcce/channel.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mcce/errors.hpp"
#include "mcce/linalg.hpp"
#include "mcce/simd/kernels.hpp"

namespace mcce::channel {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Laplacian scale b for an RMS spread sigma: the density is exp(-|x|/b) / (2b).
double laplacian_scale(double spread_deg) { return spread_deg * kDeg / std::numbers::sqrt2; }

}  // namespace

void AngularPrior::validate() const {
  if (kind == Kind::gaussian) {
    if (!(std_deg > 0.0)) throw std::invalid_argument("gaussian angular prior needs std_deg > 0");
    if (center_deg < -180.0 || center_deg > 180.0)
      throw std::invalid_argument("gaussian angular prior center must lie in [-180, 180] degrees");
  }
}

std::string AngularPrior::label() const {
  if (kind == Kind::uniform) return "uniform";
  auto fmt = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  return "gauss(" + fmt(center_deg) + "," + fmt(std_deg) + ")";
}

void ClusterParams::validate() const {
  if (count == 0) throw std::invalid_argument("cluster count must be >= 1");
  if (!(spread_deg > 0.0)) throw std::invalid_argument("cluster angular spread must be > 0");
}

double wrap_degrees(double deg) {
  double w = deg - 360.0 * std::floor((deg + 180.0) / 360.0);
  if (w >= 180.0) w -= 360.0;
  return w;
}

ComplexVector steering_vector(double theta_rad, std::size_t antennas) {
  if (antennas == 0) throw std::invalid_argument("steering_vector: antenna count must be >= 1");
  ComplexVector a(antennas);
  const double s = std::sin(theta_rad);
  for (std::size_t m = 0; m < antennas; ++m) a[m] = std::polar(1.0, kPi * static_cast<double>(m) * s);
  return a;
}

ClusterSet sample_delta(const AngularPrior& prior, const ClusterParams& params, Rng& rng) {
  prior.validate();
  params.validate();
  ClusterSet out;
  out.spread_deg = params.spread_deg;
  out.centers_deg.resize(params.count);
  out.powers.resize(params.count);
  for (auto& c : out.centers_deg) {
    if (prior.kind == AngularPrior::Kind::uniform) {
      c = -180.0 + 360.0 * uniform01(rng);
      if (c >= 180.0) c = -180.0;
    } else {
      c = wrap_degrees(prior.center_deg + prior.std_deg * standard_normal(rng));
    }
  }
  // Flat Dirichlet via normalized unit exponentials.
  double total = 0.0;
  std::exponential_distribution<double> expo(1.0);
  for (auto& p : out.powers) {
    p = expo(rng);
    total += p;
  }
  for (auto& p : out.powers) p /= total;
  return out;
}

double pas_eval(const ClusterSet& delta, double theta_rad) {
  const double b = laplacian_scale(delta.spread_deg);
  const double norm = 1.0 / (2.0 * b);
  const int images = static_cast<int>(std::ceil(40.0 * b / (2.0 * kPi))) + 1;
  double g = 0.0;
  for (std::size_t c = 0; c < delta.centers_deg.size(); ++c) {
    const double d = std::remainder(theta_rad - delta.centers_deg[c] * kDeg, 2.0 * kPi);
    double acc = 0.0;
    for (int k = -images; k <= images; ++k) acc += std::exp(-std::abs(d + 2.0 * kPi * k) / b);
    g += delta.powers[c] * norm * acc;
  }
  return g;
}

CcmQuadrature::CcmQuadrature(double spread_deg, std::size_t antennas, QuadratureOptions options)
    : antennas_(antennas), spread_deg_(spread_deg) {
  if (antennas == 0) throw std::invalid_argument("CcmQuadrature: antenna count must be >= 1");
  if (!(spread_deg > 0.0)) throw std::invalid_argument("CcmQuadrature: spread must be > 0");
  if (options.refinement == 0) throw std::invalid_argument("CcmQuadrature: refinement must be >= 1");
  const double b = laplacian_scale(spread_deg);
  // Panel width in u keeps the phase change of exp(-j pi m sin theta) per
  // panel below ~4 rad for the largest lag.
  double du = 2.0;
  if (antennas > 1) du = std::min(du, 4.0 / (kPi * static_cast<double>(antennas - 1) * b));
  du /= static_cast<double>(options.refinement);
  const auto panels = static_cast<std::size_t>(std::ceil(options.truncation / du));
  du = options.truncation / static_cast<double>(panels);

  offsets_.reserve(2 * panels * kGaussNodes.size());
  for (int side : {-1, 1}) {
    for (std::size_t p = 0; p < panels; ++p) {
      const double u0 = du * static_cast<double>(p);
      for (std::size_t i = 0; i < kGaussNodes.size(); ++i) {
        const double u = u0 + 0.5 * du * (1.0 + kGaussNodes[i]);
        offsets_.push_back(side * b * u);
        weights_.push_back(0.5 * du * kGaussWeights[i] * 0.5 * std::exp(-u));
      }
    }
  }
  cos_offsets_.resize(offsets_.size());
  sin_offsets_.resize(offsets_.size());
  for (std::size_t k = 0; k < offsets_.size(); ++k) {
    cos_offsets_[k] = std::cos(offsets_[k]);
    sin_offsets_[k] = std::sin(offsets_[k]);
  }
}

double CcmQuadrature::mass(const ClusterSet& delta) const {
  double w = 0.0;
  for (double x : weights_) w += x;
  double p = 0.0;
  for (double x : delta.powers) p += x;
  return w * p;
}

ToeplitzFirstRow CcmQuadrature::first_row(const ClusterSet& delta) const {
  if (delta.centers_deg.size() != delta.powers.size())
    throw std::invalid_argument("ClusterSet: centers and powers differ in length");
  if (std::abs(delta.spread_deg - spread_deg_) > 1e-12)
    throw std::invalid_argument("ClusterSet spread does not match the quadrature spread");
  const std::size_t per = offsets_.size();
  const std::size_t nodes = per * delta.centers_deg.size();
  std::vector<double> w(nodes), zr(nodes), zi(nodes);
  for (std::size_t c = 0; c < delta.centers_deg.size(); ++c) {
    const double center = delta.centers_deg[c] * kDeg;
    const double sc = std::sin(center);
    const double cc = std::cos(center);
    for (std::size_t k = 0; k < per; ++k) {
      const std::size_t idx = c * per + k;
      const double s = sc * cos_offsets_[k] + cc * sin_offsets_[k];
      w[idx] = delta.powers[c] * weights_[k];
      zr[idx] = std::cos(kPi * s);
      zi[idx] = -std::sin(kPi * s);
    }
  }
  std::vector<double> re(antennas_), im(antennas_);
  simd::active().power_sums(w.data(), zr.data(), zi.data(), nodes, antennas_, re.data(), im.data());
  const double r0 = re[0];
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw NotPositiveDefinite("CCM quadrature produced zero power");
  ToeplitzFirstRow row;
  row.row.resize(antennas_);
  row.row[0] = cplx{1.0, 0.0};
  for (std::size_t m = 1; m < antennas_; ++m) row.row[m] = cplx{re[m] / r0, im[m] / r0};
  return row;
}

Ccm build_ccm(const ClusterSet& delta, std::size_t antennas, QuadratureOptions options) {
  const CcmQuadrature quad(delta.spread_deg, antennas, options);
  Ccm ccm{quad.first_row(delta), delta};
  // Positive weights make the sum PSD in exact arithmetic; this catches a
  // degenerate rule.
  (void)linalg::psd_factor(linalg::toeplitz_dense(ccm.first_row));
  return ccm;
}

ToeplitzFirstRow toeplitz_row_from_density(const std::function<double(double)>& density, std::size_t antennas,
                                           std::size_t grid_points) {
  if (antennas == 0) throw std::invalid_argument("toeplitz_row_from_density: antenna count must be >= 1");
  if (grid_points < 2) throw std::invalid_argument("toeplitz_row_from_density: grid too coarse");
  std::vector<double> w(grid_points), zr(grid_points), zi(grid_points);
  const double h = 2.0 * kPi / static_cast<double>(grid_points);
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double theta = -kPi + h * static_cast<double>(k);
    w[k] = h * density(theta);
    const double s = std::sin(theta);
    zr[k] = std::cos(kPi * s);
    zi[k] = -std::sin(kPi * s);
  }
  std::vector<double> re(antennas), im(antennas);
  simd::active().power_sums(w.data(), zr.data(), zi.data(), grid_points, antennas, re.data(), im.data());
  const double r0 = re[0];
  if (!(r0 > 0.0)) throw NotPositiveDefinite("density has no mass on the grid");
  ToeplitzFirstRow row;
  row.row.resize(antennas);
  row.row[0] = cplx{1.0, 0.0};
  for (std::size_t m = 1; m < antennas; ++m) row.row[m] = cplx{re[m] / r0, im[m] / r0};
  return row;
}

ComplexVector sample_cell_channel(const Ccm& ccm, Rng& rng) {
  return linalg::GaussianSampler(ccm.first_row).draw(rng);
}

}  // namespace mcce::channel
