#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcce/scenario.hpp"
#include "mcce/types.hpp"
#include "mcce/vae/model.hpp"

// Channel estimators for the cell of interest. Every estimator is an
// instance of the LMMSE formula
//   h1 = mu1 + C1 (C1 + C_int + sigma^2 I)^{-1} (y - mu1 - mu_int)
// with a different source for the moments.

namespace mcce::est {

enum class EstimatorKind { ls, scov, genie_cov, vae, vae_genie, vae_ignore, vae_awgn, vae_scov };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& tag);
const std::vector<EstimatorKind>& all_estimator_kinds();

// Decoder block count a VAE kind needs; 0 for the model-free kinds.
std::size_t required_blocks(EstimatorKind kind);
bool is_vae_kind(EstimatorKind kind);

// Circulant moments: elementwise in the Fourier domain.
ComplexVector lmmse_core(std::span<const cplx> mu1, const CirculantSpectrum& c1, std::span<const cplx> mu_int,
                         const CirculantSpectrum& c_int, double sigma_sq, std::span<const cplx> y);

// Dense moments.
ComplexVector lmmse_core(std::span<const cplx> mu1, const DenseMatrix& c1, std::span<const cplx> mu_int,
                         const DenseMatrix& c_int, double sigma_sq, std::span<const cplx> y);

// Dense LMMSE gain W = C1 (C1 + C_int + sigma^2 I)^{-1}, reusable across
// observations that share the moments.
class DenseLmmse {
 public:
  DenseLmmse(const DenseMatrix& c1, const DenseMatrix& c_int, double sigma_sq);

  ComplexVector apply(std::span<const cplx> mu1, std::span<const cplx> mu_int, std::span<const cplx> y) const;
  const DenseMatrix& gain() const { return gain_; }

 private:
  DenseMatrix gain_;
};

ComplexVector ls_estimate(std::span<const cplx> y);

// Sample moments per cell: index 0 is the cell of interest.
struct SampleStats {
  std::vector<ComplexVector> mu_hat;
  std::vector<DenseMatrix> c_hat;
  std::size_t count = 0;

  // Sums over cells 1..L-1.
  ComplexVector interference_mean() const;
  DenseMatrix interference_cov() const;
};

// channels[cell][record]
SampleStats scov_fit(const std::vector<std::vector<ComplexVector>>& channels);

// Two-cell statistics (h1, h_int) of a dataset's stored channels.
SampleStats scov_fit(const scenario::Dataset& train);

ComplexVector scov_estimate(const SampleStats& stats, double sigma_sq, std::span<const cplx> y);

// scov_estimate with the gain cached per noise level.
class ScovEstimator {
 public:
  explicit ScovEstimator(SampleStats stats);

  ComplexVector estimate(double sigma_sq, std::span<const cplx> y) const;
  const SampleStats& stats() const { return stats_; }

 private:
  const DenseLmmse& gain_for(double sigma_sq) const;

  SampleStats stats_;
  ComplexVector mu_int_;
  DenseMatrix c_int_;
  mutable std::mutex guard_;
  mutable std::map<double, DenseLmmse> cache_;
};

// True per-record CCMs: C1 from cell 0, C_int summed over the other cells,
// zero means.
ComplexVector genie_cov_estimate(const scenario::DatasetRecord& record, double sigma_sq, std::span<const cplx> y);

// tr(C1 - C1 C_y^{-1} C1) / M for the record's true CCMs.
double genie_cov_mse(const scenario::DatasetRecord& record, double sigma_sq);

// Plug-in step of the VAE kinds given decoder moments.
//   vae, vae-genie: (mu1, c1, mu_int, c_int)
//   vae-ignore:     (mu1, c1, 0, 0)
//   vae-awgn:       (mu1, c1, 0, alpha^2 I), alpha^2 = tr(C_int_hat)/M
//   vae-scov:       (mu1, c1, mu_int_hat, C_int_hat), dense
ComplexVector vae_plugin(EstimatorKind kind, const vae::CondGaussianParams& moments, double sigma_sq,
                         std::span<const cplx> y, const SampleStats* interference = nullptr);

// Full VAE estimate. encoder_input defaults to y; vae-genie needs the
// noiseless h1 + h_int there.
ComplexVector vae_estimate(const vae::VaeModel& model, EstimatorKind kind, std::span<const cplx> y, double sigma_sq,
                           const SampleStats* interference = nullptr, std::span<const cplx> encoder_input = {});

// Throws std::invalid_argument naming both block counts on mismatch.
void require_model_for(EstimatorKind kind, const vae::ModelConfig& config);

}  // namespace mcce::est
