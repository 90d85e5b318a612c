#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcce/rng.hpp"
#include "mcce/scenario.hpp"
#include "mcce/types.hpp"
#include "mcce/vae/network.hpp"

namespace mcce::vae {

struct LatentStats {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> log_var;
  std::vector<double> z;  // empty until reparameterized
};

// Decoder moments. Means are given in both domains; the spectra define
// C = F^H diag(c) F. Single-block models leave mu_int and c_int empty.
struct CondGaussianParams {
  ComplexVector mu1;
  ComplexVector mu_int;
  CirculantSpectrum c1;
  CirculantSpectrum c_int;
  ComplexVector mu1_freq;
  ComplexVector mu_int_freq;
};

// Antenna-domain encoder input, per-block targets and noise variances.
struct ElboSample {
  ComplexVector input;
  std::vector<ComplexVector> targets;
  std::vector<double> noise;
};

// Noisy mode: input y, targets (y1, y2) with (sigma1^2, sigma2^2).
// Genie mode: input h1 + h_int, targets (h1, h_int), zero noise.
// Single-block models train on the cell of interest alone: input and
// target y1 with sigma1^2 (genie: h1 with zero noise).
ElboSample make_elbo_sample(const scenario::DatasetRecord& record, const ModelConfig& config);

struct ElboTerms {
  double elbo = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  LatentStats latent;
  CondGaussianParams moments;
};

// softplus(raw) + kSpectrumFloor
double spectrum_from_raw(double raw);

LatentStats encoder_forward(const Network& net, const ModelParams& params, std::span<const cplx> y);

// z = mu + sigma * eps
std::vector<double> reparameterize(const LatentStats& stats, std::span<const double> eps);
std::vector<double> reparameterize(const LatentStats& stats, Rng& rng);

CondGaussianParams decoder_forward(const Network& net, const ModelParams& params, std::span<const double> z);

ElboTerms elbo(const Network& net, const ModelParams& params, const ElboSample& sample,
               std::span<const double> eps);

// Gradient of the one-sample ELBO with respect to the flat parameter vector.
std::vector<double> elbo_gradients(const Network& net, const ModelParams& params, const ElboSample& sample,
                                   std::span<const double> eps);

// Fourier-domain samples in row-per-sample layout, ready to be gathered
// into a Workspace.
struct SampleBank {
  std::size_t count = 0;
  std::size_t input_dim = 0;
  std::size_t target_dim = 0;
  std::size_t blocks = 0;
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<double> noise;

  void gather(std::span<const std::size_t> indices, Workspace& ws) const;
};

SampleBank make_sample_bank(std::span<const ElboSample> samples, const ModelConfig& config);
SampleBank make_sample_bank(const scenario::Dataset& dataset, const ModelConfig& config);

// Writes one antenna-domain encoder input into column `col` of ws.input.
void pack_input(std::span<const cplx> signal, Workspace& ws, std::size_t col, std::size_t batch);

// Decoder moments for column `col` after Network::decode/infer.
CondGaussianParams unpack_moments(const Network& net, const Workspace& ws, std::size_t col, std::size_t batch);

// Trained model used for estimation: encoder input -> z = mu -> moments.
class VaeModel {
 public:
  VaeModel(ModelConfig config, ModelParams params);

  const Network& network() const { return net_; }
  const ModelConfig& config() const { return net_.config(); }
  const ModelParams& params() const { return params_; }

  CondGaussianParams moments(std::span<const cplx> encoder_input) const;
  std::vector<CondGaussianParams> moments_batch(std::span<const ComplexVector> inputs, std::size_t threads = 1) const;

 private:
  Network net_;
  ModelParams params_;
};

}  // namespace mcce::vae
