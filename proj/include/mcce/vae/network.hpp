#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

// Conditionally Gaussian VAE over the joint variable [h1; h_int].
//
// Encoder: Fourier-domain input stacked as (re, im) channels, a stack of
// stride-2 circular 1-D convolutions with ReLU, then two dense heads for
// the latent mean and log-variance.
// Decoder: dense layer back to the deepest conv shape, mirrored stride-2
// transposed convolutions, and a linear output with three channels per
// block: Fourier-domain mean (re, im) and a raw spectrum whose softplus plus
// kSpectrumFloor is the circulant covariance spectrum.
//
// Activations are stored feature-major with the batch index innermost, so
// every layer is one GEMM over the whole batch.

namespace mcce::vae {

inline constexpr double kSpectrumFloor = 1e-6;

struct ModelConfig {
  std::size_t antennas = 32;
  std::size_t latent_dim = 32;
  std::size_t num_blocks = 2;
  std::vector<std::size_t> encoder_channels{8, 16, 32};
  std::vector<std::size_t> decoder_channels{64, 32, 16};
  std::size_t kernel = 7;
  bool genie = false;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  // Defaults for the two-block model and the single-cell ablation model.
  // The single-cell latent and decoder widths are half the two-block ones.
  static ModelConfig multi_cell(std::size_t antennas);
  static ModelConfig single_cell(std::size_t antennas);
};

struct ModelParams {
  std::vector<double> values;

  bool operator==(const ModelParams&) const = default;
};

// Named slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset;
  std::size_t rows;
  std::size_t cols;

  std::size_t size() const { return rows * cols; }
};

struct ConvGeometry {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t in_length;
  std::size_t out_length;
  std::size_t kernel;
  std::size_t pad;
};

// Scratch buffers for one batch size. Reused across calls; not shareable
// between threads.
struct Workspace {
  std::size_t capacity = 0;

  std::vector<double> input;    // 2M x B
  std::vector<double> targets;  // blocks*2M x B
  std::vector<double> noise;    // blocks x B
  std::vector<double> eps;      // Lz x B

  std::vector<std::vector<double>> enc_act;   // per conv layer output
  std::vector<std::vector<double>> enc_cols;  // im2col of each conv input
  std::vector<double> mu, log_var, sigma, z;
  std::vector<std::vector<double>> dec_act;   // dense output + hidden tconv outputs
  std::vector<double> out;                    // heads, (3*blocks)*M x B

  std::vector<double> sample_elbo, sample_recon, sample_kl;

  // Backward scratch.
  std::vector<std::vector<double>> d_enc_act;
  std::vector<std::vector<double>> d_dec_act;
  std::vector<double> d_out, d_mu, d_log_var, d_z;
  std::vector<double> cols_scratch, weight_scratch;
};

class Network {
 public:
  explicit Network(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::size_t parameter_count() const { return parameter_count_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(const std::string& name) const;

  ModelParams initialize(std::uint64_t seed) const;

  Workspace make_workspace(std::size_t batch) const;

  // Requires ws.input, ws.targets, ws.noise and ws.eps for `batch` columns.
  // Returns sum over the batch of the one-sample ELBO; per-sample terms land
  // in ws.sample_*. With grad != nullptr the gradient of that sum is added
  // into *grad.
  double evaluate(const std::vector<double>& params, Workspace& ws, std::size_t batch,
                  std::vector<double>* grad) const;

  // Encoder, z = mu, decoder. Reads ws.input; fills ws.mu/log_var/out.
  void infer(const std::vector<double>& params, Workspace& ws, std::size_t batch) const;

  // Decoder only from ws.z.
  void decode(const std::vector<double>& params, Workspace& ws, std::size_t batch) const;

  // Encoder only from ws.input (fills mu, log_var, sigma).
  void encode(const std::vector<double>& params, Workspace& ws, std::size_t batch) const;

  std::size_t latent_dim() const { return config_.latent_dim; }
  std::size_t antennas() const { return config_.antennas; }
  std::size_t blocks_out() const { return config_.num_blocks; }
  std::size_t input_dim() const { return 2 * config_.antennas; }
  std::size_t target_dim() const { return 2 * config_.antennas * config_.num_blocks; }
  std::size_t output_channels() const { return 3 * config_.num_blocks; }

 private:
  void decoder_backward(const std::vector<double>& params, Workspace& ws, std::size_t batch,
                        std::vector<double>& grad) const;
  void encoder_backward(const std::vector<double>& params, Workspace& ws, std::size_t batch,
                        std::vector<double>& grad) const;
  double heads_loss(Workspace& ws, std::size_t batch, bool want_grad) const;

  ModelConfig config_;
  std::vector<ConvGeometry> enc_;
  std::vector<ConvGeometry> dec_;  // transposed convs, small -> big
  std::size_t feature_dim_ = 0;    // flattened deepest encoder activation
  std::size_t dense_out_ = 0;      // decoder dense output size
  std::vector<ParamBlock> blocks_;
  std::vector<std::size_t> enc_w_, enc_b_, dec_w_, dec_b_;
  std::size_t mu_w_ = 0, mu_b_ = 0, lv_w_ = 0, lv_b_ = 0, dense_w_ = 0, dense_b_ = 0;
  std::size_t parameter_count_ = 0;
};

}  // namespace mcce::vae
