#include "mcce/vae/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mcce/errors.hpp"
#include "mcce/rng.hpp"
#include "mcce/simd/kernels.hpp"

namespace mcce::vae {
namespace {

constexpr std::uint64_t kInitStream = 0x494e4954;
constexpr double kOutputInitScale = 0.1;
// softplus(kUnitSpectrumRaw) = 1
constexpr double kUnitSpectrumRaw = 0.54132485461291810;

std::size_t half_up(std::size_t n) { return (n + 1) / 2; }

std::size_t wrap_index(std::ptrdiff_t p, std::size_t len) {
  const auto n = static_cast<std::ptrdiff_t>(len);
  p %= n;
  if (p < 0) p += n;
  return static_cast<std::size_t>(p);
}

// cols[(c*K + k)][o*B + b] = big[(c*big_len + wrap(2o + k - pad))*B + b]
void gather_taps(std::size_t channels, std::size_t big_len, std::size_t small_len, std::size_t kernel,
                 std::size_t pad, std::size_t batch, const double* big, double* cols) {
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < kernel; ++k) {
      double* dst = cols + (c * kernel + k) * small_len * batch;
      for (std::size_t o = 0; o < small_len; ++o) {
        const std::size_t p =
            wrap_index(static_cast<std::ptrdiff_t>(2 * o + k) - static_cast<std::ptrdiff_t>(pad), big_len);
        std::copy_n(big + (c * big_len + p) * batch, batch, dst + o * batch);
      }
    }
  }
}

// Adjoint of gather_taps: big += scatter(cols).
void scatter_taps(std::size_t channels, std::size_t big_len, std::size_t small_len, std::size_t kernel,
                  std::size_t pad, std::size_t batch, const double* cols, double* big) {
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const double* src = cols + (c * kernel + k) * small_len * batch;
      for (std::size_t o = 0; o < small_len; ++o) {
        const std::size_t p =
            wrap_index(static_cast<std::ptrdiff_t>(2 * o + k) - static_cast<std::ptrdiff_t>(pad), big_len);
        double* dst = big + (c * big_len + p) * batch;
        const double* s = src + o * batch;
        for (std::size_t b = 0; b < batch; ++b) dst[b] += s[b];
      }
    }
  }
}

// y[c][i] += bias[c] for each of `per_channel` entries, then optional ReLU.
void bias_activate(double* y, const double* bias, std::size_t channels, std::size_t per_channel, bool relu) {
  for (std::size_t c = 0; c < channels; ++c) {
    double* row = y + c * per_channel;
    const double bc = bias[c];
    if (relu) {
      for (std::size_t i = 0; i < per_channel; ++i) row[i] = std::max(0.0, row[i] + bc);
    } else {
      for (std::size_t i = 0; i < per_channel; ++i) row[i] += bc;
    }
  }
}

void relu_mask(double* dy, const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(y[i] > 0.0)) dy[i] = 0.0;
}

void accumulate_bias(double* dbias, const double* dy, std::size_t channels, std::size_t per_channel) {
  for (std::size_t c = 0; c < channels; ++c) {
    const double* row = dy + c * per_channel;
    double s = 0.0;
    for (std::size_t i = 0; i < per_channel; ++i) s += row[i];
    dbias[c] += s;
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void ModelConfig::validate() const {
  if (antennas == 0) throw std::invalid_argument("model: antennas must be positive");
  if (latent_dim == 0) throw std::invalid_argument("model: latent_dim must be positive");
  if (num_blocks != 1 && num_blocks != 2) throw std::invalid_argument("model: num_blocks must be 1 or 2");
  if (encoder_channels.empty()) throw std::invalid_argument("model: encoder_channels must not be empty");
  if (decoder_channels.size() != encoder_channels.size())
    throw std::invalid_argument("model: decoder_channels must have as many layers as encoder_channels");
  for (auto c : encoder_channels)
    if (c == 0) throw std::invalid_argument("model: encoder channel widths must be positive");
  for (auto c : decoder_channels)
    if (c == 0) throw std::invalid_argument("model: decoder channel widths must be positive");
  if (kernel == 0 || kernel % 2 == 0) throw std::invalid_argument("model: kernel must be odd");
}

ModelConfig ModelConfig::multi_cell(std::size_t antennas) {
  ModelConfig c;
  c.antennas = antennas;
  return c;
}

ModelConfig ModelConfig::single_cell(std::size_t antennas) {
  ModelConfig c;
  c.antennas = antennas;
  c.num_blocks = 1;
  c.latent_dim = 16;
  c.decoder_channels = {32, 16, 8};
  return c;
}

Network::Network(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t K = config_.kernel;
  const std::size_t pad = K / 2;
  const std::size_t n = config_.encoder_channels.size();

  std::vector<std::size_t> lengths{config_.antennas};
  std::size_t ch = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t out_len = half_up(lengths.back());
    enc_.push_back({ch, config_.encoder_channels[i], lengths.back(), out_len, K, pad});
    ch = config_.encoder_channels[i];
    lengths.push_back(out_len);
  }
  feature_dim_ = ch * lengths.back();
  dense_out_ = config_.decoder_channels[0] * lengths.back();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = i + 1 < n ? config_.decoder_channels[i + 1] : output_channels();
    dec_.push_back({config_.decoder_channels[i], next, lengths[n - i], lengths[n - i - 1], K, pad});
  }

  std::size_t offset = 0;
  auto add = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    blocks_.push_back({name, offset, rows, cols});
    offset += rows * cols;
    return blocks_.back().offset;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = enc_[i];
    enc_w_.push_back(add("enc" + std::to_string(i) + ".w", g.out_channels, g.in_channels * K));
    enc_b_.push_back(add("enc" + std::to_string(i) + ".b", g.out_channels, 1));
  }
  mu_w_ = add("mu.w", config_.latent_dim, feature_dim_);
  mu_b_ = add("mu.b", config_.latent_dim, 1);
  lv_w_ = add("logvar.w", config_.latent_dim, feature_dim_);
  lv_b_ = add("logvar.b", config_.latent_dim, 1);
  dense_w_ = add("dense.w", dense_out_, config_.latent_dim);
  dense_b_ = add("dense.b", dense_out_, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = dec_[i];
    dec_w_.push_back(add("dec" + std::to_string(i) + ".w", g.out_channels * K, g.in_channels));
    dec_b_.push_back(add("dec" + std::to_string(i) + ".b", g.out_channels, 1));
  }
  parameter_count_ = offset;
}

const ParamBlock& Network::block(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return b;
  throw std::out_of_range("no parameter block named " + name);
}

ModelParams Network::initialize(std::uint64_t seed) const {
  ModelParams p;
  p.values.assign(parameter_count_, 0.0);
  Rng rng = make_stream(seed, kInitStream);
  const std::size_t K = config_.kernel;
  auto fill = [&](std::size_t offset, std::size_t size, double fan_in, bool relu) {
    const double bound = std::sqrt((relu ? 6.0 : 3.0) / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < size; ++i) p.values[offset + i] = dist(rng);
  };
  for (std::size_t i = 0; i < enc_.size(); ++i)
    fill(enc_w_[i], enc_[i].out_channels * enc_[i].in_channels * K, double(enc_[i].in_channels * K), true);
  fill(mu_w_, config_.latent_dim * feature_dim_, double(feature_dim_), false);
  fill(lv_w_, config_.latent_dim * feature_dim_, double(feature_dim_), false);
  for (std::size_t j = 0; j < config_.latent_dim * feature_dim_; ++j) {
    p.values[mu_w_ + j] *= kOutputInitScale;
    p.values[lv_w_ + j] *= kOutputInitScale;
  }
  fill(dense_w_, dense_out_ * config_.latent_dim, double(config_.latent_dim), true);
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const auto& g = dec_[i];
    const bool last = i + 1 == dec_.size();
    fill(dec_w_[i], g.out_channels * K * g.in_channels, double(g.in_channels * half_up(K)), !last);
    if (last) {
      for (std::size_t j = 0; j < g.out_channels * K * g.in_channels; ++j) p.values[dec_w_[i] + j] *= kOutputInitScale;
      for (std::size_t q = 0; q < config_.num_blocks; ++q) p.values[dec_b_[i] + 3 * q + 2] = kUnitSpectrumRaw;
    }
  }
  return p;
}

Workspace Network::make_workspace(std::size_t batch) const {
  Workspace ws;
  ws.capacity = batch;
  const std::size_t Lz = config_.latent_dim;
  ws.input.assign(input_dim() * batch, 0.0);
  ws.targets.assign(target_dim() * batch, 0.0);
  ws.noise.assign(config_.num_blocks * batch, 0.0);
  ws.eps.assign(Lz * batch, 0.0);
  std::size_t cols_max = 0;
  std::size_t weight_max = 0;
  for (const auto& g : enc_) {
    ws.enc_act.emplace_back(g.out_channels * g.out_length * batch, 0.0);
    ws.d_enc_act.emplace_back(g.out_channels * g.out_length * batch, 0.0);
    ws.enc_cols.emplace_back(g.in_channels * g.kernel * g.out_length * batch, 0.0);
    cols_max = std::max(cols_max, ws.enc_cols.back().size());
    weight_max = std::max(weight_max, g.out_channels * g.in_channels * g.kernel);
  }
  for (auto* v : {&ws.mu, &ws.log_var, &ws.sigma, &ws.z, &ws.d_mu, &ws.d_log_var, &ws.d_z}) v->assign(Lz * batch, 0.0);
  ws.dec_act.emplace_back(dense_out_ * batch, 0.0);
  ws.d_dec_act.emplace_back(dense_out_ * batch, 0.0);
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const auto& g = dec_[i];
    if (i + 1 < dec_.size()) {
      ws.dec_act.emplace_back(g.out_channels * g.out_length * batch, 0.0);
      ws.d_dec_act.emplace_back(g.out_channels * g.out_length * batch, 0.0);
    }
    cols_max = std::max(cols_max, g.out_channels * g.kernel * g.in_length * batch);
    weight_max = std::max(weight_max, g.out_channels * g.in_channels * g.kernel);
  }
  weight_max = std::max({weight_max, Lz * feature_dim_, dense_out_ * Lz});
  ws.out.assign(output_channels() * config_.antennas * batch, 0.0);
  ws.d_out.assign(ws.out.size(), 0.0);
  ws.cols_scratch.assign(cols_max, 0.0);
  ws.weight_scratch.assign(weight_max, 0.0);
  ws.sample_elbo.assign(batch, 0.0);
  ws.sample_recon.assign(batch, 0.0);
  ws.sample_kl.assign(batch, 0.0);
  return ws;
}

void Network::encode(const std::vector<double>& params, Workspace& ws, std::size_t batch) const {
  if (params.size() != parameter_count_) throw std::invalid_argument("parameter vector does not match the model");
  if (batch > ws.capacity) throw std::invalid_argument("batch exceeds workspace capacity");
  const auto& kt = simd::active();
  const double* P = params.data();
  const double* x = ws.input.data();
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    const auto& g = enc_[i];
    const std::size_t n = g.out_length * batch;
    const std::size_t k = g.in_channels * g.kernel;
    gather_taps(g.in_channels, g.in_length, g.out_length, g.kernel, g.pad, batch, x, ws.enc_cols[i].data());
    kt.gemm_nn(g.out_channels, n, k, P + enc_w_[i], k, ws.enc_cols[i].data(), n, ws.enc_act[i].data(), n, false);
    bias_activate(ws.enc_act[i].data(), P + enc_b_[i], g.out_channels, n, true);
    x = ws.enc_act[i].data();
  }
  const std::size_t Lz = config_.latent_dim;
  kt.gemm_nn(Lz, batch, feature_dim_, P + mu_w_, feature_dim_, x, batch, ws.mu.data(), batch, false);
  bias_activate(ws.mu.data(), P + mu_b_, Lz, batch, false);
  kt.gemm_nn(Lz, batch, feature_dim_, P + lv_w_, feature_dim_, x, batch, ws.log_var.data(), batch, false);
  bias_activate(ws.log_var.data(), P + lv_b_, Lz, batch, false);
  for (std::size_t j = 0; j < Lz; ++j)
    for (std::size_t b = 0; b < batch; ++b) ws.sigma[j * batch + b] = std::exp(0.5 * ws.log_var[j * batch + b]);
}

void Network::decode(const std::vector<double>& params, Workspace& ws, std::size_t batch) const {
  if (params.size() != parameter_count_) throw std::invalid_argument("parameter vector does not match the model");
  if (batch > ws.capacity) throw std::invalid_argument("batch exceeds workspace capacity");
  const auto& kt = simd::active();
  const double* P = params.data();
  const std::size_t Lz = config_.latent_dim;
  kt.gemm_nn(dense_out_, batch, Lz, P + dense_w_, Lz, ws.z.data(), batch, ws.dec_act[0].data(), batch, false);
  bias_activate(ws.dec_act[0].data(), P + dense_b_, dense_out_, batch, true);
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const auto& g = dec_[i];
    const bool last = i + 1 == dec_.size();
    const std::size_t n = g.in_length * batch;
    const std::size_t rows = g.out_channels * g.kernel;
    kt.gemm_nn(rows, n, g.in_channels, P + dec_w_[i], g.in_channels, ws.dec_act[i].data(), n,
               ws.cols_scratch.data(), n, false);
    double* y = last ? ws.out.data() : ws.dec_act[i + 1].data();
    std::fill_n(y, g.out_channels * g.out_length * batch, 0.0);
    scatter_taps(g.out_channels, g.out_length, g.in_length, g.kernel, g.pad, batch, ws.cols_scratch.data(), y);
    bias_activate(y, P + dec_b_[i], g.out_channels, g.out_length * batch, !last);
  }
}

void Network::infer(const std::vector<double>& params, Workspace& ws, std::size_t batch) const {
  encode(params, ws, batch);
  std::copy_n(ws.mu.begin(), config_.latent_dim * batch, ws.z.begin());
  decode(params, ws, batch);
}

double Network::heads_loss(Workspace& ws, std::size_t batch, bool want_grad) const {
  const std::size_t M = config_.antennas;
  const double log_pi = std::log(std::numbers::pi);
  std::fill_n(ws.sample_recon.begin(), batch, 0.0);
  for (std::size_t q = 0; q < config_.num_blocks; ++q) {
    const double* s = ws.noise.data() + q * batch;
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t ir = ((3 * q) * M + m) * batch;
      const std::size_t ii = ((3 * q + 1) * M + m) * batch;
      const std::size_t ic = ((3 * q + 2) * M + m) * batch;
      const double* tr = ws.targets.data() + (q * 2 * M + m) * batch;
      const double* ti = ws.targets.data() + (q * 2 * M + M + m) * batch;
      for (std::size_t b = 0; b < batch; ++b) {
        const double raw = ws.out[ic + b];
        const double c = softplus(raw) + kSpectrumFloor;
        const double v = c + s[b];
        const double er = tr[b] - ws.out[ir + b];
        const double ei = ti[b] - ws.out[ii + b];
        const double e2 = er * er + ei * ei;
        ws.sample_recon[b] += -(log_pi + std::log(v)) - e2 / v;
        if (want_grad) {
          ws.d_out[ir + b] = 2.0 * er / v;
          ws.d_out[ii + b] = 2.0 * ei / v;
          ws.d_out[ic + b] = (-1.0 / v + e2 / (v * v)) * sigmoid(raw);
        }
      }
    }
  }
  const std::size_t Lz = config_.latent_dim;
  std::fill_n(ws.sample_kl.begin(), batch, 0.0);
  for (std::size_t j = 0; j < Lz; ++j) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double mu = ws.mu[j * batch + b];
      const double lv = ws.log_var[j * batch + b];
      const double s2 = ws.sigma[j * batch + b] * ws.sigma[j * batch + b];
      ws.sample_kl[b] += 0.5 * (s2 + mu * mu - 1.0 - lv);
    }
  }
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    ws.sample_elbo[b] = ws.sample_recon[b] - ws.sample_kl[b];
    total += ws.sample_elbo[b];
  }
  if (!std::isfinite(total)) throw NonFiniteError("non-finite ELBO");
  return total;
}

void Network::decoder_backward(const std::vector<double>& params, Workspace& ws, std::size_t batch,
                               std::vector<double>& grad) const {
  const auto& kt = simd::active();
  const double* P = params.data();
  double* G = grad.data();
  for (std::size_t ii = dec_.size(); ii-- > 0;) {
    const auto& g = dec_[ii];
    const bool last = ii + 1 == dec_.size();
    double* dy = last ? ws.d_out.data() : ws.d_dec_act[ii + 1].data();
    const std::size_t big = g.out_channels * g.out_length * batch;
    if (!last) relu_mask(dy, ws.dec_act[ii + 1].data(), big);
    accumulate_bias(G + dec_b_[ii], dy, g.out_channels, g.out_length * batch);
    const std::size_t n = g.in_length * batch;
    const std::size_t rows = g.out_channels * g.kernel;
    gather_taps(g.out_channels, g.out_length, g.in_length, g.kernel, g.pad, batch, dy, ws.cols_scratch.data());
    kt.gemm_nt(rows, g.in_channels, n, ws.cols_scratch.data(), n, ws.dec_act[ii].data(), n, G + dec_w_[ii],
               g.in_channels, true);
    simd::transpose(P + dec_w_[ii], rows, g.in_channels, ws.weight_scratch.data());
    kt.gemm_nn(g.in_channels, n, rows, ws.weight_scratch.data(), rows, ws.cols_scratch.data(), n,
               ws.d_dec_act[ii].data(), n, false);
  }
  const std::size_t Lz = config_.latent_dim;
  double* dd = ws.d_dec_act[0].data();
  relu_mask(dd, ws.dec_act[0].data(), dense_out_ * batch);
  accumulate_bias(G + dense_b_, dd, dense_out_, batch);
  kt.gemm_nt(dense_out_, Lz, batch, dd, batch, ws.z.data(), batch, G + dense_w_, Lz, true);
  simd::transpose(P + dense_w_, dense_out_, Lz, ws.weight_scratch.data());
  kt.gemm_nn(Lz, batch, dense_out_, ws.weight_scratch.data(), dense_out_, dd, batch, ws.d_z.data(), batch, false);
}

void Network::encoder_backward(const std::vector<double>& params, Workspace& ws, std::size_t batch,
                               std::vector<double>& grad) const {
  const auto& kt = simd::active();
  const double* P = params.data();
  double* G = grad.data();
  const std::size_t Lz = config_.latent_dim;
  const std::size_t last = enc_.size() - 1;
  const double* feat = ws.enc_act[last].data();

  kt.gemm_nt(Lz, feature_dim_, batch, ws.d_mu.data(), batch, feat, batch, G + mu_w_, feature_dim_, true);
  accumulate_bias(G + mu_b_, ws.d_mu.data(), Lz, batch);
  kt.gemm_nt(Lz, feature_dim_, batch, ws.d_log_var.data(), batch, feat, batch, G + lv_w_, feature_dim_, true);
  accumulate_bias(G + lv_b_, ws.d_log_var.data(), Lz, batch);

  double* dfeat = ws.d_enc_act[last].data();
  simd::transpose(P + mu_w_, Lz, feature_dim_, ws.weight_scratch.data());
  kt.gemm_nn(feature_dim_, batch, Lz, ws.weight_scratch.data(), Lz, ws.d_mu.data(), batch, dfeat, batch, false);
  simd::transpose(P + lv_w_, Lz, feature_dim_, ws.weight_scratch.data());
  kt.gemm_nn(feature_dim_, batch, Lz, ws.weight_scratch.data(), Lz, ws.d_log_var.data(), batch, dfeat, batch, true);

  for (std::size_t ii = enc_.size(); ii-- > 0;) {
    const auto& g = enc_[ii];
    const std::size_t n = g.out_length * batch;
    const std::size_t k = g.in_channels * g.kernel;
    double* dy = ws.d_enc_act[ii].data();
    relu_mask(dy, ws.enc_act[ii].data(), g.out_channels * n);
    accumulate_bias(G + enc_b_[ii], dy, g.out_channels, n);
    kt.gemm_nt(g.out_channels, k, n, dy, n, ws.enc_cols[ii].data(), n, G + enc_w_[ii], k, true);
    if (ii == 0) break;
    simd::transpose(P + enc_w_[ii], g.out_channels, k, ws.weight_scratch.data());
    kt.gemm_nn(k, n, g.out_channels, ws.weight_scratch.data(), g.out_channels, dy, n, ws.cols_scratch.data(), n,
               false);
    double* dx = ws.d_enc_act[ii - 1].data();
    std::fill_n(dx, g.in_channels * g.in_length * batch, 0.0);
    scatter_taps(g.in_channels, g.in_length, g.out_length, g.kernel, g.pad, batch, ws.cols_scratch.data(), dx);
  }
}

double Network::evaluate(const std::vector<double>& params, Workspace& ws, std::size_t batch,
                         std::vector<double>* grad) const {
  encode(params, ws, batch);
  const std::size_t Lz = config_.latent_dim;
  for (std::size_t i = 0; i < Lz * batch; ++i) ws.z[i] = ws.mu[i] + ws.sigma[i] * ws.eps[i];
  decode(params, ws, batch);
  const double total = heads_loss(ws, batch, grad != nullptr);
  if (grad == nullptr) return total;
  if (grad->size() != parameter_count_) throw std::invalid_argument("gradient vector does not match the model");

  decoder_backward(params, ws, batch, *grad);
  for (std::size_t i = 0; i < Lz * batch; ++i) {
    const double s = ws.sigma[i];
    ws.d_mu[i] = ws.d_z[i] - ws.mu[i];
    ws.d_log_var[i] = 0.5 * ws.d_z[i] * ws.eps[i] * s - 0.5 * (s * s - 1.0);
  }
  encoder_backward(params, ws, batch, *grad);
  for (double g : *grad)
    if (!std::isfinite(g)) throw NonFiniteError("non-finite ELBO gradient");
  return total;
}

}  // namespace mcce::vae
