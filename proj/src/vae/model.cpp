#include "mcce/vae/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcce/linalg.hpp"
#include "mcce/parallel.hpp"

namespace mcce::vae {
namespace {

constexpr std::size_t kInferenceChunk = 256;

ComplexVector add(const std::vector<cfloat>& a, const std::vector<cfloat>& b) {
  ComplexVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = cplx(a[i]) + cplx(b[i]);
  return out;
}

void check_sample(const Network& net, const ElboSample& sample) {
  const std::size_t M = net.antennas();
  if (sample.input.size() != M) throw std::invalid_argument("encoder input length does not match the model");
  if (sample.targets.size() != net.blocks_out() || sample.noise.size() != net.blocks_out())
    throw std::invalid_argument("sample block count does not match the model");
  for (const auto& t : sample.targets)
    if (t.size() != M) throw std::invalid_argument("target length does not match the model");
}

void pack_targets(const ElboSample& sample, std::size_t M, Workspace& ws, std::size_t col, std::size_t batch) {
  for (std::size_t q = 0; q < sample.targets.size(); ++q) {
    const ComplexVector f = linalg::unitary_dft(sample.targets[q]);
    for (std::size_t m = 0; m < M; ++m) {
      ws.targets[(q * 2 * M + m) * batch + col] = f[m].real();
      ws.targets[(q * 2 * M + M + m) * batch + col] = f[m].imag();
    }
    ws.noise[q * batch + col] = sample.noise[q];
  }
}

LatentStats latent_from(const Workspace& ws, std::size_t Lz) {
  LatentStats s;
  s.mu.assign(ws.mu.begin(), ws.mu.begin() + Lz);
  s.log_var.assign(ws.log_var.begin(), ws.log_var.begin() + Lz);
  s.sigma.assign(ws.sigma.begin(), ws.sigma.begin() + Lz);
  return s;
}

}  // namespace

double spectrum_from_raw(double raw) {
  return std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw))) + kSpectrumFloor;
}

ElboSample make_elbo_sample(const scenario::DatasetRecord& record, const ModelConfig& config) {
  ElboSample s;
  const bool two = config.num_blocks == 2;
  if (config.genie) {
    s.input = two ? add(record.h1, record.h_int) : scenario::to_double(record.h1);
    s.targets.push_back(scenario::to_double(record.h1));
    if (two) s.targets.push_back(scenario::to_double(record.h_int));
    s.noise.assign(config.num_blocks, 0.0);
    return s;
  }
  if (!record.has_observation()) throw std::invalid_argument("record carries no observation for noisy training");
  s.input = two ? scenario::to_double(record.y) : scenario::to_double(record.y1);
  s.targets.push_back(scenario::to_double(record.y1));
  s.noise.push_back(record.sigma1_sq);
  if (two) {
    s.targets.push_back(scenario::to_double(record.y2));
    s.noise.push_back(record.sigma2_sq);
  }
  return s;
}

void pack_input(std::span<const cplx> signal, Workspace& ws, std::size_t col, std::size_t batch) {
  const std::size_t M = signal.size();
  const ComplexVector f = linalg::unitary_dft(signal);
  for (std::size_t m = 0; m < M; ++m) {
    ws.input[m * batch + col] = f[m].real();
    ws.input[(M + m) * batch + col] = f[m].imag();
  }
}

CondGaussianParams unpack_moments(const Network& net, const Workspace& ws, std::size_t col, std::size_t batch) {
  const std::size_t M = net.antennas();
  CondGaussianParams p;
  auto block = [&](std::size_t q, ComplexVector& mean_freq, ComplexVector& mean, CirculantSpectrum& spec) {
    mean_freq.resize(M);
    spec.eigenvalues.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
      mean_freq[m] = {ws.out[((3 * q) * M + m) * batch + col], ws.out[((3 * q + 1) * M + m) * batch + col]};
      spec.eigenvalues[m] = spectrum_from_raw(ws.out[((3 * q + 2) * M + m) * batch + col]);
    }
    mean = linalg::unitary_dft(mean_freq, true);
  };
  block(0, p.mu1_freq, p.mu1, p.c1);
  if (net.blocks_out() == 2) block(1, p.mu_int_freq, p.mu_int, p.c_int);
  return p;
}

LatentStats encoder_forward(const Network& net, const ModelParams& params, std::span<const cplx> y) {
  if (y.size() != net.antennas()) throw std::invalid_argument("encoder input length does not match the model");
  Workspace ws = net.make_workspace(1);
  pack_input(y, ws, 0, 1);
  net.encode(params.values, ws, 1);
  return latent_from(ws, net.latent_dim());
}

std::vector<double> reparameterize(const LatentStats& stats, std::span<const double> eps) {
  if (eps.size() != stats.mu.size()) throw std::invalid_argument("eps length does not match the latent size");
  std::vector<double> z(stats.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = stats.mu[i] + stats.sigma[i] * eps[i];
  return z;
}

std::vector<double> reparameterize(const LatentStats& stats, Rng& rng) {
  std::vector<double> eps(stats.mu.size());
  for (auto& e : eps) e = standard_normal(rng);
  return reparameterize(stats, eps);
}

CondGaussianParams decoder_forward(const Network& net, const ModelParams& params, std::span<const double> z) {
  if (z.size() != net.latent_dim()) throw std::invalid_argument("latent length does not match the model");
  Workspace ws = net.make_workspace(1);
  std::copy(z.begin(), z.end(), ws.z.begin());
  net.decode(params.values, ws, 1);
  return unpack_moments(net, ws, 0, 1);
}

namespace {

Workspace prepare(const Network& net, const ElboSample& sample, std::span<const double> eps) {
  check_sample(net, sample);
  if (eps.size() != net.latent_dim()) throw std::invalid_argument("eps length does not match the latent size");
  Workspace ws = net.make_workspace(1);
  pack_input(sample.input, ws, 0, 1);
  pack_targets(sample, net.antennas(), ws, 0, 1);
  std::copy(eps.begin(), eps.end(), ws.eps.begin());
  return ws;
}

}  // namespace

ElboTerms elbo(const Network& net, const ModelParams& params, const ElboSample& sample,
               std::span<const double> eps) {
  Workspace ws = prepare(net, sample, eps);
  ElboTerms t;
  t.elbo = net.evaluate(params.values, ws, 1, nullptr);
  t.reconstruction = ws.sample_recon[0];
  t.kl = ws.sample_kl[0];
  t.latent = latent_from(ws, net.latent_dim());
  t.latent.z.assign(ws.z.begin(), ws.z.begin() + net.latent_dim());
  t.moments = unpack_moments(net, ws, 0, 1);
  return t;
}

std::vector<double> elbo_gradients(const Network& net, const ModelParams& params, const ElboSample& sample,
                                   std::span<const double> eps) {
  Workspace ws = prepare(net, sample, eps);
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.evaluate(params.values, ws, 1, &grad);
  return grad;
}

SampleBank make_sample_bank(std::span<const ElboSample> samples, const ModelConfig& config) {
  const std::size_t M = config.antennas;
  SampleBank bank;
  bank.count = samples.size();
  bank.blocks = config.num_blocks;
  bank.input_dim = 2 * M;
  bank.target_dim = 2 * M * config.num_blocks;
  bank.inputs.resize(bank.count * bank.input_dim);
  bank.targets.resize(bank.count * bank.target_dim);
  bank.noise.resize(bank.count * bank.blocks);
  for (std::size_t i = 0; i < bank.count; ++i) {
    const auto& s = samples[i];
    if (s.input.size() != M || s.targets.size() != config.num_blocks)
      throw std::invalid_argument("sample shape does not match the model");
    const ComplexVector fin = linalg::unitary_dft(s.input);
    double* in = bank.inputs.data() + i * bank.input_dim;
    for (std::size_t m = 0; m < M; ++m) {
      in[m] = fin[m].real();
      in[M + m] = fin[m].imag();
    }
    double* tg = bank.targets.data() + i * bank.target_dim;
    for (std::size_t q = 0; q < config.num_blocks; ++q) {
      const ComplexVector ft = linalg::unitary_dft(s.targets[q]);
      for (std::size_t m = 0; m < M; ++m) {
        tg[q * 2 * M + m] = ft[m].real();
        tg[q * 2 * M + M + m] = ft[m].imag();
      }
      bank.noise[i * bank.blocks + q] = s.noise[q];
    }
  }
  return bank;
}

SampleBank make_sample_bank(const scenario::Dataset& dataset, const ModelConfig& config) {
  if (dataset.header.antennas != config.antennas)
    throw std::invalid_argument("dataset antenna count does not match the model");
  std::vector<ElboSample> samples;
  samples.reserve(dataset.size());
  for (const auto& r : dataset.records) samples.push_back(make_elbo_sample(r, config));
  return make_sample_bank(samples, config);
}

void SampleBank::gather(std::span<const std::size_t> indices, Workspace& ws) const {
  const std::size_t B = indices.size();
  if (B > ws.capacity) throw std::invalid_argument("batch exceeds workspace capacity");
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t i = indices[b];
    const double* in = inputs.data() + i * input_dim;
    for (std::size_t f = 0; f < input_dim; ++f) ws.input[f * B + b] = in[f];
    const double* tg = targets.data() + i * target_dim;
    for (std::size_t f = 0; f < target_dim; ++f) ws.targets[f * B + b] = tg[f];
    for (std::size_t q = 0; q < blocks; ++q) ws.noise[q * B + b] = noise[i * blocks + q];
  }
}

VaeModel::VaeModel(ModelConfig config, ModelParams params) : net_(std::move(config)), params_(std::move(params)) {
  if (params_.values.size() != net_.parameter_count())
    throw std::invalid_argument("parameter vector does not match the model configuration");
}

CondGaussianParams VaeModel::moments(std::span<const cplx> encoder_input) const {
  if (encoder_input.size() != net_.antennas())
    throw std::invalid_argument("encoder input length does not match the model");
  Workspace ws = net_.make_workspace(1);
  pack_input(encoder_input, ws, 0, 1);
  net_.infer(params_.values, ws, 1);
  return unpack_moments(net_, ws, 0, 1);
}

std::vector<CondGaussianParams> VaeModel::moments_batch(std::span<const ComplexVector> inputs,
                                                        std::size_t threads) const {
  std::vector<CondGaussianParams> out(inputs.size());
  const std::size_t chunks = (inputs.size() + kInferenceChunk - 1) / kInferenceChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kInferenceChunk;
    const std::size_t B = std::min(kInferenceChunk, inputs.size() - begin);
    Workspace ws = net_.make_workspace(B);
    for (std::size_t b = 0; b < B; ++b) {
      if (inputs[begin + b].size() != net_.antennas())
        throw std::invalid_argument("encoder input length does not match the model");
      pack_input(inputs[begin + b], ws, b, B);
    }
    net_.infer(params_.values, ws, B);
    for (std::size_t b = 0; b < B; ++b) out[begin + b] = unpack_moments(net_, ws, b, B);
  });
  return out;
}

}  // namespace mcce::vae
