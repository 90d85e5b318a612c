#include "mcce/scenario.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "mcce/dataset_io.hpp"
#include "mcce/linalg.hpp"
#include "mcce/parallel.hpp"

namespace mcce::scenario {

void SystemConfig::validate() const {
  if (antennas == 0) throw std::invalid_argument("system.antennas (M) must be >= 1");
  if (cells == 0) throw std::invalid_argument("system.cells (L) must be >= 1");
  if (users == 0) throw std::invalid_argument("system.users (K) must be >= 1");
  if (pilot_length < users)
    throw std::invalid_argument("system.pilot_length (T_tr) must be >= system.users (K): T_tr >= K");
  if (!(snr_low_db <= snr_high_db)) throw std::invalid_argument("system.snr_range_db must satisfy low <= high");
  if (priors.size() != cells)
    throw std::invalid_argument("system.priors must list one angular prior per cell (" + std::to_string(cells) +
                                "), got " + std::to_string(priors.size()));
  for (const auto& p : priors) p.validate();
  clusters.validate();
}

PilotMatrix::PilotMatrix(std::size_t length, std::size_t users, std::vector<cplx> data)
    : length_(length), users_(users), data_(std::move(data)) {
  if (data_.size() != length_ * users_) throw std::invalid_argument("PilotMatrix: data size mismatch");
}

std::span<const cplx> PilotMatrix::column(std::size_t k) const {
  if (k >= users_) throw std::out_of_range("PilotMatrix: column index out of range");
  return {data_.data() + k * length_, length_};
}

DenseMatrix PilotMatrix::dense() const {
  DenseMatrix out(length_, users_);
  for (std::size_t k = 0; k < users_; ++k)
    for (std::size_t t = 0; t < length_; ++t) out(t, k) = data_[k * length_ + t];
  return out;
}

PilotMatrix gen_pilots(std::size_t pilot_length, std::size_t users) {
  if (users == 0) throw std::invalid_argument("gen_pilots: K must be >= 1");
  if (users > pilot_length) throw std::invalid_argument("gen_pilots: K > T_tr, pilots cannot be orthogonal");
  std::vector<cplx> data(pilot_length * users);
  const double scale = 1.0 / std::sqrt(static_cast<double>(pilot_length));
  for (std::size_t k = 0; k < users; ++k) {
    for (std::size_t t = 0; t < pilot_length; ++t) {
      // Reduce t*k mod T first so the phase stays exact for large T.
      const auto tk = static_cast<double>((t * k) % pilot_length);
      const double phase = -2.0 * std::numbers::pi * tk / static_cast<double>(pilot_length);
      data[k * pilot_length + t] = std::polar(scale, phase);
    }
  }
  return PilotMatrix(pilot_length, users, std::move(data));
}

ComplexVector despread(const DenseMatrix& received, std::span<const cplx> psi) {
  if (static_cast<std::size_t>(received.cols()) != psi.size())
    throw std::invalid_argument("despread: pilot length does not match the received block");
  return linalg::to_vector(received * linalg::as_eigen(psi));
}

DenseMatrix received_pilot_signal(std::span<const DenseMatrix> cell_channels, const PilotMatrix& pilots,
                                  const DenseMatrix& noise) {
  const DenseMatrix psi = pilots.dense();
  DenseMatrix y = noise;
  for (const auto& h : cell_channels) {
    if (h.cols() != psi.cols() || h.rows() != noise.rows())
      throw std::invalid_argument("received_pilot_signal: channel matrix shape mismatch");
    y += h * psi.adjoint();
  }
  return y;
}

double noise_variance(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

ChannelDraw draw_channels(const SystemConfig& cfg, const channel::CcmQuadrature& quad, Rng& rng) {
  ChannelDraw draw;
  draw.h1.assign(cfg.antennas, cplx{0.0, 0.0});
  draw.h_int.assign(cfg.antennas, cplx{0.0, 0.0});
  for (std::size_t l = 0; l < cfg.cells; ++l) {
    channel::ClusterSet delta = channel::sample_delta(cfg.priors[l], cfg.clusters, rng);
    ToeplitzFirstRow row = quad.first_row(delta);
    const ComplexVector h = linalg::GaussianSampler(row).draw(rng);
    auto& target = l == 0 ? draw.h1 : draw.h_int;
    for (std::size_t m = 0; m < cfg.antennas; ++m) target[m] += h[m];
    draw.ccm_rows.push_back(std::move(row.row));
    draw.deltas.push_back(std::move(delta));
  }
  return draw;
}

ComplexVector to_double(std::span<const cfloat> v) {
  ComplexVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = cplx{v[i].real(), v[i].imag()};
  return out;
}

std::vector<cfloat> to_float(std::span<const cplx> v) {
  std::vector<cfloat> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = cfloat{static_cast<float>(v[i].real()), static_cast<float>(v[i].imag())};
  return out;
}

DatasetRecord quantize(const ChannelDraw& draw) {
  DatasetRecord r;
  r.h1 = to_float(draw.h1);
  r.h_int = to_float(draw.h_int);
  for (const auto& row : draw.ccm_rows) r.ccm_rows.push_back(to_float(row));
  return r;
}

void attach_observation(DatasetRecord& record, double snr_db, Rng& rng) {
  const std::size_t m = record.h1.size();
  const double sigma_sq = noise_variance(snr_db);
  const double half = 0.5 * sigma_sq;
  const double std_component = std::sqrt(0.5 * half);
  std::normal_distribution<double> dist(0.0, 1.0);
  record.y.resize(m);
  record.y1.resize(m);
  record.y2.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double n1r = 0.0, n1i = 0.0, n2r = 0.0, n2i = 0.0;
    if (sigma_sq > 0.0) {
      n1r = std_component * dist(rng);
      n1i = std_component * dist(rng);
      n2r = std_component * dist(rng);
      n2i = std_component * dist(rng);
    }
    record.y1[i] = cfloat{static_cast<float>(static_cast<double>(record.h1[i].real()) + n1r),
                          static_cast<float>(static_cast<double>(record.h1[i].imag()) + n1i)};
    record.y2[i] = cfloat{static_cast<float>(static_cast<double>(record.h_int[i].real()) + n2r),
                          static_cast<float>(static_cast<double>(record.h_int[i].imag()) + n2i)};
    record.y[i] = record.y1[i] + record.y2[i];
  }
  record.sigma_sq = sigma_sq;
  record.sigma1_sq = half;
  record.sigma2_sq = sigma_sq - half;
}

namespace {

const channel::CcmQuadrature& cached_quadrature(double spread_deg, std::size_t antennas) {
  thread_local std::map<std::pair<double, std::size_t>, channel::CcmQuadrature> cache;
  const auto key = std::make_pair(spread_deg, antennas);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, channel::CcmQuadrature(spread_deg, antennas)).first;
  return it->second;
}

double draw_snr(const SnrDraw& snr, Rng& rng) {
  switch (snr.mode) {
    case SnrDraw::Mode::uniform_db:
      return snr.low_db + (snr.high_db - snr.low_db) * uniform01(rng);
    case SnrDraw::Mode::fixed_db:
      return snr.low_db;
    case SnrDraw::Mode::noiseless:
      break;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

DatasetRecord synthesize_record(const SystemConfig& cfg, double snr_db, Rng& rng) {
  const auto& quad = cached_quadrature(cfg.clusters.spread_deg, cfg.antennas);
  DatasetRecord record = quantize(draw_channels(cfg, quad, rng));
  attach_observation(record, snr_db, rng);
  return record;
}

NormalizationReport normalize_dataset(std::span<ChannelDraw> draws) {
  if (draws.empty()) throw std::invalid_argument("normalize_dataset: empty dataset");
  double power = 0.0;
  std::size_t entries = 0;
  for (const auto& d : draws) {
    power += linalg::squared_norm(d.h1);
    entries += d.h1.size();
  }
  power /= static_cast<double>(entries);
  if (!(power > 0.0)) throw std::invalid_argument("normalize_dataset: all-zero dataset");
  const double s = 1.0 / std::sqrt(power);
  for (auto& d : draws) {
    for (auto& x : d.h1) x *= s;
    for (auto& x : d.h_int) x *= s;
    for (auto& row : d.ccm_rows)
      for (auto& x : row) x *= s * s;
  }
  return {s, power};
}

NormalizationReport normalize_dataset(Dataset& dataset) {
  if (dataset.records.empty()) throw std::invalid_argument("normalize_dataset: empty dataset");
  double power = 0.0;
  std::size_t entries = 0;
  for (const auto& r : dataset.records) {
    for (const auto& x : r.h1) power += std::norm(cplx{x.real(), x.imag()});
    entries += r.h1.size();
  }
  power /= static_cast<double>(entries);
  if (!(power > 0.0)) throw std::invalid_argument("normalize_dataset: all-zero dataset");
  const double s = 1.0 / std::sqrt(power);
  auto scale = [](std::vector<cfloat>& v, double f) {
    for (auto& x : v)
      x = cfloat{static_cast<float>(x.real() * f), static_cast<float>(x.imag() * f)};
  };
  for (auto& r : dataset.records) {
    scale(r.h1, s);
    scale(r.h_int, s);
    for (auto& row : r.ccm_rows) scale(row, s * s);
    scale(r.y1, s);
    scale(r.y2, s);
    for (std::size_t i = 0; i < r.y.size(); ++i) r.y[i] = r.y1[i] + r.y2[i];
    r.sigma_sq *= s * s;
    r.sigma1_sq *= s * s;
    r.sigma2_sq *= s * s;
  }
  return {s, power};
}

std::vector<ChannelDraw> generate_channel_draws(const SystemConfig& cfg, std::size_t count, std::uint64_t seed,
                                                std::size_t threads) {
  cfg.validate();
  const channel::CcmQuadrature quad(cfg.clusters.spread_deg, cfg.antennas);
  std::vector<ChannelDraw> draws(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, kChannelStream, i);
    draws[i] = draw_channels(cfg, quad, rng);
  });
  return draws;
}

Dataset assemble_dataset(const DatasetHeader& header, std::span<const ChannelDraw> draws, const SnrDraw& snr,
                         std::uint64_t seed, std::size_t threads) {
  Dataset out;
  out.header = header;
  out.header.has_observations = true;
  out.header.has_ccms = !draws.empty() && !draws.front().ccm_rows.empty();
  out.records.resize(draws.size());
  parallel_for(draws.size(), threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, kNoiseStream, i);
    DatasetRecord r = quantize(draws[i]);
    if (!out.header.has_ccms) r.ccm_rows.clear();
    attach_observation(r, draw_snr(snr, rng), rng);
    out.records[i] = std::move(r);
  });
  return out;
}

GeneratedSplit generate_split(const SystemConfig& cfg, std::size_t count, std::uint64_t seed, const SnrDraw& snr,
                              std::size_t threads) {
  std::vector<ChannelDraw> draws = generate_channel_draws(cfg, count, seed, threads);
  GeneratedSplit out;
  out.normalization = normalize_dataset(draws);
  DatasetHeader header{cfg.antennas, cfg.cells, cfg.priors, true, true};
  out.data = assemble_dataset(header, draws, snr, seed, threads);
  return out;
}

ExternalNormalization parse_external_normalization(const std::string& name) {
  if (name == "none") return ExternalNormalization::none;
  if (name == "cumulative-path-gain") return ExternalNormalization::cumulative_path_gain;
  throw std::invalid_argument("unknown normalization '" + name + "' (expected none | cumulative-path-gain)");
}

std::vector<ChannelDraw> read_external_channels(const std::string& path, DatasetHeader* header) {
  Dataset ds = io::load_dataset(path);
  if (ds.header.has_observations)
    throw std::invalid_argument("ingest: '" + path + "' already carries observations; expected channels only");
  std::vector<ChannelDraw> draws(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    draws[i].h1 = to_double(r.h1);
    draws[i].h_int = to_double(r.h_int);
    for (const auto& row : r.ccm_rows) draws[i].ccm_rows.push_back(to_double(row));
  }
  if (header != nullptr) *header = ds.header;
  return draws;
}

void normalize_cumulative_path_gain(std::span<ChannelDraw> draws) {
  for (auto& d : draws) {
    const double gain =
        (linalg::squared_norm(d.h1) + linalg::squared_norm(d.h_int)) / static_cast<double>(2 * d.h1.size());
    if (!(gain > 0.0)) continue;
    const double s = 1.0 / std::sqrt(gain);
    for (auto& x : d.h1) x *= s;
    for (auto& x : d.h_int) x *= s;
    for (auto& row : d.ccm_rows)
      for (auto& x : row) x *= s * s;
  }
}

Dataset ingest_external(const std::string& path, ExternalNormalization normalization, const SnrDraw& snr,
                        std::uint64_t seed, std::size_t threads) {
  DatasetHeader header;
  std::vector<ChannelDraw> draws = read_external_channels(path, &header);
  if (normalization == ExternalNormalization::cumulative_path_gain) normalize_cumulative_path_gain(draws);
  return assemble_dataset(header, draws, snr, seed, threads);
}

}  // namespace mcce::scenario
