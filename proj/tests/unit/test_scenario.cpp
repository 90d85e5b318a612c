#include <cmath>
#include <limits>

#include "doctest.h"
#include "mcce/dataset_io.hpp"
#include "mcce/linalg.hpp"
#include "mcce/scenario.hpp"
#include "test_util.hpp"

using namespace mcce;
using namespace mcce::scenario;

namespace {

SystemConfig small_config(std::size_t antennas = 8, std::size_t cells = 2) {
  SystemConfig cfg;
  cfg.antennas = antennas;
  cfg.cells = cells;
  cfg.priors.assign(cells, channel::AngularPrior::uniform());
  cfg.priors[0] = channel::AngularPrior::gaussian(0.0, 30.0);
  return cfg;
}

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix a(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) a(i, j) = standard_complex_normal(rng);
  return a;
}

double power_ratio(std::span<const ChannelDraw> draws) {
  double p1 = 0.0, pi = 0.0;
  for (const auto& d : draws) {
    p1 += linalg::squared_norm(d.h1);
    pi += linalg::squared_norm(d.h_int);
  }
  return pi / p1;
}

}  // namespace

TEST_CASE("pilot matrices") {
  const auto two = gen_pilots(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(two.column(0)[0] - cplx(r)) < 1e-15);
  CHECK(std::abs(two.column(0)[1] - cplx(r)) < 1e-15);
  CHECK(std::abs(two.column(1)[0] - cplx(r)) < 1e-15);
  CHECK(std::abs(two.column(1)[1] - cplx(-r)) < 1e-15);

  const auto p = gen_pilots(16, 8);
  const DenseMatrix gram = p.dense().adjoint() * p.dense();
  CHECK((gram - DenseMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
  for (std::size_t k = 0; k < 8; ++k)
    for (const auto& x : p.column(k)) CHECK(std::abs(std::abs(x) - 0.25) < 1e-15);

  CHECK_THROWS_AS(gen_pilots(4, 5), std::invalid_argument);
}

TEST_CASE("despreading") {
  const std::size_t M = 6;
  const auto pilots = gen_pilots(4, 2);
  const DenseMatrix zero_noise = DenseMatrix::Zero(M, 4);

  const DenseMatrix h1 = random_matrix(M, 2, 1);
  const DenseMatrix y_single = received_pilot_signal(std::vector<DenseMatrix>{h1}, pilots, zero_noise);
  for (std::size_t k = 0; k < 2; ++k) {
    const ComplexVector got = despread(y_single, pilots.column(k));
    ComplexVector want(M);
    for (std::size_t m = 0; m < M; ++m) want[m] = h1(m, k);
    CHECK(testutil::max_abs_diff(got, want) < 1e-12);
  }

  const DenseMatrix h2 = random_matrix(M, 2, 2);
  const DenseMatrix y_two = received_pilot_signal(std::vector<DenseMatrix>{h1, h2}, pilots, zero_noise);
  const ComplexVector got = despread(y_two, pilots.column(1));
  ComplexVector want(M);
  for (std::size_t m = 0; m < M; ++m) want[m] = h1(m, 1) + h2(m, 1);
  CHECK(testutil::max_abs_diff(got, want) < 1e-12);

  for (const auto& x : despread(DenseMatrix::Zero(M, 4), pilots.column(0))) CHECK(x == cplx(0.0));

  // Distributes over cell sums, noise included.
  const DenseMatrix n = random_matrix(M, 4, 3);
  const DenseMatrix y1 = received_pilot_signal(std::vector<DenseMatrix>{h1}, pilots, n);
  const DenseMatrix y2 = received_pilot_signal(std::vector<DenseMatrix>{h2}, pilots, zero_noise);
  const ComplexVector sum_first = despread(y1 + y2, pilots.column(0));
  ComplexVector first_sum = despread(y1, pilots.column(0));
  const ComplexVector second = despread(y2, pilots.column(0));
  for (std::size_t m = 0; m < M; ++m) first_sum[m] += second[m];
  CHECK(testutil::max_abs_diff(sum_first, first_sum) < 1e-12);

  CHECK_THROWS_AS(despread(DenseMatrix::Zero(M, 3), pilots.column(0)), std::invalid_argument);
}

TEST_CASE("system configuration validation") {
  auto cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.users = 3;
  cfg.pilot_length = 2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.snr_low_db = 10.0;
  cfg.snr_high_db = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.priors.pop_back();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("record synthesis") {
  const auto cfg = small_config();
  Rng rng(4);
  const auto genie = synthesize_record(cfg, std::numeric_limits<double>::infinity(), rng);
  CHECK(genie.sigma_sq == 0.0);
  for (std::size_t m = 0; m < cfg.antennas; ++m) CHECK(genie.y[m] == genie.h1[m] + genie.h_int[m]);

  for (int i = 0; i < 100; ++i) {
    const auto r = synthesize_record(cfg, 7.0, rng);
    for (std::size_t m = 0; m < cfg.antennas; ++m) CHECK(r.y[m] == r.y1[m] + r.y2[m]);
    CHECK(r.sigma1_sq + r.sigma2_sq == r.sigma_sq);
    CHECK(r.sigma_sq == doctest::Approx(std::pow(10.0, -0.7)).epsilon(1e-14));
    CHECK(r.ccm_rows.size() == cfg.cells);
  }

  // Observation noise power at 0 dB.
  double v = 0.0, v1 = 0.0;
  std::size_t n = 0;
  Rng big(5);
  for (int i = 0; i < 100000; ++i) {
    const auto r = synthesize_record(cfg, 0.0, big);
    for (std::size_t m = 0; m < cfg.antennas; ++m) {
      const std::complex<double> e = std::complex<double>(r.y[m]) - std::complex<double>(r.h1[m]) -
                                     std::complex<double>(r.h_int[m]);
      v += std::norm(e);
      v1 += std::norm(std::complex<double>(r.y1[m]) - std::complex<double>(r.h1[m]));
      ++n;
    }
  }
  CHECK(std::abs(v / double(n) - 1.0) < 0.02);
  CHECK(std::abs(v1 / double(n) - 0.5) < 0.01);
}

TEST_CASE("split generation is deterministic and thread-invariant") {
  const auto cfg = small_config();
  const auto a = generate_split(cfg, 300, 17, SnrDraw::uniform(-16.0, 36.0), 1);
  const auto b = generate_split(cfg, 300, 17, SnrDraw::uniform(-16.0, 36.0), 4);
  CHECK(a.data == b.data);
  CHECK(a.normalization.scale == b.normalization.scale);
  const auto c = generate_split(cfg, 300, 18, SnrDraw::uniform(-16.0, 36.0), 1);
  CHECK_FALSE(a.data == c.data);

  double lo = 1e9, hi = -1e9;
  for (const auto& r : a.data.records) {
    const double snr = -10.0 * std::log10(r.sigma_sq);
    lo = std::min(lo, snr);
    hi = std::max(hi, snr);
  }
  CHECK(lo >= -16.0 - 1e-9);
  CHECK(hi <= 36.0 + 1e-9);
  CHECK(hi - lo > 40.0);

  // Invariant: empirical noise power of the normalized split equals the nominal one.
  const auto fixed = generate_split(cfg, 20000, 3, SnrDraw::fixed(10.0));
  double v = 0.0;
  for (const auto& r : fixed.data.records)
    for (std::size_t m = 0; m < cfg.antennas; ++m)
      v += std::norm(std::complex<double>(r.y[m]) - std::complex<double>(r.h1[m]) - std::complex<double>(r.h_int[m]));
  CHECK(std::abs(v / double(20000 * cfg.antennas) / 0.1 - 1.0) < 0.03);
}

TEST_CASE("normalization") {
  const auto cfg = small_config();
  auto draws = generate_channel_draws(cfg, 500, 9);
  const double ratio_before = power_ratio(draws);
  normalize_dataset(draws);
  CHECK(std::abs(power_ratio(draws) - ratio_before) < 1e-12 * ratio_before);

  double p = 0.0;
  for (const auto& d : draws) p += linalg::squared_norm(d.h1);
  CHECK(std::abs(p / double(500 * cfg.antennas) - 1.0) < 1e-12);

  CHECK(std::abs(normalize_dataset(draws).scale - 1.0) < 1e-12);

  for (auto& d : draws) {
    for (auto& x : d.h1) x *= 3.0;
    for (auto& x : d.h_int) x *= 3.0;
  }
  CHECK(std::abs(normalize_dataset(draws).scale - 1.0 / 3.0) < 1e-12);

  std::vector<ChannelDraw> zeros(3);
  for (auto& d : zeros) d.h1.assign(4, cplx(0.0)), d.h_int.assign(4, cplx(0.0));
  CHECK_THROWS_AS(normalize_dataset(zeros), std::invalid_argument);
  CHECK_THROWS_AS(normalize_dataset(std::span<ChannelDraw>{}), std::invalid_argument);

  // Stored records: observations scale by s and noise variances by s^2.
  auto split = generate_split(cfg, 50, 10, SnrDraw::fixed(5.0));
  auto scaled = split.data;
  for (auto& r : scaled.records) {
    for (auto* v : {&r.h1, &r.h_int, &r.y, &r.y1, &r.y2})
      for (auto& x : *v) x *= 2.0f;
    for (auto& row : r.ccm_rows)
      for (auto& x : row) x *= 4.0f;
    r.sigma_sq *= 4.0;
    r.sigma1_sq *= 4.0;
    r.sigma2_sq *= 4.0;
  }
  auto unscaled = split.data;
  const double s_unscaled = normalize_dataset(unscaled).scale;
  CHECK(std::abs(s_unscaled - 1.0) < 1e-6);
  CHECK(normalize_dataset(scaled).scale == 0.5 * s_unscaled);
  CHECK(scaled == unscaled);
}

TEST_CASE("external channel ingestion") {
  testutil::TempDir dir("ingest");
  const auto cfg = small_config();
  const std::uint64_t seed = 23;
  const auto reference = generate_split(cfg, 200, seed, SnrDraw::uniform(-16.0, 36.0));

  // Channels-only file carrying the pipeline's own normalized channels.
  auto draws = generate_channel_draws(cfg, 200, seed);
  normalize_dataset(draws);
  Dataset channels_only;
  channels_only.header = {cfg.antennas, cfg.cells, cfg.priors, false, true};
  for (const auto& d : draws) channels_only.records.push_back(quantize(d));
  io::save_dataset(channels_only, dir.file("channels.mcce"));

  const auto ingested =
      ingest_external(dir.file("channels.mcce"), ExternalNormalization::none, SnrDraw::uniform(-16.0, 36.0), seed);
  CHECK(ingested == reference.data);

  // Cumulative path gain removes per-pair scaling (double precision).
  auto base = draws;
  normalize_cumulative_path_gain(base);
  auto times5 = draws;
  for (auto& d : times5) {
    for (auto& x : d.h1) x *= 5.0;
    for (auto& x : d.h_int) x *= 5.0;
  }
  normalize_cumulative_path_gain(times5);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    CHECK(testutil::max_abs_diff(times5[i].h1, base[i].h1) < 1e-10);
    CHECK(testutil::max_abs_diff(times5[i].h_int, base[i].h_int) < 1e-10);
    const double before = testutil::norm(draws[i].h_int) / testutil::norm(draws[i].h1);
    const double after = testutil::norm(base[i].h_int) / testutil::norm(base[i].h1);
    CHECK(std::abs(before - after) < 1e-12 * before);
  }

  // Through the file: a power-of-two rescale is exact in f32, x5 rounds once.
  auto write_scaled = [&](float factor, const std::string& name) {
    Dataset d = channels_only;
    for (auto& r : d.records) {
      for (auto& x : r.h1) x *= factor;
      for (auto& x : r.h_int) x *= factor;
    }
    io::save_dataset(d, dir.file(name));
    return ingest_external(dir.file(name), ExternalNormalization::cumulative_path_gain, SnrDraw::fixed(10.0), seed);
  };
  const auto g1 = write_scaled(1.0f, "x1.mcce");
  const auto g4 = write_scaled(4.0f, "x4.mcce");
  const auto g5 = write_scaled(5.0f, "x5.mcce");
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g4.records[i].h1 == g1.records[i].h1);
    CHECK(g4.records[i].h_int == g1.records[i].h_int);
    CHECK(testutil::max_abs_diff(to_double(g5.records[i].h1), to_double(g1.records[i].h1)) < 1e-6);
  }

  io::save_dataset(reference.data, dir.file("observed.mcce"));
  CHECK_THROWS_AS(ingest_external(dir.file("observed.mcce"), ExternalNormalization::none, SnrDraw::fixed(0.0), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_external_normalization("peak"), std::invalid_argument);
  CHECK(parse_external_normalization("cumulative-path-gain") == ExternalNormalization::cumulative_path_gain);
}
