#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcce/channel.hpp"
#include "mcce/rng.hpp"
#include "mcce/types.hpp"

// Pilot-contaminated multi-cell observations. Cell 0 is the cell of
// interest; cells 1..L-1 interfere and are summed into h_int.

namespace mcce::scenario {

// Stream ids for make_stream(seed, stream, record).
inline constexpr std::uint64_t kChannelStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

struct SystemConfig {
  std::size_t antennas = 128;
  std::size_t cells = 2;
  std::size_t users = 1;
  std::size_t pilot_length = 1;
  double snr_low_db = -16.0;
  double snr_high_db = 36.0;
  std::size_t train_count = 100000;
  std::size_t val_count = 10000;
  std::size_t test_count = 10000;
  std::vector<channel::AngularPrior> priors;  // one per cell
  channel::ClusterParams clusters;

  void validate() const;
  bool operator==(const SystemConfig&) const = default;
};

// K orthonormal pilot columns of length T_tr, stored column-major.
class PilotMatrix {
 public:
  PilotMatrix(std::size_t length, std::size_t users, std::vector<cplx> data);

  std::size_t length() const { return length_; }
  std::size_t users() const { return users_; }
  std::span<const cplx> column(std::size_t k) const;
  DenseMatrix dense() const;

 private:
  std::size_t length_;
  std::size_t users_;
  std::vector<cplx> data_;
};

// First K columns of the unitary T_tr-point DFT matrix.
PilotMatrix gen_pilots(std::size_t pilot_length, std::size_t users);

// Y psi for an M x T_tr received block.
ComplexVector despread(const DenseMatrix& received, std::span<const cplx> psi);

// Y = sum_l H_l Psi^H + N, with H_l the M x K channel matrix of cell l.
DenseMatrix received_pilot_signal(std::span<const DenseMatrix> cell_channels, const PilotMatrix& pilots,
                                  const DenseMatrix& noise);

// Double-precision channels of one observation before storage.
struct ChannelDraw {
  ComplexVector h1;
  ComplexVector h_int;
  std::vector<ComplexVector> ccm_rows;  // per cell; empty when unknown
  std::vector<channel::ClusterSet> deltas;
};

// One stored observation. Values are f32 as in the dataset file; y is the
// f32 sum y1 + y2, so y[m] == y1[m] + y2[m] holds in float arithmetic.
struct DatasetRecord {
  std::vector<cfloat> h1;
  std::vector<cfloat> h_int;
  std::vector<std::vector<cfloat>> ccm_rows;
  std::vector<cfloat> y;
  std::vector<cfloat> y1;
  std::vector<cfloat> y2;
  double sigma_sq = 0.0;
  double sigma1_sq = 0.0;
  double sigma2_sq = 0.0;

  bool has_observation() const { return !y.empty(); }
  bool operator==(const DatasetRecord&) const = default;
};

struct DatasetHeader {
  std::size_t antennas = 0;
  std::size_t cells = 0;
  std::vector<channel::AngularPrior> priors;
  bool has_observations = false;
  bool has_ccms = false;

  bool operator==(const DatasetHeader&) const = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<DatasetRecord> records;

  std::size_t size() const { return records.size(); }
  bool operator==(const Dataset&) const = default;
};

struct SnrDraw {
  enum class Mode { uniform_db, fixed_db, noiseless };

  Mode mode = Mode::uniform_db;
  double low_db = -16.0;
  double high_db = 36.0;

  static SnrDraw uniform(double low, double high) { return {Mode::uniform_db, low, high}; }
  static SnrDraw fixed(double db) { return {Mode::fixed_db, db, db}; }
  static SnrDraw noiseless() { return {Mode::noiseless, 0.0, 0.0}; }
};

// sigma^2 = 10^(-snr_db/10); +inf gives 0.
double noise_variance(double snr_db);

ChannelDraw draw_channels(const SystemConfig& cfg, const channel::CcmQuadrature& quad, Rng& rng);

// Rounds the channels of a draw into an observation-free record.
DatasetRecord quantize(const ChannelDraw& draw);

// Adds n1, n2 ~ CN(0, sigma^2/2 I) each: y1 = h1 + n1, y2 = h_int + n2, y = y1 + y2.
void attach_observation(DatasetRecord& record, double snr_db, Rng& rng);

// Fresh delta per cell, fresh channels, then the observation at snr_db
// (std::numeric_limits<double>::infinity() for the noiseless genie mode).
DatasetRecord synthesize_record(const SystemConfig& cfg, double snr_db, Rng& rng);

struct NormalizationReport {
  double scale = 1.0;               // applied to every channel and observation
  double signal_power_before = 0.0; // mean per-antenna power of h1
};

// Global scalar so that (1/(M T)) sum ||h1||^2 = 1.
NormalizationReport normalize_dataset(std::span<ChannelDraw> draws);

// Same normalization for stored records; observations are scaled by s and
// noise variances by s^2.
NormalizationReport normalize_dataset(Dataset& dataset);

std::vector<ChannelDraw> generate_channel_draws(const SystemConfig& cfg, std::size_t count, std::uint64_t seed,
                                                std::size_t threads = 1);

// Quantizes normalized draws and synthesizes their observations with
// per-record noise streams make_stream(seed, kNoiseStream, i).
Dataset assemble_dataset(const DatasetHeader& header, std::span<const ChannelDraw> draws, const SnrDraw& snr,
                         std::uint64_t seed, std::size_t threads = 1);

struct GeneratedSplit {
  Dataset data;
  NormalizationReport normalization;
};

GeneratedSplit generate_split(const SystemConfig& cfg, std::size_t count, std::uint64_t seed, const SnrDraw& snr,
                              std::size_t threads = 1);

enum class ExternalNormalization { none, cumulative_path_gain };

ExternalNormalization parse_external_normalization(const std::string& name);

// Reads a channels-only dataset file into double-precision draws.
std::vector<ChannelDraw> read_external_channels(const std::string& path, DatasetHeader* header = nullptr);

// Scales each (h1, h_int) pair by 1 / sqrt(mean per-antenna power of the pair).
void normalize_cumulative_path_gain(std::span<ChannelDraw> draws);

Dataset ingest_external(const std::string& path, ExternalNormalization normalization, const SnrDraw& snr,
                        std::uint64_t seed, std::size_t threads = 1);

// Helpers for the estimators and the network.
ComplexVector to_double(std::span<const cfloat> v);
std::vector<cfloat> to_float(std::span<const cplx> v);

}  // namespace mcce::scenario
