#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcce/estimators.hpp"
#include "mcce/scenario.hpp"
#include "mcce/types.hpp"
#include "mcce/vae/model.hpp"

namespace mcce::bench {

// Noise stream id for evaluation points; point p of a sweep uses
// make_stream(seed, kEvalStreamBase + p, record).
inline constexpr std::uint64_t kEvalStreamBase = 1000;

// (1/(M T)) sum ||h - h_hat||^2
double nmse(std::span<const ComplexVector> estimates, std::span<const ComplexVector> truths, std::size_t antennas);

struct ReportRow {
  std::string estimator;
  std::string point;
  double nmse = 0.0;
  double nmse_db = 0.0;
  std::size_t n = 0;
  double ci95 = 0.0;  // normal-approximation half-width of the mean squared error

  bool operator==(const ReportRow&) const = default;
};

struct NmseReport {
  std::vector<ReportRow> rows;

  const ReportRow& find(const std::string& estimator, const std::string& point) const;
  bool operator==(const NmseReport&) const = default;
};

// Mean and 95% half-width of per-record errors e_i = ||h - h_hat||^2 / M.
ReportRow summarize(const std::string& estimator, const std::string& point, std::span<const double> errors);

// Fixed channels with fresh CN(0, sigma^2 I) noise: y = h1 + h_int + n.
struct EvalStream {
  double snr_db = 0.0;
  double sigma_sq = 0.0;
  std::vector<ComplexVector> h1;
  std::vector<ComplexVector> y;
  std::vector<ComplexVector> noiseless;  // h1 + h_int
  std::uint64_t checksum = 0;
};

EvalStream make_eval_stream(const scenario::Dataset& test, double snr_db, std::uint64_t seed, std::size_t point);

// FNV-1a over the bytes of (h1, y, noiseless).
std::uint64_t stream_checksum(const EvalStream& stream);

// Trained models and training-split statistics available to the estimators.
struct Resources {
  const scenario::Dataset* test = nullptr;  // records for genie-cov (true CCMs)
  const est::ScovEstimator* scov = nullptr;
  const vae::VaeModel* vae = nullptr;
  const vae::VaeModel* vae_genie = nullptr;
  const vae::VaeModel* single = nullptr;
};

// Throws naming the missing artifact when `kind` cannot run.
void require_resources(est::EstimatorKind kind, const Resources& res);

// Per-record squared errors of one estimator on a stream. Verifies the
// stream checksum before returning.
std::vector<double> per_record_errors(est::EstimatorKind kind, const EvalStream& stream, const Resources& res,
                                      std::size_t threads = 1);

// One row per estimator at one operating point.
NmseReport evaluate_point(const EvalStream& stream, std::span<const est::EstimatorKind> kinds, const Resources& res,
                          const std::string& point, std::size_t threads = 1);

std::vector<double> default_snr_grid();
std::string snr_label(double snr_db);

NmseReport sweep_snr(std::span<const est::EstimatorKind> kinds, const Resources& res, std::span<const double> grid,
                     std::uint64_t seed, std::size_t threads = 1);

struct AoaCase {
  std::string label;
  Resources resources;
};

NmseReport sweep_aoa(std::span<const AoaCase> cases, std::span<const est::EstimatorKind> kinds, double snr_db,
                     std::uint64_t seed, std::size_t threads = 1);

enum class ReportFormat { csv, plot_data };

ReportFormat parse_report_format(const std::string& name);
std::string format_csv(const NmseReport& report);
std::string format_plot_data(const NmseReport& report);
NmseReport parse_csv(const std::string& text);
void emit_report(const NmseReport& report, const std::string& path, ReportFormat format);
NmseReport read_report(const std::string& path);

}  // namespace mcce::bench
