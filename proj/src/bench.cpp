#include "mcce/bench.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mcce/parallel.hpp"
#include "mcce/rng.hpp"

namespace mcce::bench {
namespace {

using est::EstimatorKind;

constexpr std::size_t kChunk = 256;
const char* kCsvHeader = "estimator,point,nmse,nmse_db,n,ci95";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

double error_of(const ComplexVector& h, const ComplexVector& est) {
  double s = 0.0;
  for (std::size_t m = 0; m < h.size(); ++m) s += std::norm(h[m] - est[m]);
  return s / static_cast<double>(h.size());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

double nmse(std::span<const ComplexVector> estimates, std::span<const ComplexVector> truths, std::size_t antennas) {
  if (estimates.size() != truths.size()) throw std::invalid_argument("nmse: estimate and truth counts differ");
  if (truths.empty()) throw std::invalid_argument("nmse: no records");
  double s = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (estimates[i].size() != antennas || truths[i].size() != antennas)
      throw std::invalid_argument("nmse: vector length differs from the antenna count");
    for (std::size_t m = 0; m < antennas; ++m) s += std::norm(truths[i][m] - estimates[i][m]);
  }
  return s / (static_cast<double>(antennas) * static_cast<double>(truths.size()));
}

const ReportRow& NmseReport::find(const std::string& estimator, const std::string& point) const {
  for (const auto& r : rows)
    if (r.estimator == estimator && r.point == point) return r;
  throw std::out_of_range("report has no row for " + estimator + " at " + point);
}

ReportRow summarize(const std::string& estimator, const std::string& point, std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("summarize: no records");
  const double n = static_cast<double>(errors.size());
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= n;
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  var = errors.size() > 1 ? var / (n - 1.0) : 0.0;
  ReportRow r;
  r.estimator = estimator;
  r.point = point;
  r.nmse = mean;
  r.nmse_db = 10.0 * std::log10(mean);
  r.n = errors.size();
  r.ci95 = 1.96 * std::sqrt(var / n);
  return r;
}

std::uint64_t stream_checksum(const EvalStream& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* set : {&s.h1, &s.y, &s.noiseless})
    for (const auto& v : *set) fnv_bytes(h, v.data(), v.size() * sizeof(cplx));
  fnv_bytes(h, &s.sigma_sq, sizeof(double));
  return h;
}

EvalStream make_eval_stream(const scenario::Dataset& test, double snr_db, std::uint64_t seed, std::size_t point) {
  if (test.size() == 0) throw std::invalid_argument("evaluation needs a nonempty test set");
  EvalStream s;
  s.snr_db = snr_db;
  s.sigma_sq = scenario::noise_variance(snr_db);
  const double noise_std = std::sqrt(s.sigma_sq);
  const std::size_t T = test.size();
  s.h1.resize(T);
  s.y.resize(T);
  s.noiseless.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    const auto& r = test.records[i];
    Rng rng = make_stream(seed, kEvalStreamBase + point, i);
    s.h1[i] = scenario::to_double(r.h1);
    s.noiseless[i] = s.h1[i];
    s.y[i].resize(r.h1.size());
    for (std::size_t m = 0; m < r.h1.size(); ++m) {
      s.noiseless[i][m] += cplx(r.h_int[m]);
      s.y[i][m] = s.noiseless[i][m] + noise_std * standard_complex_normal(rng);
    }
  }
  s.checksum = stream_checksum(s);
  return s;
}

void require_resources(EstimatorKind kind, const Resources& res) {
  const std::string tag = est::to_string(kind);
  switch (kind) {
    case EstimatorKind::ls: return;
    case EstimatorKind::scov:
      if (!res.scov) throw std::invalid_argument(tag + " needs training-split sample statistics");
      return;
    case EstimatorKind::genie_cov:
      if (!res.test || !res.test->header.has_ccms) throw std::invalid_argument(tag + " needs a test set with CCMs");
      return;
    case EstimatorKind::vae:
      if (!res.vae) throw std::invalid_argument("missing checkpoint for " + tag);
      est::require_model_for(kind, res.vae->config());
      return;
    case EstimatorKind::vae_genie:
      if (!res.vae_genie) throw std::invalid_argument("missing checkpoint for " + tag);
      est::require_model_for(kind, res.vae_genie->config());
      return;
    case EstimatorKind::vae_ignore:
    case EstimatorKind::vae_awgn:
    case EstimatorKind::vae_scov:
      if (!res.single) throw std::invalid_argument("missing checkpoint for " + tag);
      est::require_model_for(kind, res.single->config());
      if (kind != EstimatorKind::vae_ignore && !res.scov)
        throw std::invalid_argument(tag + " needs training-split sample statistics");
      return;
  }
}

std::vector<double> per_record_errors(EstimatorKind kind, const EvalStream& stream, const Resources& res,
                                      std::size_t threads) {
  require_resources(kind, res);
  const std::size_t T = stream.h1.size();
  if (kind == EstimatorKind::genie_cov && res.test->size() != T)
    throw std::invalid_argument("genie-cov: test set and stream sizes differ");
  std::vector<double> errors(T, 0.0);
  const std::size_t chunks = (T + kChunk - 1) / kChunk;
  const vae::VaeModel* model = kind == EstimatorKind::vae         ? res.vae
                               : kind == EstimatorKind::vae_genie ? res.vae_genie
                                                                  : res.single;
  const est::SampleStats* stats = res.scov ? &res.scov->stats() : nullptr;

  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(T, begin + kChunk);
    std::vector<vae::CondGaussianParams> moments;
    if (est::is_vae_kind(kind)) {
      const auto& inputs = kind == EstimatorKind::vae_genie ? stream.noiseless : stream.y;
      moments = model->moments_batch(std::span<const ComplexVector>(inputs.data() + begin, end - begin));
    }
    for (std::size_t i = begin; i < end; ++i) {
      ComplexVector h;
      switch (kind) {
        case EstimatorKind::ls: h = est::ls_estimate(stream.y[i]); break;
        case EstimatorKind::scov: h = res.scov->estimate(stream.sigma_sq, stream.y[i]); break;
        case EstimatorKind::genie_cov:
          h = est::genie_cov_estimate(res.test->records[i], stream.sigma_sq, stream.y[i]);
          break;
        default: h = est::vae_plugin(kind, moments[i - begin], stream.sigma_sq, stream.y[i], stats); break;
      }
      errors[i] = error_of(stream.h1[i], h);
    }
  });
  if (stream_checksum(stream) != stream.checksum)
    throw std::logic_error("evaluation stream changed during " + est::to_string(kind));
  return errors;
}

NmseReport evaluate_point(const EvalStream& stream, std::span<const EstimatorKind> kinds, const Resources& res,
                          const std::string& point, std::size_t threads) {
  for (auto k : kinds) require_resources(k, res);
  NmseReport report;
  for (auto k : kinds) {
    const auto errors = per_record_errors(k, stream, res, threads);
    report.rows.push_back(summarize(est::to_string(k), point, errors));
  }
  return report;
}

std::vector<double> default_snr_grid() {
  std::vector<double> g;
  for (int s = -10; s <= 30; s += 5) g.push_back(s);
  return g;
}

std::string snr_label(double snr_db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", snr_db);
  return buf;
}

NmseReport sweep_snr(std::span<const EstimatorKind> kinds, const Resources& res, std::span<const double> grid,
                     std::uint64_t seed, std::size_t threads) {
  if (!res.test) throw std::invalid_argument("sweep_snr needs a test set");
  for (auto k : kinds) require_resources(k, res);
  NmseReport report;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const EvalStream stream = make_eval_stream(*res.test, grid[p], seed, p);
    const NmseReport part = evaluate_point(stream, kinds, res, snr_label(grid[p]), threads);
    report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
  }
  return report;
}

NmseReport sweep_aoa(std::span<const AoaCase> cases, std::span<const EstimatorKind> kinds, double snr_db,
                     std::uint64_t seed, std::size_t threads) {
  for (const auto& c : cases) {
    if (!c.resources.test) throw std::invalid_argument("sweep_aoa: case " + c.label + " has no test set");
    for (auto k : kinds) {
      try {
        require_resources(k, c.resources);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("sweep_aoa: case " + c.label + ": " + e.what());
      }
    }
  }
  NmseReport report;
  for (const auto& c : cases) {
    const EvalStream stream = make_eval_stream(*c.resources.test, snr_db, seed, 0);
    const NmseReport part = evaluate_point(stream, kinds, c.resources, c.label, threads);
    report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
  }
  return report;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "plot-data") return ReportFormat::plot_data;
  throw std::invalid_argument("unknown report format '" + name + "' (expected csv or plot-data)");
}

std::string format_csv(const NmseReport& report) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : report.rows) {
    if (r.estimator.find_first_of(",\n") != std::string::npos || r.point.find_first_of(",\n") != std::string::npos)
      throw std::invalid_argument("report labels must not contain commas or newlines");
    out += r.estimator + "," + r.point + "," + format_double(r.nmse) + "," + format_double(r.nmse_db) + "," +
           std::to_string(r.n) + "," + format_double(r.ci95) + "\n";
  }
  return out;
}

std::string format_plot_data(const NmseReport& report) {
  // One block per estimator, points in report order, blank line between blocks.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReportRow*>> series;
  for (const auto& r : report.rows) {
    if (!series.count(r.estimator)) order.push_back(r.estimator);
    series[r.estimator].push_back(&r);
  }
  std::string out;
  for (std::size_t s = 0; s < order.size(); ++s) {
    if (s) out += "\n";
    out += "# estimator " + order[s] + "\n# point nmse nmse_db ci95 n\n";
    for (const auto* r : series[order[s]])
      out += r->point + " " + format_double(r->nmse) + " " + format_double(r->nmse_db) + " " +
             format_double(r->ci95) + " " + std::to_string(r->n) + "\n";
  }
  return out;
}

NmseReport parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::invalid_argument("report CSV has a wrong header");
  NmseReport report;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw std::invalid_argument("report CSV line " + std::to_string(lineno) + " has " +
                                                   std::to_string(f.size()) + " fields");
    ReportRow r;
    r.estimator = f[0];
    r.point = f[1];
    try {
      r.nmse = std::stod(f[2]);
      r.nmse_db = std::stod(f[3]);
      r.n = static_cast<std::size_t>(std::stoull(f[4]));
      r.ci95 = std::stod(f[5]);
    } catch (const std::exception&) {
      throw std::invalid_argument("report CSV line " + std::to_string(lineno) + " has a malformed number");
    }
    report.rows.push_back(r);
  }
  return report;
}

void emit_report(const NmseReport& report, const std::string& path, ReportFormat format) {
  const std::string text = format == ReportFormat::csv ? format_csv(report) : format_plot_data(report);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report to " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing report to " + path);
}

NmseReport read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read report " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace mcce::bench
