#include "mcce/estimators.hpp"

#include <algorithm>
#include <stdexcept>

#include "mcce/errors.hpp"
#include "mcce/linalg.hpp"

namespace mcce::est {
namespace {

void require_len(std::span<const cplx> v, std::size_t M, const char* what) {
  if (v.size() != M) throw std::invalid_argument(std::string("lmmse_core: ") + what + " has the wrong length");
}

Eigen::VectorXcd residual(std::span<const cplx> y, std::span<const cplx> mu1, std::span<const cplx> mu_int) {
  Eigen::VectorXcd r(static_cast<Eigen::Index>(y.size()));
  for (std::size_t m = 0; m < y.size(); ++m) r(static_cast<Eigen::Index>(m)) = y[m] - mu1[m] - mu_int[m];
  return r;
}

DenseMatrix toeplitz_from_float(const std::vector<cfloat>& row) {
  return linalg::toeplitz_dense(ToeplitzFirstRow{scenario::to_double(row)});
}

void true_ccms(const scenario::DatasetRecord& record, DenseMatrix& c1, DenseMatrix& c_int) {
  if (record.ccm_rows.empty()) throw std::invalid_argument("genie-cov requires the record's true CCMs");
  const std::size_t M = record.h1.size();
  c1 = toeplitz_from_float(record.ccm_rows[0]);
  c_int = DenseMatrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  for (std::size_t l = 1; l < record.ccm_rows.size(); ++l) c_int += toeplitz_from_float(record.ccm_rows[l]);
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ls: return "ls";
    case EstimatorKind::scov: return "scov";
    case EstimatorKind::genie_cov: return "genie-cov";
    case EstimatorKind::vae: return "vae";
    case EstimatorKind::vae_genie: return "vae-genie";
    case EstimatorKind::vae_ignore: return "vae-ignore";
    case EstimatorKind::vae_awgn: return "vae-awgn";
    case EstimatorKind::vae_scov: return "vae-scov";
  }
  return "?";
}

const std::vector<EstimatorKind>& all_estimator_kinds() {
  static const std::vector<EstimatorKind> kinds{EstimatorKind::ls,        EstimatorKind::scov,
                                                EstimatorKind::genie_cov, EstimatorKind::vae,
                                                EstimatorKind::vae_genie, EstimatorKind::vae_ignore,
                                                EstimatorKind::vae_awgn,  EstimatorKind::vae_scov};
  return kinds;
}

EstimatorKind parse_estimator_kind(const std::string& tag) {
  for (auto k : all_estimator_kinds())
    if (to_string(k) == tag) return k;
  throw std::invalid_argument("unknown estimator '" + tag + "'");
}

std::size_t required_blocks(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::vae:
    case EstimatorKind::vae_genie: return 2;
    case EstimatorKind::vae_ignore:
    case EstimatorKind::vae_awgn:
    case EstimatorKind::vae_scov: return 1;
    default: return 0;
  }
}

bool is_vae_kind(EstimatorKind kind) { return required_blocks(kind) != 0; }

void require_model_for(EstimatorKind kind, const vae::ModelConfig& config) {
  const std::size_t need = required_blocks(kind);
  if (need == 0) return;
  if (config.num_blocks != need)
    throw std::invalid_argument("estimator " + to_string(kind) + " needs a checkpoint with num_blocks=" +
                                std::to_string(need) + " but the checkpoint has num_blocks=" +
                                std::to_string(config.num_blocks));
  const bool genie = kind == EstimatorKind::vae_genie;
  if (need == 2 && config.genie != genie)
    throw std::invalid_argument("estimator " + to_string(kind) + (genie ? " needs a genie-trained checkpoint"
                                                                        : " needs a noisy-trained checkpoint"));
}

ComplexVector lmmse_core(std::span<const cplx> mu1, const CirculantSpectrum& c1, std::span<const cplx> mu_int,
                         const CirculantSpectrum& c_int, double sigma_sq, std::span<const cplx> y) {
  const std::size_t M = y.size();
  require_len(mu1, M, "mu1");
  require_len(mu_int, M, "mu_int");
  if (c1.size() != M || c_int.size() != M) throw std::invalid_argument("lmmse_core: spectrum has the wrong length");
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("lmmse_core: sigma_sq must be nonnegative");
  ComplexVector r(M);
  for (std::size_t m = 0; m < M; ++m) r[m] = y[m] - mu1[m] - mu_int[m];
  ComplexVector f = linalg::unitary_dft(r);
  for (std::size_t k = 0; k < M; ++k) {
    const double a = c1.eigenvalues[k];
    const double d = a + c_int.eigenvalues[k] + sigma_sq;
    if (a < 0.0 || c_int.eigenvalues[k] < 0.0) throw std::invalid_argument("lmmse_core: negative spectrum");
    if (d > 0.0) {
      f[k] *= a / d;
    } else {
      f[k] = 0.0;
    }
  }
  ComplexVector h = linalg::unitary_dft(f, true);
  for (std::size_t m = 0; m < M; ++m) h[m] += mu1[m];
  return h;
}

DenseLmmse::DenseLmmse(const DenseMatrix& c1, const DenseMatrix& c_int, double sigma_sq) {
  const auto M = c1.rows();
  if (c1.cols() != M || c_int.rows() != M || c_int.cols() != M)
    throw std::invalid_argument("lmmse_core: covariance shapes disagree");
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("lmmse_core: sigma_sq must be nonnegative");
  DenseMatrix cy = c1 + c_int;
  cy.diagonal().array() += sigma_sq;
  // Exact Hermitian symmetry for the factorization.
  cy = (0.5 * (cy + cy.adjoint())).eval();
  const linalg::HermitianSolver solver(cy);
  // W^H = C_y^{-1} C1 because both are Hermitian.
  DenseMatrix wh(M, M);
  for (Eigen::Index j = 0; j < M; ++j) wh.col(j) = solver.solve(Eigen::VectorXcd(c1.col(j)));
  gain_ = wh.adjoint();
}

ComplexVector DenseLmmse::apply(std::span<const cplx> mu1, std::span<const cplx> mu_int,
                                std::span<const cplx> y) const {
  const std::size_t M = static_cast<std::size_t>(gain_.rows());
  require_len(y, M, "y");
  require_len(mu1, M, "mu1");
  require_len(mu_int, M, "mu_int");
  const Eigen::VectorXcd h = gain_ * residual(y, mu1, mu_int);
  ComplexVector out(M);
  for (std::size_t m = 0; m < M; ++m) out[m] = mu1[m] + h(static_cast<Eigen::Index>(m));
  return out;
}

ComplexVector lmmse_core(std::span<const cplx> mu1, const DenseMatrix& c1, std::span<const cplx> mu_int,
                         const DenseMatrix& c_int, double sigma_sq, std::span<const cplx> y) {
  const auto M = c1.rows();
  if (c1.cols() != M || c_int.rows() != M || c_int.cols() != M)
    throw std::invalid_argument("lmmse_core: covariance shapes disagree");
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("lmmse_core: sigma_sq must be nonnegative");
  require_len(y, static_cast<std::size_t>(M), "y");
  require_len(mu1, static_cast<std::size_t>(M), "mu1");
  require_len(mu_int, static_cast<std::size_t>(M), "mu_int");
  DenseMatrix cy = c1 + c_int;
  cy.diagonal().array() += sigma_sq;
  cy = (0.5 * (cy + cy.adjoint())).eval();
  const Eigen::VectorXcd x = linalg::HermitianSolver(cy).solve(residual(y, mu1, mu_int));
  const Eigen::VectorXcd h = c1 * x;
  ComplexVector out(static_cast<std::size_t>(M));
  for (Eigen::Index m = 0; m < M; ++m) out[static_cast<std::size_t>(m)] = mu1[static_cast<std::size_t>(m)] + h(m);
  return out;
}

ComplexVector ls_estimate(std::span<const cplx> y) { return ComplexVector(y.begin(), y.end()); }

ComplexVector SampleStats::interference_mean() const {
  if (mu_hat.empty()) throw std::invalid_argument("sample statistics are empty");
  ComplexVector s(mu_hat[0].size(), cplx(0.0));
  for (std::size_t l = 1; l < mu_hat.size(); ++l)
    for (std::size_t m = 0; m < s.size(); ++m) s[m] += mu_hat[l][m];
  return s;
}

DenseMatrix SampleStats::interference_cov() const {
  if (c_hat.empty()) throw std::invalid_argument("sample statistics are empty");
  DenseMatrix s = DenseMatrix::Zero(c_hat[0].rows(), c_hat[0].cols());
  for (std::size_t l = 1; l < c_hat.size(); ++l) s += c_hat[l];
  return s;
}

SampleStats scov_fit(const std::vector<std::vector<ComplexVector>>& channels) {
  if (channels.empty() || channels[0].empty()) throw std::invalid_argument("scov_fit: empty training set");
  SampleStats st;
  st.count = channels[0].size();
  const std::size_t M = channels[0][0].size();
  for (const auto& cell : channels) {
    if (cell.size() != st.count) throw std::invalid_argument("scov_fit: cells have different record counts");
    Eigen::MatrixXcd h(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(st.count));
    for (std::size_t i = 0; i < st.count; ++i) {
      if (cell[i].size() != M) throw std::invalid_argument("scov_fit: channel length mismatch");
      for (std::size_t m = 0; m < M; ++m) h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = cell[i][m];
    }
    const double inv = 1.0 / static_cast<double>(st.count);
    const Eigen::VectorXcd mean = h.rowwise().sum() * inv;
    DenseMatrix c = (h * h.adjoint()) * inv;
    c = (0.5 * (c + c.adjoint())).eval();
    st.mu_hat.push_back(linalg::to_vector(mean));
    st.c_hat.push_back(std::move(c));
  }
  return st;
}

SampleStats scov_fit(const scenario::Dataset& train) {
  if (train.size() == 0) throw std::invalid_argument("scov_fit: empty training set");
  std::vector<std::vector<ComplexVector>> channels(2);
  channels[0].reserve(train.size());
  channels[1].reserve(train.size());
  for (const auto& r : train.records) {
    channels[0].push_back(scenario::to_double(r.h1));
    channels[1].push_back(scenario::to_double(r.h_int));
  }
  return scov_fit(channels);
}

ComplexVector scov_estimate(const SampleStats& stats, double sigma_sq, std::span<const cplx> y) {
  return lmmse_core(stats.mu_hat.at(0), stats.c_hat.at(0), stats.interference_mean(), stats.interference_cov(),
                    sigma_sq, y);
}

ScovEstimator::ScovEstimator(SampleStats stats)
    : stats_(std::move(stats)), mu_int_(stats_.interference_mean()), c_int_(stats_.interference_cov()) {}

const DenseLmmse& ScovEstimator::gain_for(double sigma_sq) const {
  std::lock_guard lock(guard_);
  auto it = cache_.find(sigma_sq);
  if (it == cache_.end()) it = cache_.emplace(sigma_sq, DenseLmmse(stats_.c_hat.at(0), c_int_, sigma_sq)).first;
  return it->second;
}

ComplexVector ScovEstimator::estimate(double sigma_sq, std::span<const cplx> y) const {
  return gain_for(sigma_sq).apply(stats_.mu_hat.at(0), mu_int_, y);
}

ComplexVector genie_cov_estimate(const scenario::DatasetRecord& record, double sigma_sq, std::span<const cplx> y) {
  DenseMatrix c1, c_int;
  true_ccms(record, c1, c_int);
  const ComplexVector zero(y.size(), cplx(0.0));
  return lmmse_core(zero, c1, zero, c_int, sigma_sq, y);
}

double genie_cov_mse(const scenario::DatasetRecord& record, double sigma_sq) {
  DenseMatrix c1, c_int;
  true_ccms(record, c1, c_int);
  const DenseLmmse w(c1, c_int, sigma_sq);
  // Error covariance C1 - W C1.
  const DenseMatrix err = c1 - w.gain() * c1;
  return err.trace().real() / static_cast<double>(c1.rows());
}

ComplexVector vae_plugin(EstimatorKind kind, const vae::CondGaussianParams& moments, double sigma_sq,
                         std::span<const cplx> y, const SampleStats* interference) {
  const std::size_t M = y.size();
  const ComplexVector zero(M, cplx(0.0));
  switch (kind) {
    case EstimatorKind::vae:
    case EstimatorKind::vae_genie:
      if (moments.mu_int.empty()) throw std::invalid_argument(to_string(kind) + " needs interference moments");
      return lmmse_core(moments.mu1, moments.c1, moments.mu_int, moments.c_int, sigma_sq, y);
    case EstimatorKind::vae_ignore: {
      const CirculantSpectrum none{std::vector<double>(M, 0.0)};
      return lmmse_core(moments.mu1, moments.c1, zero, none, sigma_sq, y);
    }
    case EstimatorKind::vae_awgn: {
      if (!interference) throw std::invalid_argument("vae-awgn needs interference sample statistics");
      const double alpha_sq = interference->interference_cov().trace().real() / static_cast<double>(M);
      const CirculantSpectrum awgn{std::vector<double>(M, alpha_sq)};
      return lmmse_core(moments.mu1, moments.c1, zero, awgn, sigma_sq, y);
    }
    case EstimatorKind::vae_scov: {
      if (!interference) throw std::invalid_argument("vae-scov needs interference sample statistics");
      return lmmse_core(moments.mu1, linalg::circulant_dense(moments.c1), interference->interference_mean(),
                        interference->interference_cov(), sigma_sq, y);
    }
    default: throw std::invalid_argument(to_string(kind) + " is not a VAE estimator");
  }
}

ComplexVector vae_estimate(const vae::VaeModel& model, EstimatorKind kind, std::span<const cplx> y, double sigma_sq,
                           const SampleStats* interference, std::span<const cplx> encoder_input) {
  require_model_for(kind, model.config());
  if (kind == EstimatorKind::vae_genie && encoder_input.empty())
    throw std::invalid_argument("vae-genie needs the noiseless h1 + h_int as encoder input");
  const auto moments = model.moments(encoder_input.empty() ? y : encoder_input);
  return vae_plugin(kind, moments, sigma_sq, y, interference);
}

}  // namespace mcce::est
