#include "mcce/vae/train.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "mcce/errors.hpp"
#include "mcce/parallel.hpp"
#include "mcce/rng.hpp"

namespace mcce::vae {
namespace {

constexpr std::uint64_t kShuffleStream = 11;
constexpr std::uint64_t kEpsStream = 12;
constexpr std::uint64_t kValidationStream = 13;
constexpr std::uint64_t kRedrawStream = 14;
constexpr std::size_t kSubBatch = 32;
constexpr std::size_t kEvalChunk = 256;

// Sums parts[0..n) pairwise in a fixed tree into parts[0].
void tree_reduce(std::vector<std::vector<double>>& parts, std::size_t n) {
  for (std::size_t stride = 1; stride < n; stride *= 2) {
    for (std::size_t i = 0; i + stride < n; i += 2 * stride) {
      auto& a = parts[i];
      const auto& b = parts[i + stride];
      for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    }
  }
}

std::vector<double> draw_eps(Rng& rng, std::size_t count) {
  std::vector<double> eps(count);
  for (auto& e : eps) e = standard_normal(rng);
  return eps;
}

// eps is sample-major (Lz per sample); the workspace wants latent-major.
void load_eps(const double* eps, std::size_t Lz, std::size_t batch, Workspace& ws) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < Lz; ++j) ws.eps[j * batch + b] = eps[b * Lz + j];
}

void rotate(const std::vector<cfloat>& src, cplx phase, std::vector<cfloat>& dst) {
  for (std::size_t m = 0; m < src.size(); ++m) dst[m] = cfloat(cplx(src[m]) * phase);
}

}  // namespace

void TrainSchedule::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("training: learning_rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("training: batch_size must be positive");
  if (patience == 0) throw std::invalid_argument("training: patience must be positive");
  if (max_epochs == 0) throw std::invalid_argument("training: max_epochs must be positive");
  if (redraw_noise && !(redraw_snr_db[0] <= redraw_snr_db[1]))
    throw std::invalid_argument("training: redraw SNR range must satisfy low <= high");
}

double mean_elbo(const Network& net, const ModelParams& params, const SampleBank& bank, std::uint64_t seed,
                 std::size_t threads) {
  if (bank.count == 0) throw std::invalid_argument("mean_elbo: empty sample set");
  const std::size_t Lz = net.latent_dim();
  Rng rng = make_stream(seed, kValidationStream);
  const std::vector<double> eps = draw_eps(rng, bank.count * Lz);
  const std::size_t chunks = (bank.count + kEvalChunk - 1) / kEvalChunk;
  std::vector<double> sums(chunks, 0.0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kEvalChunk;
    const std::size_t B = std::min(kEvalChunk, bank.count - begin);
    Workspace ws = net.make_workspace(B);
    std::vector<std::size_t> idx(B);
    std::iota(idx.begin(), idx.end(), begin);
    bank.gather(idx, ws);
    load_eps(eps.data() + begin * Lz, Lz, B, ws);
    sums[c] = net.evaluate(params.values, ws, B, nullptr);
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(bank.count);
}

TrainResult train(const ModelConfig& config, const SampleBank& train_set, const SampleBank& val_set,
                  const TrainSchedule& schedule, const TrainHooks& hooks, const TrainState* resume) {
  schedule.validate();
  if (train_set.count == 0) throw std::invalid_argument("train: empty training set");
  if (val_set.count == 0) throw std::invalid_argument("train: empty validation set");
  const Network net(config);
  if (train_set.input_dim != net.input_dim() || train_set.target_dim != net.target_dim() ||
      val_set.input_dim != net.input_dim() || val_set.target_dim != net.target_dim())
    throw std::invalid_argument("train: sample shape does not match the model");

  TrainResult result;
  TrainState& st = result.state;
  if (resume) {
    st = *resume;
    if (st.params.values.size() != net.parameter_count() || st.adam.m.size() != net.parameter_count())
      throw FormatError(FormatError::Kind::shape_mismatch, "resume state does not match the model");
  } else {
    st.params = net.initialize(config.seed);
    st.best_params = st.params;
    st.adam = AdamState::zeros(net.parameter_count());
  }
  const AdamConfig adam{schedule.learning_rate};
  const std::size_t Lz = net.latent_dim();
  const std::size_t P = net.parameter_count();
  const std::size_t max_sub = (schedule.batch_size + kSubBatch - 1) / kSubBatch;

  std::vector<Workspace> workspaces;
  for (std::size_t s = 0; s < max_sub; ++s) workspaces.push_back(net.make_workspace(kSubBatch));
  std::vector<std::vector<double>> grads(max_sub, std::vector<double>(P, 0.0));
  std::vector<double> sub_elbo(max_sub, 0.0);
  std::vector<std::size_t> order(train_set.count);

  while (st.epoch < schedule.max_epochs && st.stale < schedule.patience) {
    const std::size_t epoch = st.epoch + 1;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_stream(schedule.seed, kShuffleStream, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    Rng eps_rng = make_stream(schedule.seed, kEpsStream, epoch);
    const std::vector<double> eps = draw_eps(eps_rng, train_set.count * Lz);

    double train_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < train_set.count; begin += schedule.batch_size, ++batch_index) {
      const std::size_t B = std::min(schedule.batch_size, train_set.count - begin);
      const std::size_t subs = (B + kSubBatch - 1) / kSubBatch;
      try {
        parallel_for(subs, schedule.threads, [&](std::size_t s) {
          const std::size_t sb = begin + s * kSubBatch;
          const std::size_t n = std::min(kSubBatch, begin + B - sb);
          Workspace& ws = workspaces[s];
          train_set.gather(std::span<const std::size_t>(order.data() + sb, n), ws);
          load_eps(eps.data() + sb * Lz, Lz, n, ws);
          std::fill(grads[s].begin(), grads[s].end(), 0.0);
          sub_elbo[s] = net.evaluate(st.params.values, ws, n, &grads[s]);
        });
      } catch (const NonFiniteError& e) {
        throw NonFiniteError("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index) + ": " +
                             e.what());
      }
      tree_reduce(grads, subs);
      for (std::size_t s = 0; s < subs; ++s) train_sum += sub_elbo[s];
      std::vector<double>& g = grads[0];
      const double scale = -1.0 / static_cast<double>(B);
      for (double& x : g) x *= scale;
      adam_step(st.params.values, g, st.adam, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_elbo = train_sum / static_cast<double>(train_set.count);
    double val;
    try {
      val = mean_elbo(net, st.params, val_set, schedule.seed, schedule.threads);
    } catch (const NonFiniteError&) {
      val = -std::numeric_limits<double>::infinity();
    }
    if (hooks.validation_override) val = hooks.validation_override(epoch, val);
    rec.val_elbo = val;
    if (val > st.best_val) {
      st.best_val = val;
      st.best_params = st.params;
      st.stale = 0;
      rec.improved = true;
    } else {
      ++st.stale;
    }
    st.epoch = epoch;
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  result.early_stopped = st.stale >= schedule.patience;
  return result;
}

void augment_epoch(const scenario::Dataset& source, const TrainSchedule& schedule, std::size_t epoch,
                   scenario::Dataset& out) {
  if (out.records.size() != source.records.size()) out = source;
  Rng rng = make_stream(schedule.seed, kRedrawStream, epoch);
  std::uniform_real_distribution<double> snr(schedule.redraw_snr_db[0], schedule.redraw_snr_db[1]);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    const auto& src = source.records[i];
    if (schedule.rotate_phases) {
      const cplx a = std::polar(1.0, angle(rng));
      const cplx b = std::polar(1.0, angle(rng));
      rotate(src.h1, a, r.h1);
      rotate(src.h_int, b, r.h_int);
      if (!schedule.redraw_noise && src.has_observation()) {
        rotate(src.y1, a, r.y1);
        rotate(src.y2, b, r.y2);
        for (std::size_t m = 0; m < r.y.size(); ++m) r.y[m] = r.y1[m] + r.y2[m];
      }
    }
    if (schedule.redraw_noise) scenario::attach_observation(r, snr(rng), rng);
  }
}

scenario::Dataset augment_epoch(const scenario::Dataset& source, const TrainSchedule& schedule, std::size_t epoch) {
  scenario::Dataset out;
  augment_epoch(source, schedule, epoch, out);
  return out;
}

TrainResult train(const ModelConfig& config, const scenario::Dataset& train_set, const scenario::Dataset& val_set,
                  const TrainSchedule& schedule, const TrainHooks& hooks, const TrainState* resume) {
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (val_set.size() == 0) throw std::invalid_argument("train: empty validation set");
  const SampleBank val_bank = make_sample_bank(val_set, config);
  if (!schedule.redraw_noise && !schedule.rotate_phases)
    return train(config, make_sample_bank(train_set, config), val_bank, schedule, hooks, resume);

  schedule.validate();
  scenario::Dataset work;
  TrainResult out;
  std::optional<TrainState> state;
  if (resume) state = *resume;
  TrainSchedule one = schedule;
  one.redraw_noise = false;
  one.rotate_phases = false;
  for (;;) {
    const std::size_t done = state ? state->epoch : 0;
    if (done >= schedule.max_epochs || (state && state->stale >= schedule.patience)) break;
    augment_epoch(train_set, schedule, done + 1, work);
    one.max_epochs = done + 1;
    TrainResult step = train(config, make_sample_bank(work, config), val_bank, one, hooks, state ? &*state : nullptr);
    out.history.insert(out.history.end(), step.history.begin(), step.history.end());
    state = std::move(step.state);
  }
  out.state = std::move(*state);
  out.early_stopped = out.state.stale >= schedule.patience;
  return out;
}

}  // namespace mcce::vae
