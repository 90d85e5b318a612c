#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "mcce/scenario.hpp"
#include "mcce/vae/adam.hpp"
#include "mcce/vae/model.hpp"
#include "mcce/vae/network.hpp"

namespace mcce::vae {

struct TrainSchedule {
  double learning_rate = 1e-4;
  std::size_t batch_size = 128;
  std::size_t patience = 100;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  // Dataset overload only: before every epoch each training record gets a
  // fresh SNR, uniform over redraw_snr_db, and fresh noise realisations,
  // drawn from (seed, epoch). The validation set is left as stored.
  bool redraw_noise = false;
  double redraw_snr_db[2] = {-16.0, 36.0};
  // Dataset overload only: before every epoch each record's h1 and h_int
  // (and their observations) are multiplied by independent uniform unit
  // phases. The channel law is circularly symmetric, so this leaves the
  // training distribution unchanged.
  bool rotate_phases = false;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_elbo = 0.0;
  double val_elbo = 0.0;
  bool improved = false;
};

// Everything needed to continue an interrupted run.
struct TrainState {
  ModelParams params;       // current iterate
  ModelParams best_params;  // parameters at the best validation ELBO
  AdamState adam;
  std::size_t epoch = 0;    // completed epochs
  double best_val = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;    // epochs since the last improvement

  bool operator==(const TrainState&) const = default;
};

struct TrainHooks {
  // Replaces the measured validation ELBO of an epoch.
  std::function<double(std::size_t epoch, double measured)> validation_override;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> history;
  bool early_stopped = false;
};

// Gradient summation runs over fixed sub-batches with a fixed pairwise
// reduction, so results do not depend on the thread count.
TrainResult train(const ModelConfig& config, const SampleBank& train_set, const SampleBank& val_set,
                  const TrainSchedule& schedule, const TrainHooks& hooks = {}, const TrainState* resume = nullptr);

TrainResult train(const ModelConfig& config, const scenario::Dataset& train_set, const scenario::Dataset& val_set,
                  const TrainSchedule& schedule, const TrainHooks& hooks = {}, const TrainState* resume = nullptr);

// Training records as seen in `epoch` (1-based) under the schedule's
// redraw and rotation options.
scenario::Dataset augment_epoch(const scenario::Dataset& source, const TrainSchedule& schedule, std::size_t epoch);
void augment_epoch(const scenario::Dataset& source, const TrainSchedule& schedule, std::size_t epoch,
                   scenario::Dataset& out);

// Mean one-sample ELBO over the bank with eps drawn once from `seed`.
double mean_elbo(const Network& net, const ModelParams& params, const SampleBank& bank, std::uint64_t seed,
                 std::size_t threads = 1);

}  // namespace mcce::vae
