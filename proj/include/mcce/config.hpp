#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcce/estimators.hpp"
#include "mcce/scenario.hpp"
#include "mcce/vae/network.hpp"
#include "mcce/vae/train.hpp"

// Declarative run configuration (JSON, versioned). Every key is optional;
// missing keys take the defaults below and unknown keys are rejected.
//
//   {
//     "version": 1,
//     "seed": 1,
//     "threads": 0,                       // 0: MCCE_THREADS, else 1
//     "paths": { "run_dir": "run" },      // relative to the config file
//     "system": {
//       "antennas": 128, "cells": 2, "users": 1, "pilot_length": 1,
//       "snr_range_db": [-16, 36],
//       "counts": { "train": 100000, "val": 10000, "test": 10000 },
//       "priors": [ { "kind": "gaussian", "center_deg": 45, "std_deg": 30 }, ... ],
//       "clusters": { "count": 3, "spread_deg": 2 }
//     },
//     "model":        { "latent_dim", "encoder_channels", "decoder_channels", "kernel", "seed" },
//     "single_model": { same keys, for the one-block ablation model },
//     "training": { "learning_rate": 1e-4, "batch_size": 128, "patience": 100, "max_epochs": 1000,
//                   "noise_redraw": false, "phase_rotation": false },
//     "estimators": [ "ls", "scov", ... ],
//     "sweeps": { "snr_grid_db": [-10, ..., 30], "aoa_snr_db": 10 }
//   }

namespace mcce::config {

inline constexpr int kConfigVersion = 1;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelSection {
  std::size_t latent_dim = 32;
  std::vector<std::size_t> encoder_channels{8, 16, 32};
  std::vector<std::size_t> decoder_channels{64, 32, 16};
  std::size_t kernel = 7;
  std::uint64_t seed = 1;

  bool operator==(const ModelSection&) const = default;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string run_dir = "run";
  scenario::SystemConfig system;
  ModelSection model;
  ModelSection single_model;
  double learning_rate = 1e-4;
  std::size_t batch_size = 128;
  std::size_t patience = 100;
  std::size_t max_epochs = 1000;
  bool noise_redraw = false;
  bool phase_rotation = false;
  std::vector<est::EstimatorKind> estimators;
  std::vector<double> snr_grid_db;
  double aoa_snr_db = 10.0;

  RunConfig();
  bool operator==(const RunConfig&) const = default;

  void validate() const;

  // Two-block model (noisy or genie) and the single-cell ablation model.
  vae::ModelConfig multi_cell_model(bool genie) const;
  vae::ModelConfig single_cell_model() const;
  vae::TrainSchedule schedule(std::uint64_t seed) const;
  std::size_t resolved_threads() const;
};

RunConfig parse_run_config(const std::string& json_text);
std::string serialize_run_config(const RunConfig& config);

// Reads a config file; a relative run_dir is resolved against the file's
// directory and its parent must exist.
RunConfig load_run_config(const std::string& path);

// FNV-1a of the serialization with run_dir and threads reset to their
// defaults; neither changes any artifact.
std::uint64_t config_hash(const RunConfig& config);

// Independent seed for a named purpose ("split:train", "train:vae", ...).
std::uint64_t derive_seed(std::uint64_t seed, const std::string& purpose);

std::string hex64(std::uint64_t v);

}  // namespace mcce::config
