#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcce/vae/network.hpp"
#include "mcce/vae/train.hpp"

// Little-endian checkpoint, version 1:
//
//   "MCVA" | u16 version | u16 flags (bit 0: training state present)
//   config   u32 M | u32 latent | u32 blocks | u32 kernel | u8 genie | u64 seed
//            u32 n | n x u32 encoder widths | u32 n | n x u32 decoder widths
//   params   u64 P | P x f64 (best parameters)
//   state    u64 epoch | f64 best_val | u64 stale | u64 adam step
//            P x f64 current params | P x f64 m | P x f64 v
//   trailer  u32 CRC-32 of everything after the version field

namespace mcce::vae {

inline constexpr char kCheckpointMagic[4] = {'M', 'C', 'V', 'A'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  std::optional<TrainState> state;

  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Loads and requires the stored architecture to equal `expected`
// (FormatError::Kind::shape_mismatch otherwise, naming both block counts).
Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected);

void require_compatible(const ModelConfig& expected, const ModelConfig& stored);

}  // namespace mcce::vae
