#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcce/scenario.hpp"

// Little-endian dataset file, version 1:
//
//   header   "MCCE" | u16 version | u16 flags | u32 M | u32 L | u64 count
//            L x prior { u32 kind (0 uniform, 1 gaussian) | f64 center_deg | f64 std_deg }
//   record   f32 (re, im) h1[M], h_int[M]
//            flags & 2: L x M CCM first-row entries, cell-major
//            flags & 1: y[M], y1[M], y2[M], then f64 sigma_sq, sigma1_sq, sigma2_sq
//   trailer  u32 CRC-32 (zlib polynomial) of all record bytes
//
// flags bit 0: observations present; bit 1: CCM rows present.

namespace mcce::io {

inline constexpr char kDatasetMagic[4] = {'M', 'C', 'C', 'E'};
inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::uint16_t kFlagObservations = 1;
inline constexpr std::uint16_t kFlagCcms = 2;

std::vector<std::uint8_t> encode_dataset(const scenario::Dataset& dataset);
scenario::Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);

void save_dataset(const scenario::Dataset& dataset, const std::string& path);
scenario::Dataset load_dataset(const std::string& path);

std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace mcce::io
