#include <cstring>

#include "doctest.h"
#include "mcce/dataset_io.hpp"
#include "mcce/errors.hpp"
#include "test_util.hpp"

using namespace mcce;
using namespace mcce::scenario;

namespace {

// Records with arbitrary (not physically consistent) contents.
Dataset random_dataset(std::size_t count, std::size_t M, std::size_t L, bool observations, bool ccms,
                       std::uint64_t seed) {
  Dataset ds;
  ds.header = {M, L, {}, observations, ccms};
  ds.header.priors.assign(L, channel::AngularPrior::uniform());
  ds.header.priors[0] = channel::AngularPrior::gaussian(12.5, 30.0);
  Rng rng(seed);
  auto fvec = [&](std::size_t n) {
    std::vector<cfloat> v(n);
    for (auto& x : v) x = cfloat(float(standard_normal(rng)), float(standard_normal(rng)));
    return v;
  };
  for (std::size_t i = 0; i < count; ++i) {
    DatasetRecord r;
    r.h1 = fvec(M);
    r.h_int = fvec(M);
    if (ccms)
      for (std::size_t l = 0; l < L; ++l) r.ccm_rows.push_back(fvec(M));
    if (observations) {
      r.y1 = fvec(M);
      r.y2 = fvec(M);
      r.y.resize(M);
      for (std::size_t m = 0; m < M; ++m) r.y[m] = r.y1[m] + r.y2[m];
      r.sigma_sq = uniform01(rng);
      r.sigma1_sq = r.sigma_sq / 2;
      r.sigma2_sq = r.sigma_sq - r.sigma1_sq;
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

FormatError::Kind decode_error(const std::vector<std::uint8_t>& bytes, std::string* message = nullptr) {
  try {
    io::decode_dataset(bytes);
  } catch (const FormatError& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("decode succeeded");
  return FormatError::Kind::io;
}

}  // namespace

TEST_CASE("dataset roundtrip") {
  for (bool obs : {false, true})
    for (bool ccm : {false, true}) {
      const auto ds = random_dataset(1000, 8, 3, obs, ccm, 1 + obs + 2 * ccm);
      const auto bytes = io::encode_dataset(ds);
      CHECK(io::decode_dataset(bytes) == ds);
      CHECK(io::encode_dataset(io::decode_dataset(bytes)) == bytes);
    }

  testutil::TempDir dir("io");
  const auto ds = random_dataset(20, 4, 2, true, true, 9);
  io::save_dataset(ds, dir.file("a.mcce"));
  CHECK(io::load_dataset(dir.file("a.mcce")) == ds);
  CHECK_THROWS_AS(io::load_dataset(dir.file("missing.mcce")), FormatError);
}

TEST_CASE("dataset header layout") {
  const auto ds = random_dataset(2, 4, 2, true, false, 3);
  const auto bytes = io::encode_dataset(ds);
  CHECK(std::memcmp(bytes.data(), "MCCE", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == io::kFlagObservations);
  CHECK(bytes[8] == 4);   // M
  CHECK(bytes[12] == 2);  // L
  CHECK(bytes[16] == 2);  // count
  const std::size_t header = 24 + 2 * (4 + 8 + 8);
  const std::size_t record = 5 * 4 * 8 + 3 * 8;
  CHECK(bytes.size() == header + 2 * record + 4);
  // Trailer is the CRC of the record bytes.
  const std::uint32_t crc = io::crc32(bytes.data() + header, 2 * record);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  CHECK(stored == crc);
  // Known CRC-32 check value.
  const char* check = "123456789";
  CHECK(io::crc32(reinterpret_cast<const std::uint8_t*>(check), 9) == 0xCBF43926u);
}

TEST_CASE("dataset decoding errors") {
  const auto ds = random_dataset(10, 4, 2, true, true, 5);
  const auto bytes = io::encode_dataset(ds);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(decode_error(bad_magic) == FormatError::Kind::bad_magic);

  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK(decode_error(bad_version) == FormatError::Kind::version_mismatch);

  const std::size_t header = 24 + 2 * 20;
  const std::size_t record = (bytes.size() - header - 4) / 10;
  std::string message;
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + header + 3 * record + record / 2);
  CHECK(decode_error(cut, &message) == FormatError::Kind::truncated);
  CHECK(message.find("record 3") != std::string::npos);

  auto flipped = bytes;
  flipped[header + 17] ^= 0x10;
  CHECK(decode_error(flipped) == FormatError::Kind::checksum);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(io::decode_dataset(trailing), FormatError);

  const std::vector<std::uint8_t> tiny(bytes.begin(), bytes.begin() + 10);
  CHECK(decode_error(tiny) == FormatError::Kind::truncated);
}
