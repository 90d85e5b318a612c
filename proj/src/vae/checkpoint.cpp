#include "mcce/vae/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "mcce/binary.hpp"
#include "mcce/dataset_io.hpp"
#include "mcce/errors.hpp"

namespace mcce::vae {
namespace {

constexpr std::uint16_t kFlagState = 1;
constexpr std::size_t kHeaderBytes = 6;

void put_doubles(io::ByteWriter& w, const std::vector<double>& v) {
  for (double x : v) w.put<double>(x);
}

std::vector<double> get_doubles(io::ByteReader& r, std::size_t n, const char* what) {
  r.require(n * sizeof(double), what);
  std::vector<double> v(n);
  for (auto& x : v) x = r.get<double>(what);
  return v;
}

void put_widths(io::ByteWriter& w, const std::vector<std::size_t>& v) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
  for (auto x : v) w.put<std::uint32_t>(static_cast<std::uint32_t>(x));
}

std::vector<std::size_t> get_widths(io::ByteReader& r) {
  const std::uint32_t n = r.get<std::uint32_t>("layer count");
  if (n > 64) throw FormatError(FormatError::Kind::shape_mismatch, "implausible layer count in checkpoint");
  std::vector<std::size_t> v(n);
  for (auto& x : v) x = r.get<std::uint32_t>("layer width");
  return v;
}

std::string describe(const ModelConfig& c) {
  return "num_blocks=" + std::to_string(c.num_blocks) + ", M=" + std::to_string(c.antennas) +
         ", latent_dim=" + std::to_string(c.latent_dim);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  const Network net(ck.config);
  const std::size_t P = net.parameter_count();
  if (ck.params.values.size() != P) throw std::invalid_argument("checkpoint parameters do not match the config");
  io::ByteWriter w;
  w.put_raw(kCheckpointMagic, 4);
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint16_t>(ck.state ? kFlagState : 0);
  const auto& c = ck.config;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.antennas));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.latent_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.num_blocks));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.kernel));
  w.put<std::uint8_t>(c.genie ? 1 : 0);
  w.put<std::uint64_t>(c.seed);
  put_widths(w, c.encoder_channels);
  put_widths(w, c.decoder_channels);
  w.put<std::uint64_t>(P);
  put_doubles(w, ck.params.values);
  if (ck.state) {
    const TrainState& s = *ck.state;
    if (s.params.values.size() != P || s.adam.m.size() != P || s.adam.v.size() != P)
      throw std::invalid_argument("checkpoint training state does not match the config");
    w.put<std::uint64_t>(s.epoch);
    w.put<double>(s.best_val);
    w.put<std::uint64_t>(s.stale);
    w.put<std::uint64_t>(s.adam.step);
    put_doubles(w, s.params.values);
    put_doubles(w, s.adam.m);
    put_doubles(w, s.adam.v);
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = io::crc32(bytes.data() + kHeaderBytes, bytes.size() - kHeaderBytes);
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw FormatError(FormatError::Kind::bad_magic, "not a checkpoint file (bad magic)");
  io::ByteReader r(bytes.data(), bytes.size());
  std::uint8_t magic[4];
  r.get_raw(magic, 4, "magic");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError(FormatError::Kind::version_mismatch,
                      "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  if (bytes.size() < kHeaderBytes + 4) throw FormatError(FormatError::Kind::truncated, "truncated checkpoint");
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  stored_crc = io::to_little(stored_crc);
  const std::uint32_t crc = io::crc32(bytes.data() + kHeaderBytes, bytes.size() - kHeaderBytes - 4);

  Checkpoint ck;
  try {
    io::ByteReader body(bytes.data(), bytes.size() - 4);
    std::uint8_t skip[kHeaderBytes];
    body.get_raw(skip, kHeaderBytes, "header");
    const auto flags = body.get<std::uint16_t>("flags");
    auto& c = ck.config;
    c.antennas = body.get<std::uint32_t>("antennas");
    c.latent_dim = body.get<std::uint32_t>("latent_dim");
    c.num_blocks = body.get<std::uint32_t>("num_blocks");
    c.kernel = body.get<std::uint32_t>("kernel");
    c.genie = body.get<std::uint8_t>("genie") != 0;
    c.seed = body.get<std::uint64_t>("seed");
    c.encoder_channels = get_widths(body);
    c.decoder_channels = get_widths(body);
    const auto P = body.get<std::uint64_t>("parameter count");
    ck.params.values = get_doubles(body, P, "parameters");
    if (flags & kFlagState) {
      TrainState s;
      s.epoch = body.get<std::uint64_t>("epoch");
      s.best_val = body.get<double>("best validation ELBO");
      s.stale = body.get<std::uint64_t>("stale counter");
      s.adam.step = body.get<std::uint64_t>("adam step");
      s.params.values = get_doubles(body, P, "current parameters");
      s.adam.m = get_doubles(body, P, "adam first moments");
      s.adam.v = get_doubles(body, P, "adam second moments");
      s.best_params = ck.params;
      ck.state = std::move(s);
    }
    if (body.remaining() != 0) throw FormatError(FormatError::Kind::checksum, "checkpoint has trailing bytes");
  } catch (const FormatError&) {
    if (crc != stored_crc) throw FormatError(FormatError::Kind::checksum, "checkpoint checksum mismatch");
    throw;
  }
  if (crc != stored_crc) throw FormatError(FormatError::Kind::checksum, "checkpoint checksum mismatch");
  try {
    const Network net(ck.config);
    if (net.parameter_count() != ck.params.values.size())
      throw FormatError(FormatError::Kind::shape_mismatch, "checkpoint parameter count does not match its config");
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatError::Kind::shape_mismatch, std::string("checkpoint config is invalid: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  io::write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

void require_compatible(const ModelConfig& expected, const ModelConfig& stored) {
  const bool same = expected.antennas == stored.antennas && expected.latent_dim == stored.latent_dim &&
                    expected.num_blocks == stored.num_blocks && expected.kernel == stored.kernel &&
                    expected.encoder_channels == stored.encoder_channels &&
                    expected.decoder_channels == stored.decoder_channels;
  if (!same)
    throw FormatError(FormatError::Kind::shape_mismatch, "checkpoint shape mismatch: expected " +
                                                             describe(expected) + ", checkpoint has " +
                                                             describe(stored));
}

Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  require_compatible(expected, ck.config);
  return ck;
}

}  // namespace mcce::vae
