#include "mcce/dataset_io.hpp"

#include <fstream>
#include <iterator>
#include <zlib.h>

#include "mcce/binary.hpp"
#include "mcce/errors.hpp"

namespace mcce::io {
namespace {

using scenario::Dataset;
using scenario::DatasetRecord;

void put_vector(ByteWriter& w, const std::vector<cfloat>& v) {
  for (const auto& x : v) {
    w.put<float>(x.real());
    w.put<float>(x.imag());
  }
}

void get_vector(ByteReader& r, std::vector<cfloat>& v, std::size_t n, const char* what) {
  v.resize(n);
  for (auto& x : v) {
    const float re = r.get<float>(what);
    const float im = r.get<float>(what);
    x = cfloat{re, im};
  }
}

std::size_t record_bytes(std::size_t m, std::size_t l, std::uint16_t flags) {
  std::size_t n = 2 * m * 8;
  if (flags & kFlagCcms) n += l * m * 8;
  if (flags & kFlagObservations) n += 3 * m * 8 + 3 * 8;
  return n;
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  const auto& h = ds.header;
  if (h.priors.size() != h.cells) throw std::invalid_argument("encode_dataset: one prior per cell required");
  std::uint16_t flags = 0;
  if (h.has_observations) flags |= kFlagObservations;
  if (h.has_ccms) flags |= kFlagCcms;

  ByteWriter w;
  w.put_raw(kDatasetMagic, 4);
  w.put<std::uint16_t>(kDatasetVersion);
  w.put<std::uint16_t>(flags);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(h.antennas));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(h.cells));
  w.put<std::uint64_t>(ds.records.size());
  for (const auto& p : h.priors) {
    w.put<std::uint32_t>(p.kind == channel::AngularPrior::Kind::uniform ? 0u : 1u);
    w.put<double>(p.center_deg);
    w.put<double>(p.std_deg);
  }
  const std::size_t payload_start = w.size();
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const DatasetRecord& r = ds.records[i];
    auto check = [&](std::size_t n, std::size_t expect, const char* what) {
      if (n != expect)
        throw std::invalid_argument("encode_dataset: record " + std::to_string(i) + " field " + what +
                                    " has length " + std::to_string(n));
    };
    check(r.h1.size(), h.antennas, "h1");
    check(r.h_int.size(), h.antennas, "h_int");
    put_vector(w, r.h1);
    put_vector(w, r.h_int);
    if (h.has_ccms) {
      check(r.ccm_rows.size(), h.cells, "ccm_rows");
      for (const auto& row : r.ccm_rows) {
        check(row.size(), h.antennas, "ccm_row");
        put_vector(w, row);
      }
    }
    if (h.has_observations) {
      check(r.y.size(), h.antennas, "y");
      check(r.y1.size(), h.antennas, "y1");
      check(r.y2.size(), h.antennas, "y2");
      put_vector(w, r.y);
      put_vector(w, r.y1);
      put_vector(w, r.y2);
      w.put<double>(r.sigma_sq);
      w.put<double>(r.sigma1_sq);
      w.put<double>(r.sigma2_sq);
    }
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc32(bytes.data() + payload_start, bytes.size() - payload_start);
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  char magic[4];
  r.get_raw(magic, 4, "magic");
  if (std::memcmp(magic, kDatasetMagic, 4) != 0)
    throw FormatError(FormatError::Kind::bad_magic, "not a dataset file: bad magic");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kDatasetVersion)
    throw FormatError(FormatError::Kind::version_mismatch,
                      "dataset version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kDatasetVersion) + ")");
  const auto flags = r.get<std::uint16_t>("flags");
  Dataset ds;
  ds.header.antennas = r.get<std::uint32_t>("antenna count");
  ds.header.cells = r.get<std::uint32_t>("cell count");
  const auto count = r.get<std::uint64_t>("record count");
  ds.header.has_observations = (flags & kFlagObservations) != 0;
  ds.header.has_ccms = (flags & kFlagCcms) != 0;
  for (std::size_t l = 0; l < ds.header.cells; ++l) {
    channel::AngularPrior p;
    const auto kind = r.get<std::uint32_t>("prior descriptor");
    p.kind = kind == 0 ? channel::AngularPrior::Kind::uniform : channel::AngularPrior::Kind::gaussian;
    p.center_deg = r.get<double>("prior descriptor");
    p.std_deg = r.get<double>("prior descriptor");
    ds.header.priors.push_back(p);
  }

  const std::size_t m = ds.header.antennas;
  const std::size_t per_record = record_bytes(m, ds.header.cells, flags);
  const std::size_t payload_start = r.position();
  const std::size_t available = r.remaining();
  if (per_record == 0 || count > available / per_record || available - count * per_record < 4) {
    const std::size_t complete = per_record == 0 ? 0 : available / per_record;
    throw FormatError(FormatError::Kind::truncated,
                      "truncated payload: record " + std::to_string(std::min<std::uint64_t>(complete, count)) +
                          " of " + std::to_string(count) + " is incomplete");
  }
  const std::uint32_t computed = crc32(bytes.data() + payload_start, count * per_record);

  ds.records.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    DatasetRecord& rec = ds.records[i];
    get_vector(r, rec.h1, m, "h1");
    get_vector(r, rec.h_int, m, "h_int");
    if (ds.header.has_ccms) {
      rec.ccm_rows.resize(ds.header.cells);
      for (auto& row : rec.ccm_rows) get_vector(r, row, m, "ccm row");
    }
    if (ds.header.has_observations) {
      get_vector(r, rec.y, m, "y");
      get_vector(r, rec.y1, m, "y1");
      get_vector(r, rec.y2, m, "y2");
      rec.sigma_sq = r.get<double>("sigma_sq");
      rec.sigma1_sq = r.get<double>("sigma1_sq");
      rec.sigma2_sq = r.get<double>("sigma2_sq");
    }
  }
  const auto stored = r.get<std::uint32_t>("checksum");
  if (stored != computed) throw FormatError(FormatError::Kind::checksum, "dataset checksum mismatch");
  if (r.remaining() != 0)
    throw FormatError(FormatError::Kind::shape_mismatch, "trailing bytes after dataset checksum");
  return ds;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::io, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::io, "write to '" + path + "' failed");
}

void save_dataset(const Dataset& dataset, const std::string& path) { write_file(path, encode_dataset(dataset)); }

Dataset load_dataset(const std::string& path) { return decode_dataset(read_file(path)); }

}  // namespace mcce::io
