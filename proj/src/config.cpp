#include "mcce/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mcce/bench.hpp"
#include "mcce/parallel.hpp"

namespace mcce::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError("config: " + path + ": " + message);
}

// Object view that remembers which keys were read, so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) fail(path_, "expected an object");
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = value_.find(key);
    return it == value_.end() ? nullptr : &*it;
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : value_.items())
      if (!seen_.count(key)) fail(child(key), "unknown key");
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (const json* v = get(key)) out = convert<T>(*v, child(key));
  }

  template <class T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(path, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) fail(path, "expected a finite number");
      return d;
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && v.get<std::int64_t>() < 0)
        fail(path, "expected a nonnegative integer");
      return v.get<T>();
    } else {
      if (!v.is_array()) fail(path, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& value_;
  std::string path_;
  std::set<std::string> seen_;
};

channel::AngularPrior read_prior(const json& v, const std::string& path) {
  Section s(v, path);
  std::string kind = "uniform";
  s.read("kind", kind);
  channel::AngularPrior p;
  if (kind == "uniform") {
    p = channel::AngularPrior::uniform();
  } else if (kind == "gaussian") {
    double center = 0.0, std_deg = 0.0;
    if (!s.get("center_deg") || !s.get("std_deg")) fail(path, "gaussian prior needs center_deg and std_deg");
    s.read("center_deg", center);
    s.read("std_deg", std_deg);
    p = channel::AngularPrior::gaussian(center, std_deg);
  } else {
    fail(s.child("kind"), "unknown prior kind '" + kind + "' (expected uniform or gaussian)");
  }
  s.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return p;
}

json write_prior(const channel::AngularPrior& p) {
  if (p.kind == channel::AngularPrior::Kind::uniform) return {{"kind", "uniform"}};
  return {{"kind", "gaussian"}, {"center_deg", p.center_deg}, {"std_deg", p.std_deg}};
}

void read_model(const json& v, const std::string& path, ModelSection& m) {
  Section s(v, path);
  s.read("latent_dim", m.latent_dim);
  s.read("encoder_channels", m.encoder_channels);
  s.read("decoder_channels", m.decoder_channels);
  s.read("kernel", m.kernel);
  s.read("seed", m.seed);
  s.finish();
}

json write_model(const ModelSection& m) {
  return {{"latent_dim", m.latent_dim},
          {"encoder_channels", m.encoder_channels},
          {"decoder_channels", m.decoder_channels},
          {"kernel", m.kernel},
          {"seed", m.seed}};
}

ModelSection section_from(const vae::ModelConfig& c) {
  ModelSection m;
  m.latent_dim = c.latent_dim;
  m.encoder_channels = c.encoder_channels;
  m.decoder_channels = c.decoder_channels;
  m.kernel = c.kernel;
  m.seed = c.seed;
  return m;
}

vae::ModelConfig apply_section(vae::ModelConfig c, const ModelSection& m) {
  c.latent_dim = m.latent_dim;
  c.encoder_channels = m.encoder_channels;
  c.decoder_channels = m.decoder_channels;
  c.kernel = m.kernel;
  c.seed = m.seed;
  return c;
}

}  // namespace

RunConfig::RunConfig() {
  system.priors = {channel::AngularPrior::gaussian(45.0, 30.0), channel::AngularPrior::gaussian(-45.0, 30.0)};
  model = section_from(vae::ModelConfig::multi_cell(system.antennas));
  single_model = section_from(vae::ModelConfig::single_cell(system.antennas));
  estimators = est::all_estimator_kinds();
  snr_grid_db = bench::default_snr_grid();
}

void RunConfig::validate() const {
  if (version != kConfigVersion)
    fail("version", "unsupported config version " + std::to_string(version) + " (expected " +
                        std::to_string(kConfigVersion) + ")");
  if (run_dir.empty()) fail("paths.run_dir", "must not be empty");
  try {
    system.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (system.train_count == 0) fail("system.counts.train", "must be positive");
  if (system.val_count == 0) fail("system.counts.val", "must be positive");
  if (system.test_count == 0) fail("system.counts.test", "must be positive");
  const auto check_model = [](const vae::ModelConfig& c, const std::string& path) {
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
  };
  check_model(multi_cell_model(false), "model");
  check_model(single_cell_model(), "single_model");
  try {
    schedule(0).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (estimators.empty()) fail("estimators", "must list at least one estimator");
  if (snr_grid_db.empty()) fail("sweeps.snr_grid_db", "must not be empty");
}

vae::ModelConfig RunConfig::multi_cell_model(bool genie) const {
  auto c = apply_section(vae::ModelConfig::multi_cell(system.antennas), model);
  c.genie = genie;
  return c;
}

vae::ModelConfig RunConfig::single_cell_model() const {
  return apply_section(vae::ModelConfig::single_cell(system.antennas), single_model);
}

vae::TrainSchedule RunConfig::schedule(std::uint64_t train_seed) const {
  vae::TrainSchedule s;
  s.learning_rate = learning_rate;
  s.batch_size = batch_size;
  s.patience = patience;
  s.max_epochs = max_epochs;
  s.seed = train_seed;
  s.threads = resolved_threads();
  s.redraw_noise = noise_redraw;
  s.rotate_phases = phase_rotation;
  s.redraw_snr_db[0] = system.snr_low_db;
  s.redraw_snr_db[1] = system.snr_high_db;
  return s;
}

std::size_t RunConfig::resolved_threads() const { return threads > 0 ? threads : default_threads(); }

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "");
  top.read("version", c.version);
  if (c.version != kConfigVersion) c.validate();
  top.read("seed", c.seed);
  top.read("threads", c.threads);

  if (const json* v = top.get("paths")) {
    Section s(*v, "paths");
    s.read("run_dir", c.run_dir);
    s.finish();
  }

  bool priors_given = false;
  if (const json* v = top.get("system")) {
    Section s(*v, "system");
    auto& sys = c.system;
    s.read("antennas", sys.antennas);
    s.read("cells", sys.cells);
    s.read("users", sys.users);
    s.read("pilot_length", sys.pilot_length);
    if (const json* r = s.get("snr_range_db")) {
      const auto range = Section::convert<std::vector<double>>(*r, "system.snr_range_db");
      if (range.size() != 2) fail("system.snr_range_db", "expected [low, high]");
      sys.snr_low_db = range[0];
      sys.snr_high_db = range[1];
    }
    if (const json* n = s.get("counts")) {
      Section cs(*n, "system.counts");
      cs.read("train", sys.train_count);
      cs.read("val", sys.val_count);
      cs.read("test", sys.test_count);
      cs.finish();
    }
    if (const json* p = s.get("priors")) {
      if (!p->is_array()) fail("system.priors", "expected an array");
      sys.priors.clear();
      for (std::size_t i = 0; i < p->size(); ++i)
        sys.priors.push_back(read_prior((*p)[i], "system.priors[" + std::to_string(i) + "]"));
      priors_given = true;
    }
    if (const json* k = s.get("clusters")) {
      Section ks(*k, "system.clusters");
      ks.read("count", sys.clusters.count);
      ks.read("spread_deg", sys.clusters.spread_deg);
      ks.finish();
    }
    s.finish();
  }
  if (!priors_given && c.system.cells != c.system.priors.size())
    c.system.priors.assign(c.system.cells, channel::AngularPrior::uniform());

  if (const json* v = top.get("model")) read_model(*v, "model", c.model);
  if (const json* v = top.get("single_model")) read_model(*v, "single_model", c.single_model);

  if (const json* v = top.get("training")) {
    Section s(*v, "training");
    s.read("learning_rate", c.learning_rate);
    s.read("batch_size", c.batch_size);
    s.read("patience", c.patience);
    s.read("max_epochs", c.max_epochs);
    s.read("noise_redraw", c.noise_redraw);
    s.read("phase_rotation", c.phase_rotation);
    s.finish();
  }

  if (const json* v = top.get("estimators")) {
    const auto tags = Section::convert<std::vector<std::string>>(*v, "estimators");
    c.estimators.clear();
    for (std::size_t i = 0; i < tags.size(); ++i) {
      try {
        c.estimators.push_back(est::parse_estimator_kind(tags[i]));
      } catch (const std::invalid_argument& e) {
        fail("estimators[" + std::to_string(i) + "]", e.what());
      }
    }
  }

  if (const json* v = top.get("sweeps")) {
    Section s(*v, "sweeps");
    s.read("snr_grid_db", c.snr_grid_db);
    s.read("aoa_snr_db", c.aoa_snr_db);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

std::string serialize_run_config(const RunConfig& c) {
  json priors = json::array();
  for (const auto& p : c.system.priors) priors.push_back(write_prior(p));
  json estimators = json::array();
  for (auto k : c.estimators) estimators.push_back(est::to_string(k));
  json root;
  root["version"] = c.version;
  root["seed"] = c.seed;
  root["threads"] = c.threads;
  root["paths"] = {{"run_dir", c.run_dir}};
  root["system"] = {{"antennas", c.system.antennas},
                    {"cells", c.system.cells},
                    {"users", c.system.users},
                    {"pilot_length", c.system.pilot_length},
                    {"snr_range_db", {c.system.snr_low_db, c.system.snr_high_db}},
                    {"counts", {{"train", c.system.train_count}, {"val", c.system.val_count}, {"test", c.system.test_count}}},
                    {"priors", priors},
                    {"clusters", {{"count", c.system.clusters.count}, {"spread_deg", c.system.clusters.spread_deg}}}};
  root["model"] = write_model(c.model);
  root["single_model"] = write_model(c.single_model);
  root["training"] = {{"learning_rate", c.learning_rate},
                      {"batch_size", c.batch_size},
                      {"patience", c.patience},
                      {"max_epochs", c.max_epochs},
                      {"noise_redraw", c.noise_redraw},
                      {"phase_rotation", c.phase_rotation}};
  root["estimators"] = estimators;
  root["sweeps"] = {{"snr_grid_db", c.snr_grid_db}, {"aoa_snr_db", c.aoa_snr_db}};
  return root.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_run_config(ss.str());
  namespace fs = std::filesystem;
  fs::path run_dir(c.run_dir);
  if (run_dir.is_relative()) run_dir = fs::absolute(fs::path(path)).parent_path() / run_dir;
  run_dir = run_dir.lexically_normal();
  const fs::path parent = run_dir.parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    fail("paths.run_dir", "parent directory " + parent.string() + " does not exist");
  c.run_dir = run_dir.string();
  return c;
}

std::uint64_t config_hash(const RunConfig& config) {
  RunConfig canonical = config;
  canonical.run_dir = "run";
  canonical.threads = 0;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize_run_config(canonical)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& purpose) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : purpose) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer over the combination
  std::uint64_t z = seed ^ (h + 0x9E3779B97F4A7C15ULL + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace mcce::config
