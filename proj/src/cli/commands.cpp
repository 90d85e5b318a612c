#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcce/bench.hpp"
#include "mcce/cli.hpp"
#include "mcce/config.hpp"
#include "mcce/dataset_io.hpp"
#include "mcce/errors.hpp"
#include "mcce/estimators.hpp"
#include "mcce/parallel.hpp"
#include "mcce/vae/checkpoint.hpp"
#include "mcce/vae/train.hpp"

namespace mcce::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using est::EstimatorKind;

namespace {

constexpr const char* kManifestFormat = "mcce-manifest";
constexpr int kManifestVersion = 1;
const char* const kSplits[] = {"train", "val", "test"};

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CRC-32 of a file. Binary artifacts are hashed without their own 4-byte
// CRC trailer, which would otherwise give the same value for every file
// sharing a header prefix.
std::string crc_hex(const fs::path& file, bool has_trailer = true) {
  const auto bytes = io::read_file(file.string());
  const std::size_t body = has_trailer && bytes.size() >= 4 ? bytes.size() - 4 : bytes.size();
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", io::crc32(bytes.data(), body));
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CommandError("cannot write " + path.string());
  out << text;
  if (!out) throw CommandError("write failed: " + path.string());
}

json load_manifest(const RunLayout& layout) {
  const fs::path p = layout.manifest();
  if (!fs::exists(p)) throw CommandError("no manifest in " + layout.root.string() + " (run `gen` first)");
  json m;
  try {
    m = json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw CommandError("manifest " + p.string() + " is not valid JSON: " + e.what());
  }
  if (m.value("format", "") != kManifestFormat || m.value("version", 0) != kManifestVersion)
    throw CommandError("manifest " + p.string() + " has an unsupported format or version");
  return m;
}

void save_manifest(const RunLayout& layout, const json& m) { write_text(layout.manifest(), m.dump(2) + "\n"); }

// The config stored in a manifest, with run_dir pointing at the run itself.
config::RunConfig manifest_config(const json& m, const fs::path& root) {
  auto cfg = config::parse_run_config(m.at("config").dump());
  cfg.run_dir = root.string();
  return cfg;
}

json config_json(const config::RunConfig& cfg) {
  auto stored = cfg;
  stored.run_dir = ".";
  stored.threads = 0;
  return json::parse(config::serialize_run_config(stored));
}

std::size_t thread_count(const config::RunConfig& cfg, std::size_t flag) { return flag > 0 ? flag : cfg.resolved_threads(); }

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::string config;
  std::string manifest;
  std::string run_dir;
  std::size_t threads = 0;
};

json generate_datasets(const config::RunConfig& cfg, const RunLayout& layout, std::size_t threads, std::ostream& out) {
  fs::create_directories(layout.root);
  const std::size_t counts[] = {cfg.system.train_count, cfg.system.val_count, cfg.system.test_count};
  const auto snr = scenario::SnrDraw::uniform(cfg.system.snr_low_db, cfg.system.snr_high_db);
  json datasets = json::object();
  json seeds = json::object();
  for (std::size_t s = 0; s < 3; ++s) {
    const std::string split = kSplits[s];
    const std::uint64_t seed = config::derive_seed(cfg.seed, "split:" + split);
    const auto gen = scenario::generate_split(cfg.system, counts[s], seed, snr, threads);
    const fs::path file = layout.dataset(split);
    io::save_dataset(gen.data, file.string());
    datasets[split] = {{"file", file.filename().string()},
                       {"records", gen.data.size()},
                       {"normalization_scale", gen.normalization.scale},
                       {"signal_power_before", gen.normalization.signal_power_before},
                       {"crc32", crc_hex(file)}};
    seeds[split] = seed;
    out << "gen: " << split << " " << gen.data.size() << " records -> " << file.string() << "\n";
  }
  json m;
  m["format"] = kManifestFormat;
  m["version"] = kManifestVersion;
  m["config_hash"] = config::hex64(config::config_hash(cfg));
  m["config"] = config_json(cfg);
  m["seeds"] = {{"run", cfg.seed}, {"splits", seeds}};
  m["artifact_versions"] = {{"dataset", io::kDatasetVersion}, {"checkpoint", vae::kCheckpointVersion}};
  m["datasets"] = datasets;
  m["checkpoints"] = json::object();
  m["reports"] = json::object();
  return m;
}

void cmd_gen(const GenOptions& o, std::ostream& out) {
  if (o.config.empty() == o.manifest.empty()) throw CommandError("gen: pass exactly one of --config or --manifest");
  if (!o.config.empty()) {
    auto cfg = config::load_run_config(o.config);
    if (!o.run_dir.empty()) cfg.run_dir = o.run_dir;
    const RunLayout layout{cfg.run_dir};
    save_manifest(layout, generate_datasets(cfg, layout, thread_count(cfg, o.threads), out));
    out << "gen: manifest " << layout.manifest().string() << " (config " << config::hex64(config::config_hash(cfg))
        << ")\n";
    return;
  }

  // Replay: regenerate from a manifest and require identical files.
  const fs::path manifest_path = fs::absolute(o.manifest);
  const RunLayout source{manifest_path.parent_path()};
  const json recorded = load_manifest(source);
  const RunLayout layout{o.run_dir.empty() ? source.root : fs::path(o.run_dir)};
  auto cfg = manifest_config(recorded, layout.root);
  if (config::hex64(config::config_hash(cfg)) != recorded.at("config_hash").get<std::string>())
    throw CommandError("gen: manifest config does not match its recorded hash");
  json fresh = generate_datasets(cfg, layout, thread_count(cfg, o.threads), out);
  for (const char* split : kSplits) {
    const auto want = recorded.at("datasets").at(split).at("crc32").get<std::string>();
    const auto got = fresh["datasets"][split]["crc32"].get<std::string>();
    if (want != got)
      throw CommandError(std::string("gen: replay of ") + split + " produced crc32 " + got + ", manifest records " +
                         want);
  }
  if (fs::weakly_canonical(layout.root) != fs::weakly_canonical(source.root)) save_manifest(layout, fresh);
  out << "gen: replay matches manifest\n";
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string run_dir;
  bool genie = false;
  bool single = false;
  bool resume = false;
  std::size_t max_epochs = 0;
  std::string history;
  std::size_t threads = 0;
  bool quiet = false;
};

std::string checkpoint_name(bool genie, bool single) {
  if (single) return "single";
  return genie ? "vae_genie" : "vae";
}

std::string history_line(const vae::EpochRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d\n", r.epoch, r.train_elbo, r.val_elbo, r.improved ? 1 : 0);
  return buf;
}

constexpr const char* kHistoryHeader = "epoch,train_elbo,val_elbo,improved\n";

// Keeps the header and the rows of epochs <= `epochs`.
std::string truncated_history(const fs::path& path, std::size_t epochs) {
  std::string kept = kHistoryHeader;
  if (!fs::exists(path)) return kept;
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (std::stoul(line.substr(0, line.find(','))) <= epochs) kept += line + "\n";
  }
  return kept;
}

void cmd_train(const TrainOptions& o, std::ostream& out) {
  if (o.genie && o.single) throw CommandError("train: --genie and --single are exclusive");
  const RunLayout layout{o.run_dir};
  json manifest = load_manifest(layout);
  auto cfg = manifest_config(manifest, layout.root);
  if (o.max_epochs > 0) cfg.max_epochs = o.max_epochs;
  const std::size_t threads = thread_count(cfg, o.threads);

  const std::string name = checkpoint_name(o.genie, o.single);
  const vae::ModelConfig model = o.single ? cfg.single_cell_model() : cfg.multi_cell_model(o.genie);
  const fs::path ckpt_path = layout.checkpoint(name);
  const fs::path history_path = o.history.empty() ? layout.history(name) : fs::path(o.history);

  std::optional<vae::TrainState> resume;
  if (o.resume) {
    auto ckpt = vae::load_checkpoint(ckpt_path.string(), model);
    if (!ckpt.state) throw CommandError("train: checkpoint " + ckpt_path.string() + " has no training state");
    resume = std::move(ckpt.state);
  }

  const auto train_set = io::load_dataset(layout.dataset("train").string());
  const auto val_set = io::load_dataset(layout.dataset("val").string());
  const std::uint64_t train_seed = config::derive_seed(cfg.seed, "train:" + name);
  auto schedule = cfg.schedule(train_seed);
  schedule.threads = threads;

  std::string history = resume ? truncated_history(history_path, resume->epoch) : std::string(kHistoryHeader);
  write_text(history_path, history);
  std::ofstream hist(history_path, std::ios::binary | std::ios::app);
  vae::TrainHooks hooks;
  hooks.on_epoch = [&](const vae::EpochRecord& r) {
    hist << history_line(r);
    hist.flush();
    if (!o.quiet)
      out << "train " << name << ": epoch " << r.epoch << " train " << r.train_elbo << " val " << r.val_elbo
          << (r.improved ? " *" : "") << "\n";
  };
  const auto result = vae::train(model, train_set, val_set, schedule, hooks, resume ? &*resume : nullptr);
  hist.close();

  vae::Checkpoint ckpt{model, result.state.best_params, result.state};
  fs::create_directories(ckpt_path.parent_path());
  vae::save_checkpoint(ckpt, ckpt_path.string());
  manifest["checkpoints"][name] = {{"file", fs::relative(ckpt_path, layout.root).string()},
                                   {"crc32", crc_hex(ckpt_path)},
                                   {"seed", train_seed},
                                   {"epochs", result.state.epoch},
                                   {"best_val_elbo", result.state.best_val},
                                   {"early_stopped", result.early_stopped}};
  save_manifest(layout, manifest);
  out << "train " << name << ": " << result.state.epoch << " epochs, best val ELBO " << result.state.best_val
      << (result.early_stopped ? " (early stop)" : "") << " -> " << ckpt_path.string() << "\n";
}

// ---------------------------------------------------------------- evaluation

struct ModelPaths {
  std::string vae, vae_genie, single;
};

// Everything one run directory contributes to an evaluation.
struct LoadedRun {
  config::RunConfig cfg;
  json manifest;
  scenario::Dataset test;
  std::unique_ptr<est::ScovEstimator> scov;
  std::unique_ptr<vae::VaeModel> vae, vae_genie, single;

  bench::Resources resources() const {
    bench::Resources r;
    r.test = &test;
    r.scov = scov.get();
    r.vae = vae.get();
    r.vae_genie = vae_genie.get();
    r.single = single.get();
    return r;
  }
};

std::unique_ptr<vae::VaeModel> load_model(const fs::path& path, const std::string& tag) {
  if (!fs::exists(path)) throw CommandError("missing checkpoint for " + tag + ": " + path.string());
  auto ckpt = vae::load_checkpoint(path.string());
  return std::make_unique<vae::VaeModel>(ckpt.config, ckpt.params);
}

bool needs(const std::vector<EstimatorKind>& kinds, std::initializer_list<EstimatorKind> any) {
  for (auto k : kinds)
    for (auto a : any)
      if (k == a) return true;
  return false;
}

std::unique_ptr<LoadedRun> load_run(const fs::path& root, const std::vector<EstimatorKind>& kinds,
                                    const ModelPaths& paths) {
  auto run = std::make_unique<LoadedRun>();
  const RunLayout layout{root};
  run->manifest = load_manifest(layout);
  run->cfg = manifest_config(run->manifest, root);
  run->test = io::load_dataset(layout.dataset("test").string());
  if (needs(kinds, {EstimatorKind::scov, EstimatorKind::vae_awgn, EstimatorKind::vae_scov}))
    run->scov = std::make_unique<est::ScovEstimator>(est::scov_fit(io::load_dataset(layout.dataset("train").string())));
  const auto pick = [&](const std::string& flag, const std::string& name) {
    return flag.empty() ? layout.checkpoint(name) : fs::path(flag);
  };
  if (needs(kinds, {EstimatorKind::vae})) run->vae = load_model(pick(paths.vae, "vae"), "vae");
  if (needs(kinds, {EstimatorKind::vae_genie}))
    run->vae_genie = load_model(pick(paths.vae_genie, "vae_genie"), "vae-genie");
  if (needs(kinds, {EstimatorKind::vae_ignore, EstimatorKind::vae_awgn, EstimatorKind::vae_scov}))
    run->single = load_model(pick(paths.single, "single"), "vae-ignore/awgn/scov");
  const auto res = run->resources();
  for (auto k : kinds) bench::require_resources(k, res);
  return run;
}

std::vector<EstimatorKind> parse_kinds(const std::vector<std::string>& tags, const config::RunConfig& cfg) {
  if (tags.empty()) return cfg.estimators;
  std::vector<EstimatorKind> kinds;
  for (const auto& t : tags) kinds.push_back(est::parse_estimator_kind(t));
  return kinds;
}

struct EvalOptions {
  std::string run_dir;
  std::vector<std::string> estimators;
  std::optional<double> snr;
  std::vector<double> grid;
  std::string out_file;
  std::string format = "csv";
  ModelPaths models;
  std::size_t threads = 0;
};

void finish_report(const bench::NmseReport& report, const std::string& path, const std::string& format,
                   std::ostream& out) {
  const auto fmt = bench::parse_report_format(format);
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  bench::emit_report(report, path, fmt);
  out << (fmt == bench::ReportFormat::csv ? bench::format_csv(report) : bench::format_plot_data(report));
  out << "report -> " << path << "\n";
}

void record_report(const RunLayout& layout, const std::string& name, const fs::path& file) {
  json m = load_manifest(layout);
  m["reports"][name] = {{"file", fs::absolute(file).lexically_relative(fs::absolute(layout.root)).string()},
                        {"crc32", crc_hex(file, false)}};
  save_manifest(layout, m);
}

// Peeks at the manifest config to resolve defaults before loading.
config::RunConfig peek_config(const fs::path& root) { return manifest_config(load_manifest(RunLayout{root}), root); }

void cmd_eval(const EvalOptions& o, bool sweep, std::ostream& out) {
  const RunLayout layout{o.run_dir};
  const auto cfg = peek_config(layout.root);
  const auto kinds = parse_kinds(o.estimators, cfg);
  const auto run = load_run(layout.root, kinds, o.models);
  std::vector<double> grid;
  if (sweep)
    grid = o.grid.empty() ? cfg.snr_grid_db : o.grid;
  else
    grid = {o.snr.value_or(cfg.aoa_snr_db)};
  const std::uint64_t seed = config::derive_seed(cfg.seed, sweep ? "eval:sweep-snr" : "eval:point");
  const auto report = bench::sweep_snr(kinds, run->resources(), grid, seed, thread_count(cfg, o.threads));
  const std::string name = sweep ? "sweep_snr" : "eval_" + bench::snr_label(grid[0]);
  const std::string path = o.out_file.empty() ? layout.report(name).string() : o.out_file;
  finish_report(report, path, o.format, out);
  record_report(layout, name, path);
}

struct AoaOptions {
  std::vector<std::string> cases;
  std::vector<std::string> estimators;
  std::optional<double> snr;
  std::optional<std::uint64_t> seed;
  std::string out_file;
  std::string format = "csv";
  std::size_t threads = 0;
};

void cmd_sweep_aoa(const AoaOptions& o, std::ostream& out) {
  if (o.cases.empty()) throw CommandError("sweep-aoa: at least one --case label=dir is required");
  std::vector<std::pair<std::string, fs::path>> specs;
  for (const auto& c : o.cases) {
    const auto eq = c.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == c.size())
      throw CommandError("sweep-aoa: --case expects label=dir, got '" + c + "'");
    specs.emplace_back(c.substr(0, eq), fs::path(c.substr(eq + 1)));
  }
  const auto first = peek_config(specs[0].second);
  const auto kinds = parse_kinds(o.estimators, first);
  std::vector<std::unique_ptr<LoadedRun>> runs;
  std::vector<bench::AoaCase> cases;
  for (const auto& [label, dir] : specs) {
    runs.push_back(load_run(dir, kinds, {}));
    if (runs.back()->cfg.system.antennas != first.system.antennas)
      throw CommandError("sweep-aoa: case '" + label + "' has a different antenna count");
    cases.push_back({label, runs.back()->resources()});
  }
  const double snr = o.snr.value_or(first.aoa_snr_db);
  const std::uint64_t seed = o.seed.value_or(config::derive_seed(first.seed, "eval:sweep-aoa"));
  const auto report = bench::sweep_aoa(cases, kinds, snr, seed, thread_count(first, o.threads));
  const std::string path = o.out_file.empty() ? (specs[0].second / "reports" / "sweep_aoa.csv").string() : o.out_file;
  finish_report(report, path, o.format, out);
}

// ---------------------------------------------------------------- ingest, report

struct IngestOptions {
  std::string input;
  std::string output;
  std::string normalization = "none";
  std::vector<double> snr_range{-16.0, 36.0};
  std::optional<double> snr;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
};

void cmd_ingest(const IngestOptions& o, std::ostream& out) {
  if (o.snr_range.size() != 2 || !(o.snr_range[0] <= o.snr_range[1]))
    throw CommandError("ingest: --snr-range expects low,high with low <= high");
  const auto norm = scenario::parse_external_normalization(o.normalization);
  const auto snr = o.snr ? scenario::SnrDraw::fixed(*o.snr) : scenario::SnrDraw::uniform(o.snr_range[0], o.snr_range[1]);
  const std::size_t threads = o.threads > 0 ? o.threads : default_threads();
  const auto data = scenario::ingest_external(o.input, norm, snr, o.seed, threads);
  if (fs::path(o.output).has_parent_path()) fs::create_directories(fs::path(o.output).parent_path());
  io::save_dataset(data, o.output);
  out << "ingest: " << data.size() << " records -> " << o.output << " (crc32 " << crc_hex(o.output) << ")\n";
}

struct ReportOptions {
  std::string input;
  std::string format = "csv";
  std::string out_file;
};

void cmd_report(const ReportOptions& o, std::ostream& out) {
  const auto report = bench::read_report(o.input);
  const auto fmt = bench::parse_report_format(o.format);
  if (!o.out_file.empty()) {
    bench::emit_report(report, o.out_file, fmt);
    out << "report -> " << o.out_file << "\n";
  } else {
    out << (fmt == bench::ReportFormat::csv ? bench::format_csv(report) : bench::format_plot_data(report));
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-cell massive-MIMO channel estimation lab"};
  app.name("mcce");
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate train/val/test datasets and the run manifest");
  g->add_option("--config", gen.config, "Run config (JSON)");
  g->add_option("--manifest", gen.manifest, "Replay the datasets recorded in a manifest");
  g->add_option("--run-dir", gen.run_dir, "Override the run directory");
  g->add_option("--threads", gen.threads, "Worker threads (default: config, then MCCE_THREADS)");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a VAE checkpoint from a generated run");
  t->add_option("--run-dir", tr.run_dir, "Run directory")->required();
  t->add_flag("--genie", tr.genie, "Train on noiseless inputs with zero noise variance");
  t->add_flag("--single", tr.single, "Train the single-cell ablation model");
  t->add_flag("--resume", tr.resume, "Continue from the existing checkpoint");
  t->add_option("--max-epochs", tr.max_epochs, "Override training.max_epochs");
  t->add_option("--history", tr.history, "Per-epoch ELBO history CSV");
  t->add_option("--threads", tr.threads, "Worker threads");
  t->add_flag("--quiet", tr.quiet, "No per-epoch output");

  EvalOptions ev;
  double eval_snr = 0.0;
  auto* e = app.add_subcommand("eval", "Evaluate estimators at one SNR");
  e->add_option("--run-dir", ev.run_dir, "Run directory")->required();
  auto* e_snr = e->add_option("--snr", eval_snr, "SNR in dB (default: sweeps.aoa_snr_db)");
  e->add_option("--estimators", ev.estimators, "Estimator tags")->delimiter(',');
  e->add_option("--out", ev.out_file, "Report path");
  e->add_option("--format", ev.format, "csv | plot-data");
  e->add_option("--vae", ev.models.vae, "Checkpoint for vae");
  e->add_option("--vae-genie", ev.models.vae_genie, "Checkpoint for vae-genie");
  e->add_option("--single", ev.models.single, "Checkpoint for vae-ignore, vae-awgn and vae-scov");
  e->add_option("--threads", ev.threads, "Worker threads");

  EvalOptions sw;
  auto* s = app.add_subcommand("sweep-snr", "NMSE over an SNR grid");
  s->add_option("--run-dir", sw.run_dir, "Run directory")->required();
  s->add_option("--grid", sw.grid, "SNR grid in dB (default: sweeps.snr_grid_db)")->delimiter(',');
  s->add_option("--estimators", sw.estimators, "Estimator tags")->delimiter(',');
  s->add_option("--out", sw.out_file, "Report path");
  s->add_option("--format", sw.format, "csv | plot-data");
  s->add_option("--vae", sw.models.vae, "Checkpoint for vae");
  s->add_option("--vae-genie", sw.models.vae_genie, "Checkpoint for vae-genie");
  s->add_option("--single", sw.models.single, "Checkpoint for vae-ignore, vae-awgn and vae-scov");
  s->add_option("--threads", sw.threads, "Worker threads");

  AoaOptions ao;
  double aoa_snr = 0.0;
  std::uint64_t aoa_seed = 0;
  auto* a = app.add_subcommand("sweep-aoa", "NMSE across angular-prior cases at one SNR");
  a->add_option("--case", ao.cases, "label=run-dir (repeatable, in order)")->required();
  auto* a_snr = a->add_option("--snr", aoa_snr, "SNR in dB (default: sweeps.aoa_snr_db of the first case)");
  auto* a_seed = a->add_option("--seed", aoa_seed, "Evaluation seed");
  a->add_option("--estimators", ao.estimators, "Estimator tags")->delimiter(',');
  a->add_option("--out", ao.out_file, "Report path");
  a->add_option("--format", ao.format, "csv | plot-data");
  a->add_option("--threads", ao.threads, "Worker threads");

  IngestOptions in;
  double ingest_snr = 0.0;
  auto* i = app.add_subcommand("ingest", "Attach observations to an external channels-only dataset");
  i->add_option("--input", in.input, "Channels-only dataset file")->required();
  i->add_option("--out", in.output, "Output dataset file")->required();
  i->add_option("--normalization", in.normalization, "none | cumulative-path-gain");
  i->add_option("--snr-range", in.snr_range, "Per-record SNR range low,high in dB")->delimiter(',');
  auto* i_snr = i->add_option("--snr", ingest_snr, "Fixed SNR in dB");
  i->add_option("--seed", in.seed, "Noise seed");
  i->add_option("--threads", in.threads, "Worker threads");

  ReportOptions rp;
  auto* r = app.add_subcommand("report", "Convert a CSV report");
  r->add_option("--input", rp.input, "CSV report")->required();
  r->add_option("--format", rp.format, "csv | plot-data");
  r->add_option("--out", rp.out_file, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& ex) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }

  try {
    if (g->parsed()) {
      cmd_gen(gen, out);
    } else if (t->parsed()) {
      cmd_train(tr, out);
    } else if (e->parsed()) {
      if (e_snr->count() > 0) ev.snr = eval_snr;
      cmd_eval(ev, false, out);
    } else if (s->parsed()) {
      cmd_eval(sw, true, out);
    } else if (a->parsed()) {
      if (a_snr->count() > 0) ao.snr = aoa_snr;
      if (a_seed->count() > 0) ao.seed = aoa_seed;
      cmd_sweep_aoa(ao, out);
    } else if (i->parsed()) {
      if (i_snr->count() > 0) in.snr = ingest_snr;
      cmd_ingest(in, out);
    } else if (r->parsed()) {
      cmd_report(rp, out);
    }
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"mcce"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mcce::cli
