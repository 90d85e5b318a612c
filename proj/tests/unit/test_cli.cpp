#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mcce/bench.hpp"
#include "mcce/cli.hpp"
#include "mcce/dataset_io.hpp"
#include "mcce/vae/checkpoint.hpp"
#include "test_util.hpp"

using namespace mcce;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result mcce_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

const char* kTinyConfig = R"({
  "seed": 5,
  "paths": {"run_dir": "run"},
  "system": {"antennas": 8, "counts": {"train": 256, "val": 64, "test": 200}},
  "model": {"latent_dim": 4, "encoder_channels": [4, 8], "decoder_channels": [8, 4], "kernel": 3},
  "single_model": {"latent_dim": 2, "encoder_channels": [4, 8], "decoder_channels": [4, 2], "kernel": 3},
  "training": {"learning_rate": 0.001, "batch_size": 64, "patience": 5, "max_epochs": 2},
  "sweeps": {"snr_grid_db": [0, 10, 20], "aoa_snr_db": 10}
})";

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_CASE("usage errors") {
  CHECK(mcce_run({}).code == cli::kExitUsage);
  CHECK(mcce_run({"bogus"}).code == cli::kExitUsage);
  CHECK(mcce_run({"train"}).code == cli::kExitUsage);
  CHECK(mcce_run({"eval", "--run-dir", "x", "--snr", "ten"}).code == cli::kExitUsage);
  const auto help = mcce_run({"--help"});
  CHECK(help.code == cli::kExitOk);
  CHECK(help.out.find("sweep-aoa") != std::string::npos);
}

TEST_CASE("config errors exit nonzero") {
  testutil::TempDir dir("cli_cfg");
  write(dir.file("bad.json"), R"({"system": {"users": 3, "pilot_length": 2}})");
  const auto r = mcce_run({"gen", "--config", dir.file("bad.json")});
  CHECK(r.code == cli::kExitError);
  CHECK(r.err.find("T_tr >= K") != std::string::npos);
  write(dir.file("unknown.json"), R"({"sytem": {}})");
  CHECK(mcce_run({"gen", "--config", dir.file("unknown.json")}).err.find("sytem: unknown key") != std::string::npos);
  CHECK(mcce_run({"gen"}).code == cli::kExitError);
  CHECK(mcce_run({"train", "--run-dir", dir.file("nothing")}).err.find("no manifest") != std::string::npos);
}

TEST_CASE("gen, train, eval") {
  testutil::TempDir dir("cli_run");
  write(dir.file("cfg.json"), kTinyConfig);
  const cli::RunLayout run{dir.file("run")};

  REQUIRE(mcce_run({"gen", "--config", dir.file("cfg.json")}).code == 0);
  for (const char* split : {"train", "val", "test"}) CHECK(fs::exists(run.dataset(split)));
  const auto manifest = nlohmann::json::parse(slurp(run.manifest()));
  CHECK(manifest["format"] == "mcce-manifest");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
  CHECK(manifest["config"]["system"]["antennas"] == 8);
  CHECK(manifest["datasets"]["train"]["records"] == 256);
  CHECK(manifest["datasets"]["test"]["normalization_scale"].get<double>() > 0.0);
  CHECK(manifest["seeds"]["splits"]["train"] != manifest["seeds"]["splits"]["val"]);
  CHECK(manifest["datasets"]["train"]["crc32"] != manifest["datasets"]["val"]["crc32"]);
  CHECK(manifest["artifact_versions"]["dataset"] == 1);
  const auto test = io::load_dataset(run.dataset("test").string());
  CHECK(test.size() == 200);
  CHECK(test.header.has_ccms);

  SUBCASE("generation is thread-count invariant and replayable") {
    REQUIRE(mcce_run({"gen", "--config", dir.file("cfg.json"), "--run-dir", dir.file("t3"), "--threads", "3"}).code == 0);
    for (const char* split : {"train", "val", "test"})
      CHECK(slurp(run.dataset(split)) == slurp(fs::path(dir.file("t3")) / (std::string(split) + ".mcce")));
    CHECK(slurp(run.manifest()) == slurp(fs::path(dir.file("t3")) / "manifest.json"));

    const auto replay = mcce_run({"gen", "--manifest", run.manifest().string(), "--run-dir", dir.file("replay")});
    CHECK(replay.code == 0);
    CHECK(slurp(run.dataset("test")) == slurp(fs::path(dir.file("replay")) / "test.mcce"));

    auto tampered = manifest;
    tampered["datasets"]["val"]["crc32"] = "00000000";
    fs::create_directories(dir.file("tampered"));
    write(fs::path(dir.file("tampered")) / "manifest.json", tampered.dump());
    const auto bad = mcce_run({"gen", "--manifest", dir.file("tampered/manifest.json")});
    CHECK(bad.code == cli::kExitError);
    CHECK(bad.err.find("replay of val") != std::string::npos);
  }

  SUBCASE("baselines need no checkpoints") {
    const auto r = mcce_run({"eval", "--run-dir", run.root.string(), "--estimators", "ls,scov", "--snr", "10"});
    REQUIRE(r.code == 0);
    const auto report = bench::read_report(run.report("eval_10").string());
    CHECK(report.rows.size() == 2);
    CHECK(report.find("ls", "10").n == 200);
    CHECK(report.find("scov", "10").nmse < report.find("ls", "10").nmse);
    const auto m = nlohmann::json::parse(slurp(run.manifest()));
    CHECK(m["reports"].contains("eval_10"));

    const auto missing = mcce_run({"eval", "--run-dir", run.root.string(), "--estimators", "vae"});
    CHECK(missing.code == cli::kExitError);
    CHECK(missing.err.find("missing checkpoint for vae") != std::string::npos);
    CHECK(mcce_run({"eval", "--run-dir", run.root.string(), "--estimators", "mmse"}).code == cli::kExitError);
    CHECK(mcce_run({"eval", "--run-dir", run.root.string(), "--estimators", "ls", "--format", "xml"}).code ==
          cli::kExitError);
  }

  SUBCASE("training, resume and the full estimator set") {
    REQUIRE(mcce_run({"train", "--run-dir", run.root.string(), "--quiet"}).code == 0);
    REQUIRE(mcce_run({"train", "--run-dir", run.root.string(), "--genie", "--quiet"}).code == 0);
    REQUIRE(mcce_run({"train", "--run-dir", run.root.string(), "--single", "--quiet"}).code == 0);
    CHECK(mcce_run({"train", "--run-dir", run.root.string(), "--single", "--genie"}).code == cli::kExitError);
    for (const char* name : {"vae", "vae_genie", "single"}) {
      CHECK(fs::exists(run.checkpoint(name)));
      CHECK(line_count(slurp(run.history(name))) == 3);
    }
    const auto genie = vae::load_checkpoint(run.checkpoint("vae_genie").string());
    CHECK(genie.config.genie);
    CHECK(genie.config.num_blocks == 2);
    CHECK(vae::load_checkpoint(run.checkpoint("single").string()).config.num_blocks == 1);
    auto m = nlohmann::json::parse(slurp(run.manifest()));
    CHECK(m["checkpoints"]["vae"]["epochs"] == 2);
    CHECK(m["checkpoints"]["vae"]["crc32"] != m["checkpoints"]["vae_genie"]["crc32"]);

    // Resuming continues the epoch count and the history file.
    const auto before = vae::load_checkpoint(run.checkpoint("vae").string());
    REQUIRE(mcce_run({"train", "--run-dir", run.root.string(), "--resume", "--max-epochs", "4", "--quiet"}).code == 0);
    const auto after = vae::load_checkpoint(run.checkpoint("vae").string());
    CHECK(after.state->epoch == 4);
    CHECK(after.state->adam.step > before.state->adam.step);
    const std::string history = slurp(run.history("vae"));
    CHECK(line_count(history) == 5);
    CHECK(history.find("\n4,") != std::string::npos);

    // Uninterrupted four-epoch run in a copy gives the same checkpoint.
    REQUIRE(mcce_run({"gen", "--config", dir.file("cfg.json"), "--run-dir", dir.file("straight")}).code == 0);
    REQUIRE(mcce_run({"train", "--run-dir", dir.file("straight"), "--max-epochs", "4", "--quiet"}).code == 0);
    CHECK(slurp(run.checkpoint("vae")) == slurp(fs::path(dir.file("straight")) / "checkpoints" / "vae.mcva"));

    const auto all = mcce_run({"eval", "--run-dir", run.root.string()});
    REQUIRE(all.code == 0);
    CHECK(bench::read_report(run.report("eval_10").string()).rows.size() == 8);

    // Kind mismatch names both block counts.
    const auto mismatch = mcce_run({"eval", "--run-dir", run.root.string(), "--estimators", "vae", "--vae",
                                    run.checkpoint("single").string()});
    CHECK(mismatch.code == cli::kExitError);
    CHECK(mismatch.err.find("num_blocks=2") != std::string::npos);
    CHECK(mismatch.err.find("num_blocks=1") != std::string::npos);

    const auto sweep = mcce_run({"sweep-snr", "--run-dir", run.root.string(), "--estimators", "ls,vae,vae-scov"});
    REQUIRE(sweep.code == 0);
    const auto report = bench::read_report(run.report("sweep_snr").string());
    CHECK(report.rows.size() == 9);
    CHECK_NOTHROW(report.find("vae-scov", "20"));

    const auto plot = mcce_run({"report", "--input", run.report("sweep_snr").string(), "--format", "plot-data"});
    CHECK(plot.code == 0);
    CHECK(plot.out.find("# estimator vae\n") != std::string::npos);
    CHECK(mcce_run({"report", "--input", dir.file("none.csv")}).code == cli::kExitError);
  }
}

TEST_CASE("sweep-aoa over run directories") {
  testutil::TempDir dir("cli_aoa");
  const std::string uniform = R"({"seed": 3, "system": {"antennas": 16, "counts": {"train": 500, "val": 10, "test": 2000},
    "priors": [{"kind": "uniform"}, {"kind": "uniform"}]}})";
  const std::string narrow = R"({"seed": 3, "system": {"antennas": 16, "counts": {"train": 500, "val": 10, "test": 2000},
    "priors": [{"kind": "gaussian", "center_deg": 45, "std_deg": 30},
               {"kind": "gaussian", "center_deg": -45, "std_deg": 30}]}})";
  write(dir.file("u.json"), uniform);
  write(dir.file("n.json"), narrow);
  REQUIRE(mcce_run({"gen", "--config", dir.file("u.json"), "--run-dir", dir.file("u")}).code == 0);
  REQUIRE(mcce_run({"gen", "--config", dir.file("n.json"), "--run-dir", dir.file("n")}).code == 0);
  const auto r = mcce_run({"sweep-aoa", "--case", "uniform=" + dir.file("u"), "--case", "std30=" + dir.file("n"),
                           "--estimators", "ls,scov,genie-cov", "--out", dir.file("aoa.csv")});
  REQUIRE(r.code == 0);
  const auto report = bench::read_report(dir.file("aoa.csv"));
  CHECK(report.rows.size() == 6);
  CHECK(report.find("genie-cov", "std30").nmse < report.find("genie-cov", "uniform").nmse);
  CHECK(mcce_run({"sweep-aoa", "--case", "nolabel"}).code == cli::kExitError);
  CHECK(mcce_run({"sweep-aoa", "--case", "x=" + dir.file("u"), "--estimators", "vae"}).code == cli::kExitError);
}

TEST_CASE("ingest") {
  testutil::TempDir dir("cli_ingest");
  auto ds = scenario::generate_split(
                [] {
                  scenario::SystemConfig c;
                  c.antennas = 8;
                  c.priors = {channel::AngularPrior::uniform(), channel::AngularPrior::uniform()};
                  return c;
                }(),
                50, 2, scenario::SnrDraw::fixed(0.0))
                .data;
  ds.header.has_observations = false;
  for (auto& rec : ds.records) {
    rec.y.clear();
    rec.y1.clear();
    rec.y2.clear();
    rec.sigma_sq = rec.sigma1_sq = rec.sigma2_sq = 0.0;
  }
  io::save_dataset(ds, dir.file("ext.mcce"));
  const auto r = mcce_run({"ingest", "--input", dir.file("ext.mcce"), "--out", dir.file("obs.mcce"), "--normalization",
                           "cumulative-path-gain", "--snr", "10", "--seed", "4"});
  REQUIRE(r.code == 0);
  const auto obs = io::load_dataset(dir.file("obs.mcce"));
  CHECK(obs.size() == 50);
  CHECK(obs.header.has_observations);
  CHECK(obs.records[0].sigma_sq == doctest::Approx(0.1));
  const auto again = mcce_run({"ingest", "--input", dir.file("ext.mcce"), "--out", dir.file("obs2.mcce"),
                               "--normalization", "cumulative-path-gain", "--snr", "10", "--seed", "4"});
  CHECK(slurp(dir.file("obs.mcce")) == slurp(dir.file("obs2.mcce")));
  CHECK(mcce_run({"ingest", "--input", dir.file("obs.mcce"), "--out", dir.file("x.mcce")}).code == cli::kExitError);
  CHECK(mcce_run({"ingest", "--input", dir.file("ext.mcce"), "--out", dir.file("x.mcce"), "--normalization", "peak"})
            .code == cli::kExitError);
}
