#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

// Command-line front end. A run directory holds one experiment:
//
//   <run>/manifest.json             config, config hash, seeds, normalization
//                                   scales, artifact CRCs
//   <run>/train.mcce val.mcce test.mcce
//   <run>/checkpoints/{vae,vae_genie,single}.mcva
//   <run>/history/<checkpoint>.csv  one row per training epoch
//   <run>/reports/*.csv
//
// Exit status: 0 on success, 1 on a runtime error, 2 on a usage error.

namespace mcce::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path dataset(const std::string& split) const { return root / (split + ".mcce"); }
  std::filesystem::path checkpoint(const std::string& name) const { return root / "checkpoints" / (name + ".mcva"); }
  std::filesystem::path history(const std::string& name) const { return root / "history" / (name + ".csv"); }
  std::filesystem::path report(const std::string& name) const { return root / "reports" / (name + ".csv"); }
};

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mcce::cli
