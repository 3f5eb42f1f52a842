#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "plate/config.hpp"
#include "plate/generator.hpp"

namespace plate {

// mt19937_64 with a fixed bit-to-double map, so draws do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

// Σ_k (r_k + i s_k) sin((k - ½) π x / L) / k with r, s uniform in [-1, 1];
// vanishes at x = 0.
CVec smooth_random_field(const Mesh1D& mesh, Rng& rng, Index modes);

// Real initial displacement Σ r_k sin((k - ½)πx/L)/k² and velocity
// Σ s_k sin((k - ½)πx/L)/k, projected onto the boundary constraints.
PlateState random_initial_state(const GeneratorMatrix& gen, Rng& rng, Index modes);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::vector<std::string>> formats;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

struct RunResult {
  // 0 pass, 1 failed check or experiment error, 2 configuration error.
  int exit_code = 0;
  std::string message;
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

const std::vector<std::string>& subcommand_names();

// Runs one experiment and writes its artifacts. Never throws for bad
// configurations or failed checks; see RunResult::exit_code.
RunResult run_subcommand(const std::string& name, const nlohmann::json& raw_config, const RunOptions& options);

}  // namespace plate
