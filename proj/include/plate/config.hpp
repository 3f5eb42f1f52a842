#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "plate/carleman.hpp"
#include "plate/flow.hpp"
#include "plate/generator.hpp"

namespace plate {

// Schema violation; `path` names the offending field, e.g. "mesh.N".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct MeshConfig {
  double L = 1.0;
  double x0 = 0.5;
  double c1 = 1.0;
  double c2 = 1.0;
  Index N = 0;
};

struct DampingConfig {
  double a = 0.0;
  double b = 0.0;
  EndCondition end = EndCondition::Feedback;
};

struct EvolutionConfig {
  // 0 selects h²/4 / max(c1, c2).
  double dt = 0.0;
  double T = 1.0;
  int k = 1;
  Index output_stride = 1;
  Index initial_modes = 3;
};

struct ScanConfig {
  double re_lo = -50.0, re_hi = 50.0;
  double im_lo = -1.0, im_hi = 1.0;
  Index n_re = 101, n_im = 21;
  double cutoff = 1.0;
};

struct ResolventConfig {
  Index samples = 20;
  double re_lo = 1.0, re_hi = 50.0;
  double im_max = 1e-2;
  Index data_modes = 8;
};

struct RegionConfig {
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  Index nx = 128, ny = 128;

  Grid2D grid() const { return build_grid(x_lo, x_hi, y_lo, y_hi, nx, ny); }
};

using Terms = std::vector<std::tuple<int, int, double>>;

struct FlowConfig {
  Terms psi = {{0, 2, 1.0}, {2, 0, -1.0}, {4, 0, 0.1}, {0, 4, 0.1}};
  RegionConfig region{-1.0, 1.0, -1.0, 1.0, 41, 41};
  FlowSpec spec{{Arc{Vec2(0.0, 0.0), Vec2(0.0, 0.5)}}, 0.1, 1e-3};
};

struct CarlemanConfig {
  Terms psi = {{1, 0, 1.0}};
  double lambda_c = 1.0;
  Side gamma = Side::Left;
  std::vector<double> h_values = {0.2, 0.1, 0.05, 0.025};
  RegionConfig region;
  ManufacturedField bump;
  Index n_xi = 8;
  std::vector<double> lambda_sweep = {1.0, 2.0, 4.0, 8.0};
  Index bracket_samples = 1000;
  FlowConfig flow;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats = {"csv", "json"};
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::optional<MeshConfig> mesh;
  DampingConfig damping;
  EvolutionConfig evolution;
  ScanConfig scan;
  ResolventConfig resolvent;
  CarlemanConfig carleman;
  OutputConfig output;

  // Throws ConfigError("mesh.N", ...) when the mesh section is absent.
  const MeshConfig& require_mesh() const;
};

// Validates every present section; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& raw);

// The fully resolved configuration, defaults included.
nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json load_json_file(const std::string& path);

}  // namespace plate
