#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "plate/experiments.hpp"

using namespace plate;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("plate_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json small(double a, double b) {
  return json{{"mesh", {{"L", 1.0}, {"x0", 0.5}, {"c1", 1.0}, {"c2", 2.0}, {"N", 41}}},
              {"damping", {{"a", a}, {"b", b}}},
              {"evolution", {{"dt", 1e-3}, {"T", 1.0}, {"output_stride", 10}}},
              {"scan", {{"re_range", {-20.0, 20.0}}, {"im_range", {-1.0, 1.0}}, {"resolution", {41, 5}}}},
              {"resolvent", {{"samples", 5}}},
              {"carleman", {{"grid", {32, 32}}, {"lambda_sweep", {1.0, 2.0}}, {"bracket_samples", 50}}}};
}

RunOptions into(const fs::path& dir) {
  RunOptions o;
  o.out_dir = dir;
  return o;
}

}  // namespace

TEST_CASE("undamped simulate conserves energy and writes its artifacts") {
  const fs::path dir = scratch("undamped");
  const RunResult r = run_subcommand("simulate", small(0.0, 0.0), into(dir));
  CHECK(r.exit_code == 0);
  CHECK(r.summary["checks"]["energy_conservation"] == true);
  CHECK(r.summary["results"]["energy_drift"].get<double>() <= 1e-10);
  CHECK(fs::exists(dir / "simulate.csv"));
  CHECK(fs::exists(dir / "simulate.json"));
  const json written = json::parse(slurp(dir / "simulate.json"));
  CHECK(written["subcommand"] == "simulate");
  CHECK(written["pass"] == true);
  CHECK(written["config"]["mesh"]["N"] == 41);
  fs::remove_all(dir);
}

TEST_CASE("damped spectrum has a negative abscissa") {
  const fs::path dir = scratch("spectrum");
  const RunResult r = run_subcommand("spectrum", small(1.0, 1.0), into(dir));
  CHECK(r.exit_code == 0);
  CHECK(r.summary["results"]["spectral_abscissa"].get<double>() < 0.0);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  json no_mesh = small(1.0, 1.0);
  no_mesh.erase("mesh");
  const RunResult missing = run_subcommand("simulate", no_mesh, into(dir));
  CHECK(missing.exit_code == 2);
  CHECK(missing.message.find("mesh.N") != std::string::npos);

  json misaligned = small(1.0, 1.0);
  misaligned["mesh"]["x0"] = 0.51;
  const RunResult snap = run_subcommand("spectrum", misaligned, into(dir));
  CHECK(snap.exit_code == 2);
  CHECK(snap.message.find("mesh.x0") != std::string::npos);
  CHECK(snap.message.find("0.5") != std::string::npos);

  CHECK(run_subcommand("trace-check", small(0.0, 0.0), into(dir)).exit_code == 2);
  CHECK(run_subcommand("no-such-command", small(1.0, 1.0), into(dir)).exit_code == 2);

  json saddle = small(0.0, 0.0);
  saddle["carleman"]["psi"] = {{2, 0, 1.0}, {0, 2, -1.0}};
  saddle["carleman"]["region"] = {-1.0, 1.0, -1.0, 1.0};
  const RunResult failed = run_subcommand("subellipticity", saddle, into(dir));
  CHECK(failed.exit_code == 1);
  CHECK(failed.summary["checks"]["subelliptic"] == false);
  CHECK(fs::exists(dir / "subellipticity.json"));

  json bad_flow = small(0.0, 0.0);
  bad_flow["carleman"]["flow"] = {{"arcs", {{{"center", {0.0, 0.0}}, {"direction", {0.0, 0.95}}}}}};
  CHECK(run_subcommand("weights", bad_flow, into(dir)).exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("every subcommand is deterministic") {
  // Same output directory both times: the resolved config records it.
  const fs::path dir = scratch("det");
  for (const std::string& name : subcommand_names()) {
    const RunResult a = run_subcommand(name, small(1.0, 1.0), into(dir / name));
    CHECK_MESSAGE(a.exit_code == 0, std::string(name + ": " + a.message));
    std::vector<std::string> first;
    for (const fs::path& f : a.files) first.push_back(slurp(f));
    RunOptions opt = into(dir / name);
    opt.threads = 3;
    const RunResult b = run_subcommand(name, small(1.0, 1.0), opt);
    REQUIRE(a.files.size() == b.files.size());
    for (size_t i = 0; i < a.files.size(); ++i) {
      CHECK(a.files[i] == b.files[i]);
      CHECK_MESSAGE(first[i] == slurp(b.files[i]), a.files[i].string());
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("seed override changes the random data") {
  const fs::path dir = scratch("seed");
  RunOptions a = into(dir / "a"), b = into(dir / "b");
  b.seed = 43;
  run_subcommand("simulate", small(1.0, 1.0), a);
  run_subcommand("simulate", small(1.0, 1.0), b);
  CHECK(slurp(dir / "a" / "simulate.csv") != slurp(dir / "b" / "simulate.csv"));
  fs::remove_all(dir);
}
