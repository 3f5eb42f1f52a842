// plate_lab: runs the plate experiments from a JSON config.
//
//   plate_lab <subcommand> --config cfg.json [--out dir] [--format csv,json,svg]
//             [--seed n] [--threads n]
//
// Exit status: 0 all checks passed, 1 a check or the experiment failed,
// 2 bad configuration.

#include <iostream>

#include <CLI11.hpp>

#include "plate/config.hpp"
#include "plate/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-phase plate with boundary feedback: simulation, spectra, resolvents and Carleman checks"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> formats;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  for (const auto& name : plate::subcommand_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    sub->add_option("--format", formats, "output formats: csv,json,svg")->delimiter(',');
    sub->add_option("--seed", seed, "random seed (overrides seed)");
    sub->add_option("--threads", threads, "worker threads for scans")->check(CLI::Range(1u, 256u));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  plate::RunOptions options;
  options.threads = threads;
  if (chosen->count("--out")) options.out_dir = out_dir;
  if (chosen->count("--format")) options.formats = formats;
  if (chosen->count("--seed")) options.seed = seed;

  nlohmann::json raw;
  try {
    raw = plate::load_json_file(config_path);
  } catch (const plate::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const plate::RunResult result = plate::run_subcommand(chosen->get_name(), raw, options);
  if (result.exit_code == 2)
    std::cerr << "config error: " << result.message << "\n";
  else if (result.exit_code == 1)
    std::cerr << "FAILED " << result.message << "\n";
  else
    std::cout << result.message << "\n";
  for (const auto& f : result.files) std::cout << "  wrote " << f.string() << "\n";
  return result.exit_code;
}
