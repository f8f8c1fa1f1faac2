// umac_sim: minimum-SNR-vs-K_a sweeps for unsourced random access schemes.
//
//   umac_sim --config configs/twostep_awgn_baseline.json --out result.csv
//            [--seed N] [--trials-scale F] [--strict]

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "umac/config.hpp"
#include "umac/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Unsourced multiple access simulator: minimum SNR for a target PUPE versus K_a"};
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  umac::RunOptions opt;
  bool print_config = false;
  app.add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "Output CSV path");
  app.add_option("--seed", seed, "Root seed (overrides the config)");
  app.add_option("--trials-scale", opt.trials_scale, "Multiplies every trial count")->check(CLI::PositiveNumber);
  app.add_flag("--strict", opt.strict, "Exit with status 2 if any K_a point is not found");
  app.add_flag("--quiet", opt.quiet, "Suppress progress and the summary table");
  app.add_flag("--print-config", print_config, "Print the normalised config and exit");
  CLI11_PARSE(app, argc, argv);

  umac::ExperimentConfig cfg;
  try {
    std::ifstream in(config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = umac::parse_config(ss.str());
    if (seed) cfg.seed = *seed;
  } catch (const umac::Error& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return umac::kExitConfig;
  }

  if (print_config) {
    std::cout << umac::serialize_config(cfg);
    return umac::kExitOk;
  }
  if (out_path.empty()) {
    std::cerr << "--out is required\n";
    return umac::kExitConfig;
  }
  try {
    return umac::run(cfg, out_path, opt);
  } catch (const umac::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return umac::kExitConfig;
  }
}
