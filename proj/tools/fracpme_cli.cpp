// Command-line driver: runs experiment configs or named presets, writes
// report artifacts, and prints one line per check. Exit code 0 means every
// check passed, 1 means at least one check failed, 2 means a config or
// runtime error. Output contains no timestamps, so reruns are byte-identical.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracpme/experiment.hpp"

namespace {

std::vector<fracpme::ExperimentConfig> load_configs(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file \"" + path + "\"");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config error: " + std::string(e.what()));
  }
  std::vector<fracpme::ExperimentConfig> configs;
  if (j.is_array())
    for (const nlohmann::json& item : j) configs.push_back(fracpme::parse_experiment(item));
  else
    configs.push_back(fracpme::parse_experiment(j));
  return configs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for the fractional porous medium equation"};
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed_override = 0;
  int threads = 1;
  bool list_presets = false;
  app.add_option("--config", config_path, "experiment config JSON (object or array of objects)");
  app.add_option("--preset", preset, "named preset batch from the catalog");
  app.add_option("--out-dir", out_dir, "report directory (default $FRACPME_OUT_DIR, then ./out)");
  CLI::Option* seed_opt =
      app.add_option("--seed-override", seed_override, "replace every configured ensemble seed");
  app.add_option("--threads", threads, "worker threads for independent runs")
      ->check(CLI::PositiveNumber);
  app.add_flag("--list-presets", list_presets, "print the preset catalog and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    if (list_presets) {
      for (const fracpme::PresetInfo& p : fracpme::preset_catalog())
        std::printf("%-28s %s\n", p.name.c_str(), p.summary.c_str());
      return 0;
    }
    std::vector<fracpme::ExperimentConfig> configs;
    if (!preset.empty())
      configs = fracpme::make_preset(preset);
    else if (!config_path.empty())
      configs = load_configs(config_path);
    else
      throw std::invalid_argument("provide --config, --preset, or --list-presets");
    if (seed_opt->count() > 0) {
      for (fracpme::ExperimentConfig& cfg : configs) {
        cfg.initial.ensemble.seed = seed_override;
        cfg.ensemble.seed = seed_override;
        cfg.oracle_seed = seed_override;
      }
    }
    if (out_dir.empty()) {
      const char* env = std::getenv("FRACPME_OUT_DIR");
      out_dir = env != nullptr && *env != '\0' ? env : "out";
    }

    const std::vector<fracpme::RunResult> results =
        fracpme::run_batch(configs, out_dir, threads);
    int exit_code = 0;
    int checks = 0;
    int failures = 0;
    for (const fracpme::RunResult& r : results) {
      if (!r.error.empty()) {
        std::printf("[ERROR] %s: %s\n", r.name.c_str(), r.error.c_str());
        exit_code = 2;
        continue;
      }
      for (const fracpme::CheckLine& c : r.checks) {
        std::printf("[%s] %s.%s: %s\n", c.pass ? "PASS" : "FAIL", r.name.c_str(),
                    c.name.c_str(), c.detail.c_str());
        ++checks;
        if (!c.pass) ++failures;
      }
      if (!r.pass && exit_code == 0) exit_code = 1;
    }
    std::printf("%zu runs, %d checks, %d failures\n", results.size(), checks, failures);
    return exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
