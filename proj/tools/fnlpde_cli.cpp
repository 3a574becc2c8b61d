// Command-line entry point: runs a scenario config or a built-in preset.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fnlpde/errors.hpp"
#include "fnlpde/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Solver and estimate-certification runs for fully nonlinear parabolic equations"};
  app.set_version_flag("--version", fnlpde::library_version());
  app.require_subcommand(1);

  std::string config_path, preset, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  CLI::App* run = app.add_subcommand("run", "Run a scenario and write history.csv, report.json, run_meta.json");
  run->add_option("config", config_path, "Scenario config file (keys override the preset)");
  run->add_option("--preset", preset, "Built-in preset name");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--override", overrides, "key=value, repeatable")->take_all();

  std::string shown;
  CLI::App* presets = app.add_subcommand("presets", "List the built-in presets");
  CLI::App* show = app.add_subcommand("show-preset", "Print a preset's config text");
  show->add_option("name", shown, "Preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fnlpde::kExitConfig;
  }

  try {
    if (*presets) {
      for (const auto& n : fnlpde::preset_names()) std::cout << n << "\n";
      return 0;
    }
    if (*show) {
      std::cout << fnlpde::preset_text(shown);
      return 0;
    }
    if (config_path.empty() && preset.empty()) {
      std::cerr << "config error: give a config file or --preset\n";
      return fnlpde::kExitConfig;
    }
    fnlpde::Config cfg;
    if (!preset.empty()) cfg = fnlpde::preset_config(preset);
    if (!config_path.empty()) cfg.merge(fnlpde::Config::from_file(config_path));
    for (const auto& kv : overrides) cfg.apply_override(kv);
    if (seed) cfg.set("seed", std::to_string(*seed));

    const fnlpde::ScenarioResult res = fnlpde::run_scenario(cfg, out_dir);
    if (!res.diagnostic.empty()) std::cerr << res.diagnostic << "\n";
    return res.exit_code;
  } catch (const fnlpde::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fnlpde::kExitConfig;
  }
}
