#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fnlpde/grid.hpp"

namespace fnlpde {

/// Flat key-value configuration. Text form: `key = value` lines, `[section]`
/// headers prefixing the keys that follow with `section.`, `#` comments.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "<config>");
  static Config from_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// "key=value"
  void apply_override(std::string_view assignment);
  /// Keys of `other` win.
  void merge(const Config& other);

  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  /// Keys present in the config that no reader asked for.
  std::vector<std::string> unused_keys() const;

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

std::vector<std::string> preset_names();
/// Config text of a built-in preset; throws ConfigError for unknown names.
std::string preset_text(const std::string& name);
Config preset_config(const std::string& name);

enum ExitCode : int { kExitPass = 0, kExitCertification = 1, kExitSolver = 2, kExitConfig = 3 };

struct ScenarioResult {
  int exit_code = kExitPass;
  /// Single line; empty on success.
  std::string diagnostic;
  /// report.json contents (no wall-clock fields).
  std::string report_json;
  /// Primary solution history (empty slices on config errors).
  std::vector<Field> slices;
  std::vector<double> times;
};

/// Runs the configured solvers and checkers without touching the filesystem.
ScenarioResult execute_scenario(const Config& cfg);

/// history.csv: header `t,x,value`, one row per node and time, %.17g.
std::string history_csv(const ScenarioResult& result);

/// Executes and writes history.csv, report.json and run_meta.json to
/// `out_dir`. Returns the exit status.
ScenarioResult run_scenario(const Config& cfg, const std::filesystem::path& out_dir);

const char* library_version();

}  // namespace fnlpde
