#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fnlpde/errors.hpp"
#include "fnlpde/scenario.hpp"

namespace fnlpde {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    fail(ErrorCode::ConfigError, "key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) fail(ErrorCode::ConfigError, where + ": malformed section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ConfigError, where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) fail(ErrorCode::ConfigError, where + ": empty key");
    cfg.set(section.empty() ? key : section + "." + key, value);
  }
  return cfg;
}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot read config file '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    fail(ErrorCode::ConfigError, "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) fail(ErrorCode::ConfigError, "override with an empty key");
  set(key, trim(assignment.substr(eq + 1)));
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::ConfigError, "missing key '" + key + "'");
  used_.insert(key);
  return it->second;
}

std::string Config::str(const std::string& key) const { return raw(key); }

std::string Config::str(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double Config::num(const std::string& key) const { return parse_double(key, raw(key)); }

double Config::num(const std::string& key, double fallback) const {
  return has(key) ? num(key) : fallback;
}

std::int64_t Config::integer(const std::string& key) const {
  const std::string& text = raw(key);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE) {
    fail(ErrorCode::ConfigError, "key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::ConfigError, "key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  std::stringstream ss(raw(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

namespace {

struct Preset {
  const char* name;
  const char* text;
};

// Each preset is an ordinary config file.
constexpr Preset kPresets[] = {
    {"barenblatt-m2", R"(# Source-type solution of d_t u = d_xx(u^2) started at t = 1.
scenario = pme-forward

[grid]
x_min = -6
x_max = 6
dx = 0.01

[mesh]
t_start = 1
t_end = 2
steps = 200

[phi]
kind = power
exponent = 2

[kappa]
kind = constant
value = 1

[initial]
kind = barenblatt
C = 1

[pme]
boundary = dirichlet

[check]
rho = auto
tol = 1e-6
collar = 3
empirical_rho = true
empirical_rho_expected = 0.6667
empirical_rho_tol = 0.05

[exact]
kind = barenblatt
l1_max = 1e-2
)"},
    {"quadratic-hjb", R"(# Quadratic terminal data: curvature stays at q, v = q x^2/2 + (T - t) F(q).
scenario = full-certification

[grid]
x_min = -8
x_max = 8
dx = 0.01

[mesh]
t_start = 0
t_end = 1
steps = 100

[operator]
kind = impact

[impact]
a = -2
b = 1
c = 1
p1 = 1
p2 = 2
lambda = 1

[impact.sigma]
kind = constant
value = 1

[terminal]
kind = quadratic
q = 0.5

[check]
tau_fractions = 0, 0.05, 0.1, 0.2
inner_fraction = 0.5

[exact]
kind = quadratic
tol = 1e-6

[dual]
y_points = 201
discrepancy_max = 1e-3
involution_max = 1e-8

[mc]
paths = 10000
t0 = 0.9
x0 = 0.3
z_max = 3

[companion]
M = 0.3
M_prime = 0.6
)"},
    {"near-singular-bump", R"(# Gaussian bump scaled so that max lambda d_xx v(T) = 0.999.
scenario = full-certification

[grid]
x_min = -5
x_max = 5
dx = 0.01

[mesh]
t_start = 0
t_end = 1
steps = 100
grading = geometric
ratio = 0.95

[operator]
kind = impact

[impact]
a = -2
b = 1
c = 1
p1 = 1
p2 = 2
lambda = 1

[impact.sigma]
kind = constant
value = 1

[terminal]
kind = bump
peak_curvature = 0.999
width = 1

[check]
tau_fractions = 0, 0.05, 0.1, 0.2
inner_fraction = 0.5
expansion_tau_fraction = 0.1
expansion_factor = 10

[mc]
paths = 20000
t0 = 0.5
x0 = 0
singular_hit_max = 0

[companion]
M = 0.3
M_prime = 0.6
)"},
    {"deep-well-degenerate", R"(# Concave well with d_xx v(T) = -1000 at the center.
scenario = hjb-backward

[grid]
x_min = -2
x_max = 2
dx = 0.0005

[mesh]
t_start = 0
t_end = 1
steps = 100
grading = geometric
ratio = 0.95

[operator]
kind = impact

[impact]
a = -2
b = 1
c = 1
p1 = 1
p2 = 2
lambda = 1

[impact.sigma]
kind = constant
value = 5

[terminal]
kind = gaussian_well
depth = 1000
width = 0.002

[check]
tau_fractions = 0, 0.05, 0.1, 0.2
inner_fraction = 0.5
margin_expansion_tau_fraction = 0.1
margin_expansion_factor = 10
lower_bound_tau_fraction = 0.1
lower_bound_max = 100
)"},
    {"heat-mc", R"(# Linear phi: the backward heat equation, checked against paths.
scenario = monte-carlo

[grid]
x_min = -8
x_max = 8
dx = 0.01

[mesh]
t_start = 0
t_end = 1
steps = 1000

[operator]
kind = separable

[phi]
kind = linear
slope = 1

[kappa]
kind = constant
value = 0.5

[terminal]
kind = gaussian
amplitude = 1
width = 1

[mc]
paths = 100000
substeps = 1
t0 = 0.75
x0 = 0.5
z_max = 3

[exact]
kind = heat
tol = 1e-4
)"},
};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::string preset_text(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name == p.name) return p.text;
  }
  fail(ErrorCode::ConfigError, "unknown preset '" + name + "'");
}

Config preset_config(const std::string& name) { return Config::parse(preset_text(name), name); }

}  // namespace fnlpde
