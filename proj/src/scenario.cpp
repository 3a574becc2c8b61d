#include "fnlpde/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <optional>

#include "fnlpde/errors.hpp"
#include "fnlpde/estimates.hpp"
#include "fnlpde/hjb.hpp"
#include "fnlpde/legendre.hpp"
#include "fnlpde/montecarlo.hpp"
#include "fnlpde/pme.hpp"
#include "json.hpp"

#ifndef FNLPDE_VERSION
#define FNLPDE_VERSION "0.0.0"
#endif

namespace fnlpde {

const char* library_version() { return FNLPDE_VERSION; }

namespace {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;
constexpr std::size_t kMaxListed = 200;

std::optional<double> opt_num(const Config& cfg, const std::string& key) {
  if (!cfg.has(key)) return std::nullopt;
  return cfg.num(key);
}

std::size_t positive_count(const Config& cfg, const std::string& key, std::int64_t fallback) {
  const std::int64_t v = cfg.integer(key, fallback);
  require(v >= 1, ErrorCode::ConfigError, "key '" + key + "' must be a positive integer");
  return static_cast<std::size_t>(v);
}

class Certifications {
 public:
  void add(const std::string& name, bool passed, json value, json threshold,
           const std::string& detail = {}) {
    json entry{{"name", name}, {"passed", passed}, {"value", std::move(value)},
               {"threshold", std::move(threshold)}};
    if (!detail.empty()) entry["detail"] = detail;
    list_.push_back(std::move(entry));
    all_ = all_ && passed;
  }
  void fail_with(const std::string& name, const std::string& detail) {
    add(name, false, nullptr, nullptr, detail);
  }
  bool all_passed() const { return all_; }
  const json& list() const { return list_; }

 private:
  json list_ = json::array();
  bool all_ = true;
};

// ---- model and discretization builders ----

Grid1D make_grid(const Config& cfg) {
  const double lo = cfg.num("grid.x_min"), hi = cfg.num("grid.x_max");
  if (cfg.has("grid.n")) return Grid1D(lo, hi, positive_count(cfg, "grid.n", 3));
  return Grid1D::with_spacing(lo, hi, cfg.num("grid.dx"));
}

TimeMesh make_mesh(const Config& cfg) {
  const double t0 = cfg.num("mesh.t_start"), t1 = cfg.num("mesh.t_end");
  const std::size_t steps = positive_count(cfg, "mesh.steps", 1);
  const std::string grading = cfg.str("mesh.grading", "uniform");
  if (grading == "uniform") return TimeMesh::uniform(t0, t1, steps);
  if (grading == "geometric") {
    return TimeMesh::geometric_toward_end(t0, t1, steps, cfg.num("mesh.ratio"));
  }
  fail(ErrorCode::ConfigError, "key 'mesh.grading': unknown grading '" + grading + "'");
}

PhiModel make_phi(const Config& cfg) {
  const std::string kind = cfg.str("phi.kind");
  if (kind == "power") return PhiModel::power(cfg.num("phi.exponent"));
  if (kind == "linear") return PhiModel::linear(cfg.num("phi.slope", 1.0));
  fail(ErrorCode::ConfigError, "key 'phi.kind': unknown model '" + kind + "'");
}

KappaModel make_kappa(const Config& cfg) {
  const std::string kind = cfg.str("kappa.kind");
  if (kind == "constant") return KappaModel::constant(cfg.num("kappa.value"));
  if (kind == "exp_sin") {
    return KappaModel::exp_sin(cfg.num("kappa.alpha"), cfg.num("kappa.beta"), cfg.num("kappa.L"));
  }
  fail(ErrorCode::ConfigError, "key 'kappa.kind': unknown model '" + kind + "'");
}

ImpactParams make_impact(const Config& cfg) {
  ImpactParams p;
  p.a = cfg.num("impact.a");
  p.b = cfg.num("impact.b");
  p.c = cfg.num("impact.c");
  p.p1 = cfg.num("impact.p1");
  p.p2 = cfg.num("impact.p2");
  p.lambda = cfg.num("impact.lambda");
  const std::string kind = cfg.str("impact.sigma.kind");
  if (kind == "constant") {
    p.set_sigma_constant(cfg.num("impact.sigma.value"));
  } else if (kind == "local_sin") {
    p.set_sigma_local_sin(cfg.num("impact.sigma.value"), cfg.num("impact.sigma.beta"));
  } else {
    fail(ErrorCode::ConfigError, "key 'impact.sigma.kind': unknown model '" + kind + "'");
  }
  return p;
}

SampleBox sample_box(const Grid1D& g, const TimeMesh& m) {
  SampleBox box;
  box.t_min = m.t_start();
  box.t_max = m.t_end();
  box.x_min = g.x_min();
  box.x_max = g.x_max();
  box.nt = 11;
  box.nx = 101;
  return box;
}

json validation_json(const ValidationReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json e{{"name", c.name}, {"passed", c.passed}};
    if (!c.detail.empty()) e["detail"] = c.detail;
    checks.push_back(std::move(e));
  }
  return json{{"passed", rep.all_passed()},
              {"regularity_applicable", rep.regularity_applicable},
              {"checks", std::move(checks)},
              {"notes", rep.notes}};
}

void require_valid(const ValidationReport& rep, const std::string& what) {
  for (const auto& c : rep.checks) {
    if (!c.passed) {
      fail(ErrorCode::ConfigError,
           what + " fails validation: " + c.name + (c.detail.empty() ? "" : " (" + c.detail + ")"));
    }
  }
}

json violations_json(const std::vector<Violation>& v) {
  json arr = json::array();
  for (std::size_t i = 0; i < std::min(v.size(), kMaxListed); ++i) {
    arr.push_back(json{{"t", v[i].t}, {"x", v[i].x}, {"magnitude", v[i].magnitude}});
  }
  return arr;
}

json solver_json(const SolveDiagnostics& d) {
  int max_iter = 0;
  double max_res = 0.0;
  for (int it : d.newton_iterations) max_iter = std::max(max_iter, it);
  for (double r : d.residuals) max_res = std::max(max_res, r);
  return json{{"direction", d.backward ? "backward" : "forward"},
              {"steps", d.newton_iterations.size()},
              {"max_newton_iterations", max_iter},
              {"max_residual", max_res},
              {"warnings", d.warnings}};
}

json monotonicity_json(const MonotonicityReport& r) {
  return json{{"rho_used", r.rho_used},
              {"theta", r.theta},
              {"tolerance", r.tolerance},
              {"min_increment", r.min_increment},
              {"collar_excluded", r.collar_excluded},
              {"violation_count", r.violations.size()},
              {"violations", violations_json(r.violations)}};
}

json comparison_json(const ComparisonReport& r) {
  return json{{"tolerance", r.tolerance},
              {"min_difference", r.min_difference},
              {"crossing_count", r.crossings.size()},
              {"crossings", violations_json(r.crossings)}};
}

json lower_bound_json(const LowerBoundReport& r) {
  return json{{"M", r.M},           {"M_prime", r.M_prime},       {"initial_min", r.initial_min},
              {"overall_min", r.overall_min}, {"premise", r.premise}, {"conclusion", r.conclusion}};
}

json epsilon_json(const EpsilonReport& r, const std::vector<double>& fractions) {
  return json{{"lambda", r.lambda},
              {"inner_fraction", r.inner_fraction},
              {"tau_fractions", fractions},
              {"tau_list", r.tau_list},
              {"upper_margin", r.upper_margin},
              {"lower_bound", r.lower_bound}};
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

// ---- forward (porous-medium type) scenario ----

struct ForwardPlan {
  std::optional<PmeConfig> pme;
  std::optional<double> rho;  // empty: certified value
  MonotonicityOptions mono;
  bool empirical = false;
  std::optional<double> empirical_expected;
  double empirical_tol = 0.05;
  std::string exact_kind;
  double barenblatt_C = 1.0;
  std::optional<double> l1_max;
  std::optional<double> comparison_scale;
  double comparison_tol = 1e-8;
  std::optional<double> lb_M, lb_M_prime;
  double inner_fraction = 0.5;
  json validation;
};

ForwardPlan plan_forward(const Config& cfg) {
  const Grid1D grid = make_grid(cfg);
  const TimeMesh mesh = make_mesh(cfg);
  const PhiModel phi = make_phi(cfg);
  const KappaModel kappa = make_kappa(cfg);

  const std::string init = cfg.str("initial.kind");
  Field u0(grid, std::vector<double>(grid.size(), 0.0));
  double C = 1.0;
  if (init == "barenblatt") {
    require(phi.kind == PhiModel::Kind::power, ErrorCode::ConfigError,
            "initial.kind = barenblatt needs phi.kind = power");
    C = cfg.num("initial.C");
    u0 = Field::sample(grid, [&](double x) { return barenblatt_exact(phi.exponent, C, mesh.t_start(), x); });
  } else if (init == "gaussian") {
    const double a = cfg.num("initial.amplitude"), w = cfg.num("initial.width");
    const double c = cfg.num("initial.center", 0.0);
    u0 = Field::sample(grid, [&](double x) { return a * std::exp(-(x - c) * (x - c) / (2.0 * w * w)); });
  } else if (init == "constant") {
    const double v = cfg.num("initial.value");
    u0 = Field::sample(grid, [&](double) { return v; });
  } else {
    fail(ErrorCode::ConfigError, "key 'initial.kind': unknown data '" + init + "'");
  }

  const std::string bc = cfg.str("pme.boundary", "dirichlet");
  PmeBoundary boundary = PmeBoundary::dirichlet_zero;
  if (bc == "neumann") {
    boundary = PmeBoundary::neumann_zero;
  } else if (bc != "dirichlet") {
    fail(ErrorCode::ConfigError, "key 'pme.boundary': unknown boundary '" + bc + "'");
  }

  ForwardPlan plan;
  plan.pme = PmeConfig{phi, kappa, grid, mesh, u0, boundary};
  plan.pme->newton_tol = cfg.num("pme.newton_tol", plan.pme->newton_tol);

  const double u_max = std::max(1e-12, *std::max_element(u0.values.begin(), u0.values.end()));
  const ValidationReport vphi = validate_phi(phi, u_max);
  const ValidationReport vkappa = validate_kappa(kappa, sample_box(grid, mesh));
  plan.validation = json{{"phi", validation_json(vphi)}, {"kappa", validation_json(vkappa)}};
  require_valid(vkappa, "kappa model");
  require_valid(vphi, "phi model");

  const std::string rho = cfg.str("check.rho", "auto");
  if (rho != "auto") plan.rho = cfg.num("check.rho");
  plan.mono.tol = cfg.num("check.tol", plan.mono.tol);
  plan.mono.collar = cfg.num("check.collar", plan.mono.collar);
  plan.mono.time_origin = cfg.num("check.time_origin", plan.mono.time_origin);
  plan.empirical = cfg.flag("check.empirical_rho", false);
  plan.empirical_expected = opt_num(cfg, "check.empirical_rho_expected");
  plan.empirical_tol = cfg.num("check.empirical_rho_tol", plan.empirical_tol);
  plan.exact_kind = cfg.str("exact.kind", "none");
  if (plan.exact_kind == "barenblatt") {
    require(init == "barenblatt", ErrorCode::ConfigError,
            "exact.kind = barenblatt needs initial.kind = barenblatt");
    plan.barenblatt_C = C;
    plan.l1_max = opt_num(cfg, "exact.l1_max");
  } else if (plan.exact_kind != "none") {
    fail(ErrorCode::ConfigError, "key 'exact.kind': '" + plan.exact_kind + "' is not available for pme-forward");
  }
  plan.comparison_scale = opt_num(cfg, "comparison.scale");
  if (plan.comparison_scale) {
    require(*plan.comparison_scale >= 0.0 && *plan.comparison_scale <= 1.0, ErrorCode::ConfigError,
            "key 'comparison.scale' must lie in [0, 1]");
  }
  plan.comparison_tol = cfg.num("comparison.tol", plan.comparison_tol);
  plan.lb_M = opt_num(cfg, "lower_bound.M");
  if (plan.lb_M) plan.lb_M_prime = cfg.num("lower_bound.M_prime");
  plan.inner_fraction = cfg.num("check.inner_fraction", plan.inner_fraction);
  return plan;
}

void run_forward(const ForwardPlan& plan, json& report, Certifications& certs, ScenarioResult& res) {
  const History h = pme_solve(*plan.pme);
  res.slices = h.slices;
  res.times = h.mesh.times();
  report["solver"] = solver_json(h.meta);

  const PhiModel& phi = plan.pme->phi;
  const KappaModel& kappa = plan.pme->kappa;
  try {
    const double certified = certified_rho(h, phi, kappa, plan.mono.time_origin);
    const double rho = plan.rho.value_or(certified);
    const MonotonicityReport mono = check_monotonicity(h, phi, kappa, rho, plan.mono);
    json m = monotonicity_json(mono);
    m["certified_rho"] = certified;
    report["monotonicity"] = m;
    certs.add("monotonicity", mono.passed(), mono.violations.size(), 0);
    if (plan.empirical) {
      const double emp = empirical_min_rho(h, phi, kappa, plan.mono);
      report["empirical_min_rho"] = emp;
      certs.add("empirical_rho_below_certified", emp <= certified, emp, certified);
      if (plan.empirical_expected) {
        certs.add("empirical_rho_matches_expected",
                  std::abs(emp - *plan.empirical_expected) <= plan.empirical_tol, emp,
                  json{{"expected", *plan.empirical_expected}, {"tol", plan.empirical_tol}});
      }
    }
  } catch (const Error& e) {
    certs.fail_with("monotonicity", e.what());
  }

  if (plan.exact_kind == "barenblatt") {
    const Grid1D& g = h.grid();
    std::vector<double> err(g.size());
    const double t = h.mesh.t_end();
    for (std::size_t i = 0; i < g.size(); ++i) {
      err[i] = std::abs(h.slices.back().values[i] -
                        barenblatt_exact(phi.exponent, plan.barenblatt_C, t, g.x(i)));
    }
    const double l1 = trapezoid(g, err);
    report["exact"] = json{{"kind", "barenblatt"}, {"t", t}, {"l1_error", l1}};
    if (plan.l1_max) certs.add("exact_l1", l1 < *plan.l1_max, l1, *plan.l1_max);
  }

  if (plan.comparison_scale) {
    try {
      PmeConfig lower = *plan.pme;
      for (double& v : lower.initial.values) v *= *plan.comparison_scale;
      const History hb = pme_solve(lower);
      const ComparisonReport cmp = check_comparison(h, hb, plan.comparison_tol);
      json c = comparison_json(cmp);
      c["scale"] = *plan.comparison_scale;
      report["comparison"] = c;
      certs.add("comparison", cmp.passed(), cmp.min_difference, -plan.comparison_tol);
    } catch (const Error& e) {
      certs.fail_with("comparison", e.what());
    }
  }

  if (plan.lb_M) {
    const LowerBoundReport lb = lower_bound_propagation(h, *plan.lb_M, *plan.lb_M_prime, plan.inner_fraction);
    report["lower_bound"] = lower_bound_json(lb);
    certs.add("lower_bound_propagation", lb.passed(), lb.overall_min, *plan.lb_M);
  }
}

// ---- backward (pricing) scenarios ----

struct BackwardPlan {
  bool bounds = false, dual = false, mc = false, companion = false;
  std::optional<HjbConfig> hjb;
  KappaModel kappa;  // path coefficients
  PhiModel phi;
  bool constant_coefficients = false;
  std::string exact_kind;
  double exact_param = 0.0;  // q, constant value
  std::optional<double> exact_tol;
  double heat_amplitude = 0.0, heat_width = 0.0, heat_diffusion = 0.0;

  std::vector<double> tau_fractions;
  double inner_fraction = 0.5;
  std::optional<double> expansion_tau, expansion_factor;
  std::optional<double> margin_tau, margin_factor;
  std::optional<double> lb_tau, lb_max;

  std::size_t y_points = 201;
  double y_fraction = 0.9;
  std::optional<double> discrepancy_max, involution_max, equation_max;

  MCConfig mc_cfg;
  std::size_t seeds = 1;
  std::optional<double> z_max, singular_hit_max;
  std::size_t min_pass = 1;

  double M = 0.3, M_prime = 0.6;
  json validation;
};

std::size_t tau_index(const std::vector<double>& fractions, double f) {
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (std::abs(fractions[i] - f) < 1e-12) return i;
  }
  fail(ErrorCode::ConfigError, "tau fraction " + std::to_string(f) + " is not in check.tau_fractions");
}

BackwardPlan plan_backward(const Config& cfg, const std::string& scenario) {
  BackwardPlan plan;
  plan.bounds = scenario == "hjb-backward" || scenario == "full-certification";
  plan.dual = scenario == "dual-legendre" || scenario == "full-certification";
  plan.mc = scenario == "monte-carlo" || scenario == "full-certification";
  plan.companion = scenario == "full-certification";

  const Grid1D grid = make_grid(cfg);
  const TimeMesh mesh = make_mesh(cfg);
  const SampleBox box = sample_box(grid, mesh);

  const std::string op_kind = cfg.str("operator.kind");
  HjbOperator op;
  if (op_kind == "impact") {
    const ImpactParams p = make_impact(cfg);
    const ValidationReport v = validate_impact_params(p, box);
    plan.validation = json{{"impact", validation_json(v)}};
    require_valid(v, "impact parameters");
    op = HjbOperator::impact(p);
    plan.kappa = impact_kappa_model(p, box);
    plan.phi = impact_phi_model(p);
    plan.constant_coefficients = p.sigma_name == "constant";
  } else if (op_kind == "separable") {
    plan.phi = make_phi(cfg);
    plan.kappa = make_kappa(cfg);
    require(plan.phi.signed_domain, ErrorCode::ConfigError,
            "operator.kind = separable needs a signed phi (phi.kind = linear)");
    const ValidationReport v = validate_kappa(plan.kappa, box);
    plan.validation = json{{"kappa", validation_json(v)}};
    require_valid(v, "kappa model");
    op = HjbOperator::separable(plan.kappa, plan.phi);
    plan.constant_coefficients = cfg.str("kappa.kind") == "constant";
  } else {
    fail(ErrorCode::ConfigError, "key 'operator.kind': unknown operator '" + op_kind + "'");
  }
  const double lambda = op.lambda;

  const std::string term = cfg.str("terminal.kind");
  Field vT(grid, std::vector<double>(grid.size(), 0.0));
  if (term == "quadratic") {
    const double q = cfg.num("terminal.q");
    vT = Field::sample(grid, [&](double x) { return 0.5 * q * x * x; });
    plan.exact_param = q;
  } else if (term == "constant") {
    const double c = cfg.num("terminal.value");
    vT = Field::sample(grid, [&](double) { return c; });
    plan.exact_param = c;
  } else if (term == "gaussian") {
    const double a = cfg.num("terminal.amplitude"), w = cfg.num("terminal.width");
    vT = Field::sample(grid, [&](double x) { return a * std::exp(-x * x / (2.0 * w * w)); });
    plan.heat_amplitude = a;
    plan.heat_width = w;
  } else if (term == "bump") {
    // Scaled so the largest discrete lambda d_xx v equals peak_curvature.
    const double peak = cfg.num("terminal.peak_curvature"), w = cfg.num("terminal.width");
    const Field base = Field::sample(grid, [&](double x) { return std::exp(-x * x / (2.0 * w * w)); });
    const Field d2 = second_difference(base);
    const double top = *std::max_element(d2.values.begin() + 1, d2.values.end() - 1);
    const double amp = peak / ((lambda > 0.0 ? lambda : 1.0) * top);
    vT = Field::sample(grid, [&](double x) { return amp * std::exp(-x * x / (2.0 * w * w)); });
  } else if (term == "gaussian_well") {
    // d_xx v is a Gaussian of depth `depth` at the central node.
    const double depth = cfg.num("terminal.depth"), w = cfg.num("terminal.width");
    auto profile = [w](double x) {
      return -(x * w * std::sqrt(std::numbers::pi / 2.0) * std::erf(x / (std::sqrt(2.0) * w)) +
               w * w * std::exp(-x * x / (2.0 * w * w)));
    };
    const Field base = Field::sample(grid, profile);
    const Field d2 = second_difference(base);
    std::size_t center = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (std::abs(grid.x(i)) < std::abs(grid.x(center))) center = i;
    }
    const double amp = depth / -d2.values[center];
    vT = Field::sample(grid, [&](double x) { return amp * profile(x); });
  } else {
    fail(ErrorCode::ConfigError, "key 'terminal.kind': unknown data '" + term + "'");
  }

  const std::string bc = cfg.str("hjb.boundary", "linear");
  HjbBoundary boundary = HjbBoundary::linear_extrapolation;
  if (bc == "dirichlet") {
    boundary = HjbBoundary::dirichlet_frozen;
  } else if (bc != "linear") {
    fail(ErrorCode::ConfigError, "key 'hjb.boundary': unknown boundary '" + bc + "'");
  }
  plan.hjb = HjbConfig{op, grid, mesh, vT, boundary};
  plan.hjb->newton_tol = cfg.num("hjb.newton_tol", plan.hjb->newton_tol);
  plan.hjb->barrier_gap = cfg.num("hjb.barrier_gap", plan.hjb->barrier_gap);

  plan.exact_kind = cfg.str("exact.kind", "none");
  plan.exact_tol = opt_num(cfg, "exact.tol");
  if (plan.exact_kind == "quadratic" || plan.exact_kind == "constant") {
    require(term == plan.exact_kind, ErrorCode::ConfigError,
            "exact.kind = " + plan.exact_kind + " needs terminal.kind = " + plan.exact_kind);
    require(plan.exact_kind == "constant" || plan.constant_coefficients, ErrorCode::ConfigError,
            "exact.kind = quadratic needs constant coefficients");
  } else if (plan.exact_kind == "heat") {
    require(op_kind == "separable" && plan.constant_coefficients && term == "gaussian",
            ErrorCode::ConfigError,
            "exact.kind = heat needs a separable operator with constant kappa and gaussian terminal data");
    plan.heat_diffusion = 2.0 * plan.kappa(0.0, 0.0) * plan.phi.dphi(0.0);
  } else if (plan.exact_kind != "none") {
    fail(ErrorCode::ConfigError, "key 'exact.kind': unknown reference '" + plan.exact_kind + "'");
  }

  if (plan.bounds || plan.companion) {
    plan.tau_fractions = cfg.list("check.tau_fractions", {0.0, 0.05, 0.1, 0.2});
    plan.inner_fraction = cfg.num("check.inner_fraction", plan.inner_fraction);
    plan.expansion_factor = opt_num(cfg, "check.expansion_factor");
    if (plan.expansion_factor) plan.expansion_tau = cfg.num("check.expansion_tau_fraction");
    plan.margin_factor = opt_num(cfg, "check.margin_expansion_factor");
    if (plan.margin_factor) plan.margin_tau = cfg.num("check.margin_expansion_tau_fraction");
    plan.lb_max = opt_num(cfg, "check.lower_bound_max");
    if (plan.lb_max) plan.lb_tau = cfg.num("check.lower_bound_tau_fraction");
    for (double f : plan.tau_fractions) {
      require(f >= 0.0 && f < 1.0, ErrorCode::ConfigError, "check.tau_fractions must lie in [0, 1)");
    }
    if (plan.expansion_factor || plan.margin_factor) tau_index(plan.tau_fractions, 0.0);
    if (plan.expansion_tau) tau_index(plan.tau_fractions, *plan.expansion_tau);
    if (plan.margin_tau) tau_index(plan.tau_fractions, *plan.margin_tau);
    if (plan.lb_tau) tau_index(plan.tau_fractions, *plan.lb_tau);
  }
  if (plan.dual) {
    plan.y_points = positive_count(cfg, "dual.y_points", 201);
    plan.y_fraction = cfg.num("dual.y_fraction", plan.y_fraction);
    plan.discrepancy_max = opt_num(cfg, "dual.discrepancy_max");
    plan.involution_max = opt_num(cfg, "dual.involution_max");
    plan.equation_max = opt_num(cfg, "dual.equation_max");
  }
  if (plan.mc) {
    plan.mc_cfg.n_paths = positive_count(cfg, "mc.paths", 100000);
    plan.mc_cfg.substeps = positive_count(cfg, "mc.substeps", 1);
    plan.mc_cfg.t0 = cfg.num("mc.t0");
    plan.mc_cfg.x0 = cfg.num("mc.x0");
    plan.mc_cfg.threads = static_cast<unsigned>(positive_count(cfg, "mc.threads", 1));
    plan.mc_cfg.seed = static_cast<std::uint64_t>(cfg.integer("seed", 0));
    plan.seeds = positive_count(cfg, "mc.seeds", 1);
    plan.min_pass = positive_count(cfg, "mc.min_pass", static_cast<std::int64_t>(plan.seeds));
    plan.z_max = opt_num(cfg, "mc.z_max");
    plan.singular_hit_max = opt_num(cfg, "mc.singular_hit_max");
  }
  if (plan.companion) {
    plan.M = cfg.num("companion.M", plan.M);
    plan.M_prime = cfg.num("companion.M_prime", plan.M_prime);
  }
  return plan;
}

void run_bounds(const BackwardPlan& plan, const History& h, json& report, Certifications& certs) {
  const double lambda = plan.hjb->op.lambda;
  const double span = h.mesh.t_end() - h.mesh.t_start();
  std::vector<double> taus;
  for (double f : plan.tau_fractions) taus.push_back(f * span);
  const EpsilonReport eps = interior_bounds(h, lambda, taus, plan.inner_fraction);
  json e = epsilon_json(eps, plan.tau_fractions);

  // Entries sorted by tau for the monotonicity checks.
  std::vector<std::size_t> order(taus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return taus[a] < taus[b]; });

  bool positive = true, up_monotone = true, lo_monotone = true;
  double min_positive = kInf;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const std::size_t i = order[j];
    if (taus[i] > 0.0) {
      positive = positive && eps.upper_margin[i] > 0.0;
      min_positive = std::min(min_positive, eps.upper_margin[i]);
    }
    if (j > 0) {
      const std::size_t p = order[j - 1];
      up_monotone = up_monotone && eps.upper_margin[p] <= eps.upper_margin[i] + 1e-12;
      lo_monotone = lo_monotone && eps.lower_bound[p] <= eps.lower_bound[i] + 1e-12;
    }
  }
  certs.add("upper_margin_positive", positive, std::isfinite(min_positive) ? json(min_positive) : json(nullptr), 0.0);
  certs.add("upper_margin_monotone_in_tau", up_monotone, nullptr, nullptr);
  certs.add("lower_bound_monotone_in_tau", lo_monotone, nullptr, nullptr);

  std::vector<double> margins;
  try {
    for (double tau : taus) margins.push_back(positivity_margin(h, lambda, tau, plan.inner_fraction));
    e["positivity_margin"] = margins;
    bool monotone = true;
    for (std::size_t j = 1; j < order.size(); ++j) {
      monotone = monotone && margins[order[j - 1]] <= margins[order[j]] + 1e-12;
    }
    certs.add("positivity_margin_monotone_in_tau", monotone, nullptr, nullptr);
  } catch (const Error& err) {
    certs.fail_with("positivity_margin", err.what());
  }
  report["epsilon"] = e;

  const std::size_t zero = tau_index(plan.tau_fractions, 0.0);
  if (plan.expansion_factor) {
    const std::size_t i = tau_index(plan.tau_fractions, *plan.expansion_tau);
    const double ratio = eps.upper_margin[i] / eps.upper_margin[zero];
    certs.add("upper_margin_expansion", ratio >= *plan.expansion_factor, ratio, *plan.expansion_factor);
  }
  if (plan.margin_factor && margins.size() == taus.size()) {
    const std::size_t i = tau_index(plan.tau_fractions, *plan.margin_tau);
    const double ratio = margins[i] / margins[zero];
    certs.add("positivity_margin_expansion", ratio >= *plan.margin_factor, ratio, *plan.margin_factor);
  }
  if (plan.lb_max) {
    const std::size_t i = tau_index(plan.tau_fractions, *plan.lb_tau);
    const double lb = eps.lower_bound[i];
    certs.add("lower_bound_size", std::isfinite(lb) && std::abs(lb) <= *plan.lb_max, lb, *plan.lb_max);
  }
}

void run_dual(const BackwardPlan& plan, const History& h, json& report, Certifications& certs) {
  const double lambda = plan.hjb->op.lambda;
  json d;
  try {
    const Grid1D yg = default_y_grid(h, lambda, plan.y_points, plan.y_fraction);
    d["y_range"] = {yg.x_min(), yg.x_max()};
    double disc = 0.0;
    json per_slice = json::array();
    for (std::size_t k : {std::size_t{0}, h.slices.size() - 1}) {
      const DualCurvature dc = dual_curvature(h.slices[k], lambda, yg);
      per_slice.push_back(json{{"t", h.mesh.times()[k]},
                               {"max_discrepancy", dc.max_discrepancy},
                               {"max_relative_discrepancy", dc.max_relative_discrepancy}});
      disc = std::max(disc, dc.max_discrepancy);
    }
    d["dual_curvature"] = per_slice;
    if (plan.discrepancy_max) certs.add("dual_curvature_cross_check", disc <= *plan.discrepancy_max, disc, *plan.discrepancy_max);

    const double biconj = biconjugate_error(legendre_primal(h.slices.back(), lambda));
    d["biconjugate_error"] = biconj;
    if (plan.involution_max) certs.add("legendre_involution", biconj <= *plan.involution_max, biconj, *plan.involution_max);

    d["time_identity_residual"] = time_identity_residual(h, lambda, yg);
    if (lambda > 0.0) {
      const DualEquationResidual r = dual_equation_residual(h, plan.hjb->op, yg);
      d["dual_equation_residual"] = json{{"max_abs", r.max_abs}, {"max_rel", r.max_rel}};
      if (plan.equation_max) certs.add("dual_equation", r.max_abs <= *plan.equation_max, r.max_abs, *plan.equation_max);
    }
  } catch (const Error& e) {
    certs.fail_with("dual", e.what());
  }
  report["dual"] = d;
}

double heat_reference(const BackwardPlan& plan, double t, double x, double T) {
  // V = kappa phi(d_xx v) for v the Gaussian smoothing of the terminal data.
  const double w2 = plan.heat_width * plan.heat_width;
  const double S = w2 + plan.heat_diffusion * (T - t);
  const double v = plan.heat_amplitude * std::sqrt(w2 / S) * std::exp(-x * x / (2.0 * S));
  const double vxx = v * (x * x / (S * S) - 1.0 / S);
  return plan.kappa(t, x) * phi_eval(plan.phi, vxx, 0);
}

void run_mc(const BackwardPlan& plan, const History& h, json& report, Certifications& certs) {
  json runs = json::array();
  std::size_t within = 0;
  double worst_hit = 0.0;
  try {
    for (std::size_t s = 0; s < plan.seeds; ++s) {
      MCConfig c = plan.mc_cfg;
      c.seed = plan.mc_cfg.seed + s;
      const MCResult r = representation_check(h, plan.kappa, plan.phi, c);
      runs.push_back(json{{"seed", c.seed},
                          {"estimate", r.estimate},
                          {"std_error", r.std_error},
                          {"n_effective", r.n_effective},
                          {"pde_value", r.pde_value},
                          {"z_score", r.z_score},
                          {"escaped_fraction", r.escaped_fraction},
                          {"singular_hit_fraction", r.singular_hit_fraction},
                          {"bias_flag", r.bias_flag},
                          {"resolution", r.resolution}});
      if (plan.z_max && std::abs(r.z_score) <= *plan.z_max) ++within;
      worst_hit = std::max(worst_hit, r.singular_hit_fraction);
    }
  } catch (const Error& e) {
    certs.fail_with("monte_carlo", e.what());
  }
  json m{{"paths", plan.mc_cfg.n_paths},
         {"substeps", plan.mc_cfg.substeps},
         {"t0", plan.mc_cfg.t0},
         {"x0", plan.mc_cfg.x0},
         {"runs", runs}};
  if (plan.z_max && !runs.empty()) {
    m["runs_within_z_max"] = within;
    certs.add("representation_z_score", within >= plan.min_pass, within,
              json{{"z_max", *plan.z_max}, {"min_runs", plan.min_pass}});
  }
  if (plan.singular_hit_max && !runs.empty()) {
    certs.add("singular_hit_fraction", worst_hit <= *plan.singular_hit_max, worst_hit, *plan.singular_hit_max);
  }
  if (plan.exact_kind == "heat" && !runs.empty()) {
    const double ref = heat_reference(plan, plan.mc_cfg.t0, plan.mc_cfg.x0, h.mesh.t_end());
    const double diff = std::abs(runs[0]["pde_value"].get<double>() - ref);
    m["closed_form_value"] = ref;
    m["pde_value_error"] = diff;
    if (plan.exact_tol) certs.add("pde_value_closed_form", diff <= *plan.exact_tol, diff, *plan.exact_tol);
  }
  report["monte_carlo"] = m;
}

void run_exact(const BackwardPlan& plan, const History& h, json& report, Certifications& certs) {
  if (plan.exact_kind != "quadratic" && plan.exact_kind != "constant") return;
  const double T = h.mesh.t_end();
  double err = 0.0;
  if (plan.exact_kind == "quadratic") {
    const double q = plan.exact_param;
    const double Fq = plan.hjb->op.F(T, 0.0, q);
    const auto [first, last] = h.grid().inner_range(0.5);
    for (std::size_t k = 0; k < h.slices.size(); ++k) {
      const double t = h.mesh.times()[k];
      for (std::size_t i = first; i <= last; ++i) {
        const double x = h.grid().x(i);
        err = std::max(err, std::abs(h.slices[k].values[i] - (0.5 * q * x * x + (T - t) * Fq)));
      }
    }
    report["exact"] = json{{"kind", "quadratic"}, {"region", "inner half"}, {"max_error", err}};
  } else {
    for (const auto& s : h.slices) {
      err = std::max(err, max_abs_diff(s, Field(s.grid, std::vector<double>(s.values.size(), plan.exact_param))));
    }
    report["exact"] = json{{"kind", "constant"}, {"max_error", err}};
  }
  if (plan.exact_tol) certs.add("exact_solution", err <= *plan.exact_tol, err, *plan.exact_tol);
}

void run_companion(const BackwardPlan& plan, const History& h, json& report, Certifications& certs) {
  try {
    const double span = h.mesh.t_end() - h.mesh.t_start();
    std::vector<double> taus;
    for (double f : plan.tau_fractions) taus.push_back(f * span);
    const CompanionRun run =
        supersolution_companion(*plan.hjb, h, plan.M, plan.M_prime, taus, plan.inner_fraction);
    report["companion"] = json{{"M", plan.M},
                               {"M_prime", plan.M_prime},
                               {"lower_bound", lower_bound_json(run.report.lower)},
                               {"ordering", comparison_json(run.report.ordering)},
                               {"epsilon", epsilon_json(run.report.companion_bounds, plan.tau_fractions)}};
    certs.add("companion_lower_bound", run.report.lower.passed(), run.report.lower.overall_min, plan.M);
    certs.add("companion_ordering", run.report.ordering.passed(), run.report.ordering.min_difference,
              -run.report.ordering.tolerance);
  } catch (const Error& e) {
    certs.fail_with("companion", e.what());
  }
}

void run_backward(const BackwardPlan& plan, json& report, Certifications& certs, ScenarioResult& res) {
  const History h = hjb_solve_backward(*plan.hjb);
  res.slices = h.slices;
  res.times = h.mesh.times();
  report["solver"] = solver_json(h.meta);
  run_exact(plan, h, report, certs);
  if (plan.bounds) run_bounds(plan, h, report, certs);
  if (plan.dual) run_dual(plan, h, report, certs);
  if (plan.mc) run_mc(plan, h, report, certs);
  if (plan.companion) run_companion(plan, h, report, certs);
}

}  // namespace

ScenarioResult execute_scenario(const Config& cfg) {
  ScenarioResult res;
  json report;
  report["schema_version"] = kSchemaVersion;

  std::optional<ForwardPlan> fwd;
  std::optional<BackwardPlan> bwd;
  try {
    const std::string scenario = cfg.str("scenario");
    report["scenario"] = scenario;
    if (scenario == "pme-forward") {
      fwd = plan_forward(cfg);
      report["validation"] = fwd->validation;
    } else if (scenario == "hjb-backward" || scenario == "dual-legendre" ||
               scenario == "monte-carlo" || scenario == "full-certification") {
      bwd = plan_backward(cfg, scenario);
      report["validation"] = bwd->validation;
    } else {
      fail(ErrorCode::ConfigError, "key 'scenario': unknown scenario '" + scenario + "'");
    }
  } catch (const Error& e) {
    res.exit_code = kExitConfig;
    res.diagnostic = std::string("config error: ") + e.what();
    report["error"] = json{{"kind", "config"}, {"message", e.what()}};
    res.report_json = report.dump(2) + "\n";
    return res;
  }

  Certifications certs;
  try {
    if (fwd) {
      run_forward(*fwd, report, certs, res);
    } else {
      run_backward(*bwd, report, certs, res);
    }
  } catch (const StepFailure& e) {
    res.exit_code = kExitSolver;
    res.diagnostic = std::string("solver failure: ") + e.what();
    res.slices = e.partial().slices;
    res.times = e.partial().mesh.times();
    report["error"] = json{{"kind", "solver"}, {"message", e.what()}};
  } catch (const Error& e) {
    res.exit_code = kExitSolver;
    res.diagnostic = std::string("solver failure: ") + e.what();
    report["error"] = json{{"kind", "solver"}, {"message", e.what()}};
  }
  report["certifications"] = certs.list();
  const bool passed = res.exit_code == kExitPass && certs.all_passed();
  report["passed"] = passed;
  if (res.exit_code == kExitPass && !passed) {
    res.exit_code = kExitCertification;
    for (const auto& c : certs.list()) {
      if (!c["passed"].get<bool>()) {
        res.diagnostic = "certification failed: " + c["name"].get<std::string>();
        break;
      }
    }
  }
  res.report_json = report.dump(2) + "\n";
  return res;
}

std::string history_csv(const ScenarioResult& result) {
  std::string out = "t,x,value\n";
  char buf[96];
  for (std::size_t k = 0; k < result.slices.size(); ++k) {
    const Field& f = result.slices[k];
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const int n = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", result.times[k], f.grid.x(i), f.values[i]);
      out.append(buf, static_cast<std::size_t>(n));
    }
  }
  return out;
}

ScenarioResult run_scenario(const Config& cfg, const std::filesystem::path& out_dir) {
  const auto wall_start = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioResult res = execute_scenario(cfg);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::ConfigError, "cannot create output directory '" + out_dir.string() + "'");
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) fail(ErrorCode::ConfigError, "cannot write '" + (out_dir / name).string() + "'");
    f << body;
  };
  write("history.csv", history_csv(res));
  write("report.json", res.report_json);

  const std::time_t started = std::chrono::system_clock::to_time_t(wall_start);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started));
  json meta{{"schema_version", kSchemaVersion},
            {"version", library_version()},
            {"seed", cfg.str("seed", "0")},
            {"config", cfg.entries()},
            {"unused_keys", cfg.unused_keys()},
            {"exit_code", res.exit_code},
            {"wall_clock", json{{"started_utc", stamp}, {"elapsed_seconds", elapsed}}}};
  write("run_meta.json", meta.dump(2) + "\n");
  return res;
}

}  // namespace fnlpde
