#include "fnlpde/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "fnlpde/errors.hpp"

namespace fnlpde {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void ValidationReport::add(std::string name, bool passed, std::string detail) {
  checks.push_back({std::move(name), passed, std::move(detail)});
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

// ---------------------------------------------------------------- phi

PhiModel PhiModel::power(double exponent) {
  require(exponent > 0.0 && finite(exponent), ErrorCode::InvalidArgument,
          "power exponent must be positive");
  PhiModel m;
  m.kind = Kind::power;
  m.exponent = exponent;
  m.name = "power(" + fmt(exponent) + ")";
  if (exponent != 1.0) {
    m.theta = exponent > 1.0 ? 1 : -1;
    m.m_struct = std::abs(exponent - 1.0) / exponent;
  }
  return m;
}

PhiModel PhiModel::custom(std::string name, ScalarFn phi, ScalarFn dphi, ScalarFn ddphi,
                          bool signed_domain, double singular_at) {
  require(phi && dphi && ddphi, ErrorCode::InvalidArgument,
          "custom phi needs phi, phi' and phi''");
  PhiModel m;
  m.kind = Kind::custom;
  m.name = std::move(name);
  m.phi = std::move(phi);
  m.dphi = std::move(dphi);
  m.ddphi = std::move(ddphi);
  m.signed_domain = signed_domain;
  m.singular_at = singular_at;
  return m;
}

PhiModel PhiModel::linear(double slope) {
  require(slope > 0.0, ErrorCode::InvalidArgument, "linear phi needs a positive slope");
  return custom(
      "linear(" + fmt(slope) + ")", [slope](double u) { return slope * u; },
      [slope](double) { return slope; }, [](double) { return 0.0; }, true);
}

double phi_eval(const PhiModel& model, double u, int order) {
  require(order >= 0 && order <= 2, ErrorCode::InvalidArgument, "phi order must be 0, 1 or 2");
  require(finite(u), ErrorCode::NonFinite, "phi evaluated at a non-finite point");
  if (!model.signed_domain) {
    require(u >= 0.0, ErrorCode::InvalidArgument, "phi is defined for u >= 0 only");
  }
  if (u >= model.singular_at) {
    fail(ErrorCode::SingularDomain, "phi evaluated beyond its singular threshold");
  }
  if (model.kind == PhiModel::Kind::power) {
    const double m = model.exponent;
    if (u == 0.0) {
      if (order == 0) return 0.0;
      if (order == 1) {
        if (m < 1.0) fail(ErrorCode::SingularPoint, "phi' is singular at u = 0");
        return m == 1.0 ? 1.0 : 0.0;
      }
      if (m == 1.0 || m > 2.0) return 0.0;
      if (m == 2.0) return 2.0;
      fail(ErrorCode::SingularPoint, "phi'' is singular at u = 0");
    }
    switch (order) {
      case 0: return std::pow(u, m);
      case 1: return m * std::pow(u, m - 1.0);
      default: return m * (m - 1.0) * std::pow(u, m - 2.0);
    }
  }
  const double v = order == 0 ? model.phi(u) : order == 1 ? model.dphi(u) : model.ddphi(u);
  if (!finite(v)) fail(ErrorCode::SingularPoint, "phi is not finite at u = " + fmt(u));
  return v;
}

Structure structural_theta_m(const PhiModel& model, std::span<const double> u_samples,
                             double floor) {
  if (model.kind == PhiModel::Kind::power) {
    const double m = model.exponent;
    if (m == 1.0) {
      fail(ErrorCode::HypothesisViolated, "phi(u) = u has phi phi''/phi'^2 = 0");
    }
    return {m > 1.0 ? 1 : -1, std::abs(m - 1.0) / m};
  }
  require(!u_samples.empty(), ErrorCode::InvalidArgument, "structural check needs samples");
  std::vector<double> us(u_samples.begin(), u_samples.end());
  double u_lo = kInf;
  for (double u : us) {
    require(finite(u) && u > 0.0, ErrorCode::InvalidArgument,
            "structural samples must be positive and finite");
    u_lo = std::min(u_lo, u);
  }
  // The infimum runs over u >= 0; probe the approach to the origin.
  for (int k = 1; k <= 8; ++k) us.push_back(u_lo * std::pow(10.0, -k));

  double inf_pos = kInf;
  double inf_neg = kInf;
  for (double u : us) {
    const double d1 = phi_eval(model, u, 1);
    const double r = phi_eval(model, u, 0) * phi_eval(model, u, 2) / (d1 * d1);
    if (!finite(r)) {
      fail(ErrorCode::HypothesisViolated, "phi phi''/phi'^2 undefined at u = " + fmt(u));
    }
    inf_pos = std::min(inf_pos, r);
    inf_neg = std::min(inf_neg, -r);
  }
  if (inf_pos > floor) return {1, inf_pos};
  if (inf_neg > floor) return {-1, inf_neg};
  fail(ErrorCode::HypothesisViolated,
       "theta phi phi''/phi'^2 has no positive lower bound (inf " +
           fmt(std::max(inf_pos, inf_neg)) + ")");
}

ValidationReport validate_phi(const PhiModel& model, double u_max, std::size_t n_samples) {
  ValidationReport rep;
  require(u_max > 0.0 && n_samples >= 2, ErrorCode::InvalidArgument,
          "phi validation needs u_max > 0 and at least two samples");
  const double phi0 = phi_eval(model, 0.0, 0);
  rep.add("phi(0) = 0", std::abs(phi0) <= 1e-14, "phi(0) = " + fmt(phi0));

  bool monotone = true;
  double prev = phi0;
  std::vector<double> positive;
  for (std::size_t k = 1; k <= n_samples; ++k) {
    const double u = u_max * static_cast<double>(k) / static_cast<double>(n_samples);
    const double v = phi_eval(model, u, 0);
    if (v < prev - 1e-14 * std::max(1.0, std::abs(prev))) monotone = false;
    prev = v;
    positive.push_back(u);
  }
  rep.add("phi non-decreasing", monotone);

  try {
    const Structure s = structural_theta_m(model, positive);
    const bool ok = model.m_struct <= 0.0 || s.m_struct >= model.m_struct * (1.0 - 1e-12);
    rep.add("structural condition", ok,
            "theta = " + std::to_string(s.theta) + ", inf = " + fmt(s.m_struct));
  } catch (const Error& e) {
    rep.add("structural condition", false, e.what());
  }
  return rep;
}

// ---------------------------------------------------------------- kappa

KappaModel KappaModel::constant(double value) {
  require(value > 0.0, ErrorCode::InvalidArgument, "kappa must be positive");
  KappaModel k;
  k.name = "constant(" + fmt(value) + ")";
  k.kappa = [value](double, double) { return value; };
  k.dt_kappa = [](double, double) { return 0.0; };
  k.dtt_kappa = [](double, double) { return 0.0; };
  k.dx_kappa = [](double, double) { return 0.0; };
  k.L = std::max(value, 1.0 / value);
  k.dx_kappa_bound = 0.0;
  k.time_independent = true;
  return k;
}

KappaModel KappaModel::exp_sin(double alpha, double beta, double L) {
  require(std::abs(beta) < 1.0, ErrorCode::InvalidArgument, "exp_sin kappa needs |beta| < 1");
  require(L > 0.0, ErrorCode::InvalidArgument, "kappa bound L must be positive");
  KappaModel k;
  k.name = "exp_sin(" + fmt(alpha) + "," + fmt(beta) + ")";
  k.kappa = [=](double t, double x) { return std::exp(alpha * t) * (1.0 + beta * std::sin(x)); };
  k.dt_kappa = [=](double t, double x) {
    return alpha * std::exp(alpha * t) * (1.0 + beta * std::sin(x));
  };
  k.dtt_kappa = [=](double t, double x) {
    return alpha * alpha * std::exp(alpha * t) * (1.0 + beta * std::sin(x));
  };
  k.dx_kappa = [=](double t, double x) { return std::exp(alpha * t) * beta * std::cos(x); };
  k.L = L;
  k.dx_kappa_bound = std::abs(beta) * L / (1.0 - std::abs(beta));
  k.time_independent = alpha == 0.0;
  return k;
}

namespace {

struct Table {
  std::vector<double> t, x, v;

  // Cell lookup with constant extension outside the table.
  static std::pair<std::size_t, double> locate(const std::vector<double>& nodes, double s) {
    if (nodes.size() == 1 || s <= nodes.front()) return {0, 0.0};
    if (s >= nodes.back()) return {nodes.size() - 2, 1.0};
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
    const auto i = static_cast<std::size_t>(it - nodes.begin()) - 1;
    return {i, (s - nodes[i]) / (nodes[i + 1] - nodes[i])};
  }

  double at(std::size_t it, std::size_t ix) const { return v[it * x.size() + ix]; }

  double value(double tt, double xx) const {
    const auto [ix, wx] = locate(x, xx);
    auto row = [&](std::size_t it) {
      return (1.0 - wx) * at(it, ix) + wx * at(it, std::min(ix + 1, x.size() - 1));
    };
    if (t.size() == 1) return row(0);
    const auto [it, wt] = locate(t, tt);
    return (1.0 - wt) * row(it) + wt * row(it + 1);
  }

  double dt(double tt, double xx) const {
    if (t.size() == 1 || tt < t.front() || tt > t.back()) return 0.0;
    const auto [it, wt] = locate(t, tt);
    (void)wt;
    const auto [ix, wx] = locate(x, xx);
    auto col = [&](std::size_t i) {
      return (1.0 - wx) * at(i, ix) + wx * at(i, std::min(ix + 1, x.size() - 1));
    };
    return (col(it + 1) - col(it)) / (t[it + 1] - t[it]);
  }

  double dx(double tt, double xx) const {
    if (x.size() == 1 || xx < x.front() || xx > x.back()) return 0.0;
    const auto [ix, wx] = locate(x, xx);
    (void)wx;
    auto val = [&](std::size_t j) {
      if (t.size() == 1) return at(0, j);
      const auto [it, wt] = locate(t, tt);
      return (1.0 - wt) * at(it, j) + wt * at(it + 1, j);
    };
    return (val(ix + 1) - val(ix)) / (x[ix + 1] - x[ix]);
  }
};

}  // namespace

KappaModel KappaModel::table(std::vector<double> t_nodes, std::vector<double> x_nodes,
                             std::vector<double> values, double L) {
  require(!t_nodes.empty() && x_nodes.size() >= 2 &&
              values.size() == t_nodes.size() * x_nodes.size(),
          ErrorCode::InvalidArgument, "kappa table dimensions are inconsistent");
  require(std::is_sorted(t_nodes.begin(), t_nodes.end()) &&
              std::is_sorted(x_nodes.begin(), x_nodes.end()),
          ErrorCode::InvalidArgument, "kappa table nodes must be sorted");
  for (double v : values) {
    require(v > 0.0 && finite(v), ErrorCode::InvalidArgument, "kappa table must be positive");
  }
  auto tab = std::make_shared<Table>(Table{std::move(t_nodes), std::move(x_nodes), std::move(values)});
  KappaModel k;
  k.name = "table";
  k.kappa = [tab](double t, double x) { return tab->value(t, x); };
  k.dt_kappa = [tab](double t, double x) { return tab->dt(t, x); };
  k.dtt_kappa = [](double, double) { return 0.0; };
  k.dx_kappa = [tab](double t, double x) { return tab->dx(t, x); };
  k.L = L;
  double slope = 0.0;
  for (std::size_t it = 0; it < tab->t.size(); ++it) {
    for (std::size_t ix = 0; ix + 1 < tab->x.size(); ++ix) {
      slope = std::max(slope, std::abs(tab->at(it, ix + 1) - tab->at(it, ix)) /
                                  (tab->x[ix + 1] - tab->x[ix]));
    }
  }
  k.dx_kappa_bound = slope;
  k.time_independent = tab->t.size() == 1;
  return k;
}

ValidationReport validate_kappa(const KappaModel& model, const SampleBox& box) {
  ValidationReport rep;
  const double tol = 1e-12;
  double sup_k = 0.0, sup_inv = 0.0, sup_dt = 0.0, sup_dtt = 0.0, sup_dx = 0.0;
  bool positive = true;
  box.for_each([&](double t, double x) {
    const double k = model.kappa(t, x);
    if (!(k > 0.0)) positive = false;
    sup_k = std::max(sup_k, k);
    sup_inv = std::max(sup_inv, 1.0 / k);
    sup_dt = std::max(sup_dt, std::abs(model.dt_kappa(t, x)));
    sup_dtt = std::max(sup_dtt, std::abs(model.dtt_kappa(t, x)));
    double dx;
    if (model.dx_kappa) {
      dx = model.dx_kappa(t, x);
    } else {
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      dx = (model.kappa(t, x + h) - model.kappa(t, x - h)) / (2.0 * h);
    }
    sup_dx = std::max(sup_dx, std::abs(dx));
  });
  const double L = model.L * (1.0 + tol);
  rep.add("kappa positive", positive);
  rep.add("sup kappa <= L", sup_k <= L, fmt(sup_k) + " vs L = " + fmt(model.L));
  rep.add("sup 1/kappa <= L", sup_inv <= L, fmt(sup_inv) + " vs L = " + fmt(model.L));
  rep.add("sup |dt kappa| <= L", sup_dt <= L, fmt(sup_dt));
  rep.add("sup |dtt kappa| <= L", sup_dtt <= L, fmt(sup_dtt));
  rep.add("sup |dx kappa| <= bound", sup_dx <= model.dx_kappa_bound * (1.0 + 1e-6) + tol,
          fmt(sup_dx) + " vs " + fmt(model.dx_kappa_bound));
  return rep;
}

RhoBounds kappa_rho_bounds(const KappaModel& model, double T) {
  if (model.time_independent) return {};
  const double L2 = model.L * model.L;
  return {T * L2, T * L2 + T * T * (L2 + L2 * L2)};
}

double sufficient_rho_from_bounds(double m_struct, RhoBounds bounds, double margin) {
  require(m_struct > 0.0 && finite(m_struct), ErrorCode::InvalidArgument,
          "sufficient rho needs m_struct > 0");
  require(margin > 0.0, ErrorCode::InvalidArgument, "sufficient rho needs margin > 0");
  require(bounds.c1 >= 0.0 && bounds.c2 >= 0.0, ErrorCode::InvalidArgument,
          "rho bounds must be non-negative");
  const double c1 = bounds.c1;
  return c1 + std::max((1.0 + margin + c1) / m_struct, bounds.c2 / margin);
}

double sufficient_rho(double m_struct, double L, double T, int theta, double margin) {
  require(theta == 1 || theta == -1, ErrorCode::InvalidArgument, "theta must be +1 or -1");
  require(L >= 1.0, ErrorCode::InvalidArgument, "L >= 1 is implied by kappa, 1/kappa <= L");
  require(T > 0.0, ErrorCode::InvalidArgument, "T must be positive");
  const double L2 = L * L;
  return sufficient_rho_from_bounds(m_struct, {T * L2, T * L2 + T * T * (L2 + L2 * L2)}, margin);
}

// ---------------------------------------------------------------- general F

GeneralF GeneralF::separable(const KappaModel& kappa, const PhiModel& phi) {
  GeneralF f;
  f.name = kappa.name + "*" + phi.name;
  f.F = [kappa, phi](double t, double x, double u) { return kappa.kappa(t, x) * phi_eval(phi, u, 0); };
  f.F_u = [kappa, phi](double t, double x, double u) { return kappa.kappa(t, x) * phi_eval(phi, u, 1); };
  f.F_t = [kappa, phi](double t, double x, double u) { return kappa.dt_kappa(t, x) * phi_eval(phi, u, 0); };
  f.F_uu = [kappa, phi](double t, double x, double u) { return kappa.kappa(t, x) * phi_eval(phi, u, 2); };
  f.F_ut = [kappa, phi](double t, double x, double u) { return kappa.dt_kappa(t, x) * phi_eval(phi, u, 1); };
  f.theta = phi.theta;
  f.m_struct = phi.m_struct;
  const double L2 = kappa.L * kappa.L;
  f.ratio_bounds = kappa.time_independent ? 0.0 : L2 + L2 * L2;
  return f;
}

ValidationReport validate_general_F(const GeneralF& f, const SampleBox& box, double u_min,
                                    double u_max, std::size_t nu) {
  require(u_max > u_min && u_min >= 0.0 && nu >= 2, ErrorCode::InvalidArgument,
          "general F validation needs 0 <= u_min < u_max");
  ValidationReport rep;
  double worst_zero = 0.0, worst_struct = kInf, worst_ratio = 0.0;
  bool monotone = true;
  box.for_each([&](double t, double x) {
    worst_zero = std::max(worst_zero, std::abs(f.F(t, x, 0.0)));
    double prev = -kInf;
    for (std::size_t k = 0; k < nu; ++k) {
      const double u = u_min + (u_max - u_min) * k / double(nu - 1);
      const double F = f.F(t, x, u);
      if (F < prev - 1e-14 * std::max(1.0, std::abs(prev))) monotone = false;
      prev = F;
      if (u <= 0.0) continue;
      const double Fu = f.F_u(t, x, u);
      worst_struct = std::min(worst_struct, f.theta * f.F_uu(t, x, u) * F / (Fu * Fu));
      const double h = 1e-5 * std::max(1.0, std::abs(t));
      auto ratio = [&](double s) { return f.F_t(s, x, u) / f.F(s, x, u); };
      const double r_t = (ratio(t + h) - ratio(t - h)) / (2.0 * h);
      worst_ratio = std::max({worst_ratio, std::abs(ratio(t)), std::abs(r_t),
                              std::abs(f.F_ut(t, x, u) / Fu)});
    }
  });
  rep.add("F(t,x,0) = 0", worst_zero <= 1e-14, "max |F(t,x,0)| = " + fmt(worst_zero));
  rep.add("F non-decreasing in u", monotone);
  rep.add("structural condition", std::isfinite(worst_struct) && worst_struct >= f.m_struct * (1.0 - 1e-9) &&
                                      worst_struct > 0.0,
          "inf theta F_uu F/F_u^2 = " + fmt(worst_struct) + " vs m = " + fmt(f.m_struct));
  rep.add("ratio bounds", worst_ratio <= f.ratio_bounds * (1.0 + 1e-6) + 1e-9,
          "sup = " + fmt(worst_ratio) + " vs " + fmt(f.ratio_bounds));
  return rep;
}

RhoBounds general_rho_bounds(const GeneralF& f, double T) {
  const double B = f.ratio_bounds;
  return {T * B, 3.0 * T * B + T * T * B};
}

// ---------------------------------------------------------------- impact

void ImpactParams::set_sigma_constant(double s) {
  require(s > 0.0, ErrorCode::InvalidArgument, "sigma must be positive");
  sigma_name = "constant";
  sigma = [s](double, double) { return s; };
  sigma_dt = {};
  sigma_dtt = {};
  sigma_inf = s;
  sigma_lip = 0.0;
}

void ImpactParams::set_sigma_local_sin(double s0, double beta) {
  require(s0 > 0.0 && std::abs(beta) < 1.0, ErrorCode::InvalidArgument,
          "local_sin sigma needs s0 > 0 and |beta| < 1");
  sigma_name = "local_sin";
  sigma = [s0, beta](double, double x) { return s0 * (1.0 + beta * std::sin(x)); };
  sigma_dt = {};
  sigma_dtt = {};
  sigma_inf = s0 * (1.0 - std::abs(beta));
  sigma_lip = s0 * std::abs(beta);
}

double ImpactParams::sigma_sq_half(double t, double x) const {
  const double s = sigma(t, x);
  return 0.5 * s * s;
}

double impact_F_eval(const ImpactParams& p, double t, double x, double gamma, int order) {
  require(order >= 0 && order <= 2, ErrorCode::InvalidArgument, "impact F order must be 0, 1 or 2");
  const double w = 1.0 - p.lambda * gamma;
  if (!(w > 0.0)) fail(ErrorCode::SingularDomain, "lambda * gamma >= 1");
  const double k = p.sigma_sq_half(t, x);
  switch (order) {
    case 0: return k * (p.a + p.b * std::pow(w, -p.p1) + p.c * std::pow(w, -p.p2));
    case 1:
      return k * p.lambda *
             (p.b * p.p1 * std::pow(w, -p.p1 - 1.0) + p.c * p.p2 * std::pow(w, -p.p2 - 1.0));
    default:
      return k * p.lambda * p.lambda *
             (p.b * p.p1 * (p.p1 + 1.0) * std::pow(w, -p.p1 - 2.0) +
              p.c * p.p2 * (p.p2 + 1.0) * std::pow(w, -p.p2 - 2.0));
  }
}

double impact_dual_F(const ImpactParams& p, double t, double x, double z, int order) {
  require(order == 0 || order == 1, ErrorCode::InvalidArgument, "dual F order must be 0 or 1");
  require(z > 0.0 && finite(z), ErrorCode::SingularDomain, "dual curvature must be positive");
  const double k = p.lambda * p.sigma_sq_half(t, x);
  if (order == 0) return k * (p.a + p.b * std::pow(z, p.p1) + p.c * std::pow(z, p.p2));
  return k * (p.b * p.p1 * std::pow(z, p.p1 - 1.0) + p.c * p.p2 * std::pow(z, p.p2 - 1.0));
}

ValidationReport validate_impact_params(const ImpactParams& p, const SampleBox& box) {
  ValidationReport rep;
  const double scale = std::max(1.0, std::abs(p.a) + std::abs(p.b) + std::abs(p.c));
  const double sum = p.a + p.b + p.c;
  rep.add("constants are solutions", std::abs(sum) <= 1e-12 * scale, "a + b + c = " + fmt(sum));
  rep.add("parabolic: b > 0", p.b > 0.0, "b = " + fmt(p.b));
  rep.add("parabolic: c > 0", p.c > 0.0, "c = " + fmt(p.c));
  rep.add("lambda > 0", p.lambda > 0.0, "lambda = " + fmt(p.lambda));
  rep.add("0 < p1 <= p2", p.p1 > 0.0 && p.p1 <= p.p2, "p1 = " + fmt(p.p1) + ", p2 = " + fmt(p.p2));
  if (p.p1 == p.p2) {
    rep.notes.push_back(
        "p1 = p2 accepted: the model is usually stated with p1 < p2 while the regularity "
        "result only asks p1 <= p2");
  }

  bool sigma_ok = static_cast<bool>(p.sigma) && p.sigma_inf > 0.0;
  double worst_lip = 0.0;
  if (sigma_ok) {
    const double dx = box.nx > 1 ? (box.x_max - box.x_min) / double(box.nx - 1) : 1.0;
    box.for_each([&](double t, double x) {
      const double s = p.sigma(t, x);
      if (!(s >= p.sigma_inf * (1.0 - 1e-12))) sigma_ok = false;
      if (x + dx <= box.x_max + 1e-12) {
        worst_lip = std::max(worst_lip, std::abs(p.sigma(t, x + dx) - s) / dx);
      }
    });
  }
  rep.add("sigma bounded below", sigma_ok, "sigma_inf = " + fmt(p.sigma_inf));
  rep.add("sigma Lipschitz", worst_lip <= p.sigma_lip * (1.0 + 1e-9) + 1e-12,
          "sampled " + fmt(worst_lip) + " vs " + fmt(p.sigma_lip));

  const bool parabolic = rep.all_passed();
  rep.regularity_applicable = parabolic && p.p1 > 0.0 && p.p1 <= 1.0 && p.p1 <= p.p2;
  if (parabolic && !rep.regularity_applicable) {
    rep.notes.push_back("interior regularity not covered: needs 0 < p1 <= 1 and p1 <= p2");
  }
  return rep;
}

PhiModel impact_phi_model(const ImpactParams& p) {
  ImpactParams unit = p;
  unit.set_sigma_constant(std::sqrt(2.0));  // sigma^2/2 = 1
  auto f = [unit](int order) {
    return [unit, order](double g) { return impact_F_eval(unit, 0.0, 0.0, g, order); };
  };
  return PhiModel::custom("impact", f(0), f(1), f(2), true, 1.0 / p.lambda);
}

KappaModel impact_kappa_model(const ImpactParams& p, const SampleBox& box) {
  require(static_cast<bool>(p.sigma) && p.sigma_inf > 0.0, ErrorCode::InvalidArgument,
          "impact kappa needs sigma with sigma_inf > 0");
  KappaModel k;
  k.name = "sigma^2/2[" + p.sigma_name + "]";
  const TxFn zero = [](double, double) { return 0.0; };
  const TxFn s = p.sigma;
  const TxFn s_t = p.sigma_dt ? p.sigma_dt : zero;
  const TxFn s_tt = p.sigma_dtt ? p.sigma_dtt : zero;
  k.kappa = [s](double t, double x) { return 0.5 * s(t, x) * s(t, x); };
  k.dt_kappa = [s, s_t](double t, double x) { return s(t, x) * s_t(t, x); };
  k.dtt_kappa = [s, s_t, s_tt](double t, double x) {
    return s_t(t, x) * s_t(t, x) + s(t, x) * s_tt(t, x);
  };
  k.time_independent = !p.sigma_dt;
  double L = 2.0 / (p.sigma_inf * p.sigma_inf);
  double sup_s = 0.0;
  box.for_each([&](double t, double x) {
    sup_s = std::max(sup_s, s(t, x));
    L = std::max({L, k.kappa(t, x), std::abs(k.dt_kappa(t, x)), std::abs(k.dtt_kappa(t, x))});
  });
  k.L = L;
  k.dx_kappa_bound = sup_s * p.sigma_lip;
  return k;
}

}  // namespace fnlpde
