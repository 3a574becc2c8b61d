#include "fnlpde/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fnlpde/errors.hpp"

namespace fnlpde {

namespace {

constexpr double kSupportFraction = 1e-8;
constexpr double kNormFloor = 1e-30;

// Marks nodes within `cells` cells of a node where u is below the support
// threshold at either time of the pair.
std::vector<char> collar_mask(const std::vector<double>& u0, const std::vector<double>& u1,
                              double collar) {
  const std::size_t n = u0.size();
  const double thr0 = kSupportFraction * *std::max_element(u0.begin(), u0.end());
  const double thr1 = kSupportFraction * *std::max_element(u1.begin(), u1.end());
  const auto cells = static_cast<long>(std::floor(std::max(collar, 0.0)));
  std::vector<char> low(n);
  for (std::size_t i = 0; i < n; ++i) low[i] = u0[i] < thr0 || u1[i] < thr1;

  // Distance to the nearest low node, scanned from both sides.
  constexpr long kFar = 1L << 40;
  std::vector<long> dist(n, kFar);
  long last = -kFar;
  for (std::size_t i = 0; i < n; ++i) {
    if (low[i]) last = static_cast<long>(i);
    dist[i] = static_cast<long>(i) - last;
  }
  last = 2 * kFar;
  for (std::size_t i = n; i-- > 0;) {
    if (low[i]) last = static_cast<long>(i);
    dist[i] = std::min(dist[i], last - static_cast<long>(i));
  }
  std::vector<char> mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = dist[i] <= cells;
  return mask;
}

template <typename G>
MonotonicityReport monotonicity_core(const History& h, G&& G_eval, int theta, double rho,
                                     const MonotonicityOptions& opt) {
  require(theta == 1 || theta == -1, ErrorCode::InvalidArgument, "theta must be +1 or -1");
  require(rho >= 0.0 && std::isfinite(rho), ErrorCode::InvalidArgument,
          "rho must be finite and non-negative");
  require(h.mesh.t_start() > opt.time_origin, ErrorCode::Precondition,
          "monotonicity check needs t_start > 0 (measured from the time origin)");
  require(h.slices.size() >= 2, ErrorCode::Precondition, "history needs at least two slices");

  MonotonicityReport rep;
  rep.rho_used = rho;
  rep.theta = theta;
  rep.tolerance = opt.tol;
  const Grid1D& grid = h.grid();
  const std::size_t n = grid.size();
  std::size_t excluded = 0, total = 0;
  double min_inc = kInf;

  auto g_at = [&](std::size_t k, std::size_t i) {
    const double t = h.mesh.times()[k];
    const double s = t - opt.time_origin;
    return theta * std::pow(s, rho * theta) * G_eval(t, grid.x(i), h.slices[k].values[i]);
  };

  for (std::size_t k = 0; k + 1 < h.slices.size(); ++k) {
    const auto& u0 = h.slices[k].values;
    const auto& u1 = h.slices[k + 1].values;
    const std::vector<char> mask = collar_mask(u0, u1, opt.collar);
    for (std::size_t i = 0; i < n; ++i) {
      ++total;
      if (mask[i]) {
        ++excluded;
        continue;
      }
      const double g0 = g_at(k, i), g1 = g_at(k + 1, i);
      const double inc = (g1 - g0) / std::max({std::abs(g0), std::abs(g1), kNormFloor});
      min_inc = std::min(min_inc, inc);
      if (inc < -opt.tol) {
        rep.violations.push_back({h.mesh.times()[k + 1], grid.x(i), -inc});
      }
    }
  }
  rep.min_increment = std::isfinite(min_inc) ? min_inc : 0.0;
  rep.collar_excluded = total ? static_cast<double>(excluded) / static_cast<double>(total) : 0.0;
  return rep;
}

std::vector<double> positive_samples(const History& h) {
  std::vector<double> out;
  for (const auto& s : h.slices) {
    for (double u : s.values) {
      if (u > 0.0) out.push_back(u);
    }
  }
  return out;
}

// Indices of mesh times t <= T - tau.
std::size_t last_level_for_tau(const History& h, double tau) {
  const double T = h.mesh.t_end();
  require(tau >= 0.0 && tau < T - h.mesh.t_start(), ErrorCode::InvalidArgument,
          "tau must satisfy 0 <= tau < T - t_start");
  const double cut = T - tau + 1e-12 * std::max(1.0, std::abs(T));
  std::size_t last = 0;
  for (std::size_t k = 0; k < h.mesh.size(); ++k) {
    if (h.mesh.times()[k] <= cut) last = k;
  }
  return last;
}

}  // namespace

MonotonicityReport check_monotonicity(const History& h, const PhiModel& phi,
                                      const KappaModel& kappa, double rho,
                                      const MonotonicityOptions& opt) {
  return monotonicity_core(
      h, [&](double t, double x, double u) { return kappa(t, x) * phi_eval(phi, u, 0); },
      phi.theta, rho, opt);
}

MonotonicityReport check_monotonicity(const History& h, const GeneralF& f, double rho,
                                      const MonotonicityOptions& opt) {
  return monotonicity_core(h, f.F, f.theta, rho, opt);
}

double certified_rho(const History& h, const PhiModel& phi, const KappaModel& kappa,
                     double time_origin) {
  const std::vector<double> samples = positive_samples(h);
  const Structure st = structural_theta_m(phi, samples);
  const RhoBounds b = kappa_rho_bounds(kappa, h.mesh.t_end() - time_origin);
  return sufficient_rho_from_bounds(st.m_struct, b);
}

double empirical_min_rho(const History& h, const PhiModel& phi, const KappaModel& kappa,
                         const MonotonicityOptions& opt) {
  auto clean = [&](double rho) { return check_monotonicity(h, phi, kappa, rho, opt).passed(); };
  if (clean(0.0)) return 0.0;
  double hi = 4.0 * certified_rho(h, phi, kappa, opt.time_origin);
  if (!clean(hi)) {
    std::ostringstream os;
    os << "violations persist at the upper bracket rho = " << hi;
    fail(ErrorCode::BracketFailure, os.str());
  }
  double lo = 0.0;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (clean(mid) ? hi : lo) = mid;
  }
  return hi;
}

ComparisonReport check_comparison(const History& a, const History& b, double tol) {
  require(a.grid() == b.grid(), ErrorCode::InvalidArgument, "histories must share a grid");
  require(a.mesh.times() == b.mesh.times(), ErrorCode::InvalidArgument,
          "histories must share a time mesh");
  require(a.meta.backward == b.meta.backward, ErrorCode::InvalidArgument,
          "histories must run in the same direction");
  const Field& sa = a.start_slice();
  const Field& sb = b.start_slice();
  for (std::size_t i = 0; i < sa.values.size(); ++i) {
    if (sa.values[i] < sb.values[i] - tol) {
      std::ostringstream os;
      os << "starting data not ordered at x = " << sa.grid.x(i);
      fail(ErrorCode::Precondition, os.str());
    }
  }

  ComparisonReport rep;
  rep.tolerance = tol;
  rep.min_difference = kInf;
  for (std::size_t k = 0; k < a.slices.size(); ++k) {
    const auto& va = a.slices[k].values;
    const auto& vb = b.slices[k].values;
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double d = va[i] - vb[i];
      rep.min_difference = std::min(rep.min_difference, d);
      if (d < -tol) rep.crossings.push_back({a.mesh.times()[k], a.grid().x(i), -d});
    }
  }
  return rep;
}

EpsilonReport interior_bounds(const History& h, double lambda, const std::vector<double>& tau_list,
                              double inner_fraction) {
  const auto [first, last] = h.grid().inner_range(inner_fraction);
  std::vector<double> slice_upper(h.slices.size()), slice_lower(h.slices.size());
  for (std::size_t k = 0; k < h.slices.size(); ++k) {
    const Field d2 = second_difference(h.slices[k]);
    double up = kInf, lo = kInf;
    for (std::size_t i = first; i <= last; ++i) {
      up = std::min(up, 1.0 - lambda * d2.values[i]);
      lo = std::min(lo, d2.values[i]);
    }
    slice_upper[k] = up;
    slice_lower[k] = lo;
  }

  EpsilonReport rep;
  rep.lambda = lambda;
  rep.inner_fraction = inner_fraction;
  rep.tau_list = tau_list;
  for (double tau : tau_list) {
    const std::size_t last_k = last_level_for_tau(h, tau);
    rep.upper_margin.push_back(
        *std::min_element(slice_upper.begin(), slice_upper.begin() + last_k + 1));
    rep.lower_bound.push_back(
        *std::min_element(slice_lower.begin(), slice_lower.begin() + last_k + 1));
  }
  return rep;
}

double positivity_margin(const History& h, double lambda, double tau, double inner_fraction) {
  const auto [first, last] = h.grid().inner_range(inner_fraction);
  const std::size_t last_k = last_level_for_tau(h, tau);
  double margin = kInf;
  for (std::size_t k = 0; k <= last_k; ++k) {
    const Field d2 = second_difference(h.slices[k]);
    for (std::size_t i = first; i <= last; ++i) {
      const double hess = 1.0 - lambda * d2.values[i];
      if (!(hess > 0.0)) {
        std::ostringstream os;
        os << "1 - lambda d_xx v = " << hess << " at t = " << h.mesh.times()[k]
           << ", x = " << h.grid().x(i);
        fail(ErrorCode::NonConvexPrimal, os.str());
      }
      margin = std::min(margin, 1.0 / hess);
    }
  }
  return margin;
}

LowerBoundReport lower_bound_propagation(const History& u, double M, double M_prime,
                                         double inner_fraction, double tol) {
  require(M_prime >= M, ErrorCode::InvalidArgument, "M' must not be below M");
  const auto [first, last] = u.grid().inner_range(inner_fraction);
  auto slice_min = [&](const Field& f) {
    return *std::min_element(f.values.begin() + static_cast<long>(first),
                             f.values.begin() + static_cast<long>(last) + 1);
  };
  LowerBoundReport rep;
  rep.M = M;
  rep.M_prime = M_prime;
  rep.initial_min = slice_min(u.start_slice());
  rep.overall_min = kInf;
  for (const auto& s : u.slices) rep.overall_min = std::min(rep.overall_min, slice_min(s));
  rep.premise = rep.initial_min >= M_prime - tol;
  rep.conclusion = rep.overall_min >= M - tol;
  return rep;
}

History curvature_history(const History& v, double inner_fraction) {
  const auto [first, last] = v.grid().inner_range(inner_fraction);
  require(last >= first + 2, ErrorCode::InvalidArgument, "inner region needs three nodes");
  const Grid1D sub(v.grid().x(first), v.grid().x(last), last - first + 1);
  History out{v.mesh, {}, v.meta};
  out.slices.reserve(v.slices.size());
  for (const auto& s : v.slices) {
    const Field d2 = second_difference(s);
    out.slices.emplace_back(sub, std::vector<double>(d2.values.begin() + static_cast<long>(first),
                                                     d2.values.begin() + static_cast<long>(last) + 1));
  }
  return out;
}

CompanionRun supersolution_companion(const HjbConfig& base, const History& base_run, double M,
                                     double M_prime, const std::vector<double>& tau_list,
                                     double inner_fraction, double tol) {
  require(M < M_prime, ErrorCode::InvalidArgument, "companion needs M < M'");
  const double lambda = base.op.lambda;
  require(lambda <= 0.0 || lambda * M_prime < 1.0, ErrorCode::InvalidArgument,
          "M' must stay below the singular threshold 1/lambda");

  // Integrate the curvature deficit twice so that d_xx of the lifted data is
  // max(d_xx v_T, M') at every interior node.
  const Field& vT = base.terminal;
  const std::size_t n = vT.values.size();
  const double dx = vT.grid.dx();
  const Field d2 = second_difference(vT);
  std::vector<double> lift(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double w = std::max(0.0, M_prime - d2.values[i]);
    lift[i + 1] = 2.0 * lift[i] - lift[i - 1] + dx * dx * w;
  }
  const double slope = lift[n - 1] / static_cast<double>(n - 1);
  std::vector<double> terminal(n);
  for (std::size_t i = 0; i < n; ++i) {
    terminal[i] = vT.values[i] + lift[i] - slope * static_cast<double>(i);
  }

  HjbConfig cfg = base;
  cfg.terminal = Field(vT.grid, std::move(terminal));
  CompanionRun run{hjb_solve_backward(cfg), {}};

  const History c_bar = curvature_history(run.companion, inner_fraction);
  const History c = curvature_history(base_run, inner_fraction);
  run.report.M = M;
  run.report.M_prime = M_prime;
  run.report.lower = lower_bound_propagation(c_bar, M, M_prime, 1.0, tol);
  run.report.ordering = check_comparison(c_bar, c, tol);
  run.report.companion_bounds = interior_bounds(run.companion, lambda, tau_list, inner_fraction);
  return run;
}

}  // namespace fnlpde
