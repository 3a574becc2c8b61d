#include "fnlpde/pme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "newton_util.hpp"

namespace fnlpde {

double barenblatt_exact(double m_exp, double C, double t, double x) {
  require(m_exp > 1.0 && C > 0.0 && t > 0.0, ErrorCode::InvalidArgument,
          "Barenblatt needs m > 1, C > 0 and t > 0");
  const double alpha = 1.0 / (m_exp + 1.0);
  const double k = alpha * (m_exp - 1.0) / (2.0 * m_exp);
  const double base = C - k * x * x * std::pow(t, -2.0 * alpha);
  if (base <= 0.0) return 0.0;
  return std::pow(t, -alpha) * std::pow(base, 1.0 / (m_exp - 1.0));
}

namespace {

constexpr double kUFloor = 1e-12;

// Odd extension keeps the discrete operator monotone on all of R.
double phi_signed(const PhiModel& phi, double u) {
  return u >= 0.0 ? phi_eval(phi, u, 0) : -phi_eval(phi, -u, 0);
}

double dphi_floored(const PhiModel& phi, double u) {
  return phi_eval(phi, std::max(std::abs(u), kUFloor), 1);
}

class PmeStep {
 public:
  PmeStep(const PmeConfig& cfg, double t_new, double dt)
      : cfg_(cfg), n_(cfg.grid.size()), dt_(dt), inv_dx2_(1.0 / (cfg.grid.dx() * cfg.grid.dx())),
        kappa_(n_) {
    for (std::size_t i = 0; i < n_; ++i) kappa_[i] = cfg.kappa(t_new, cfg.grid.x(i));
  }

  std::vector<double> residual(const std::vector<double>& u, const std::vector<double>& u_old) const {
    std::vector<double> w(n_), r(n_);
    for (std::size_t i = 0; i < n_; ++i) w[i] = kappa_[i] * phi_signed(cfg_.phi, u[i]);
    const bool dirichlet = cfg_.boundary == PmeBoundary::dirichlet_zero;
    for (std::size_t i = 1; i + 1 < n_; ++i) {
      const double wl = (dirichlet && i == 1) ? 0.0 : w[i - 1];
      const double wr = (dirichlet && i + 2 == n_) ? 0.0 : w[i + 1];
      r[i] = u[i] - u_old[i] - dt_ * (wl - 2.0 * w[i] + wr) * inv_dx2_;
    }
    if (dirichlet) {
      r[0] = u[0];
      r[n_ - 1] = u[n_ - 1];
    } else {
      r[0] = u[0] - u_old[0] - dt_ * 2.0 * (w[1] - w[0]) * inv_dx2_;
      r[n_ - 1] = u[n_ - 1] - u_old[n_ - 1] - dt_ * 2.0 * (w[n_ - 2] - w[n_ - 1]) * inv_dx2_;
    }
    return r;
  }

  // J = I - dt L diag(kappa phi'(u)).
  Tridiagonal jacobian(const std::vector<double>& u) const {
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = dt_ * inv_dx2_ * kappa_[i] * dphi_floored(cfg_.phi, u[i]);
    Tridiagonal J(n_);
    const bool dirichlet = cfg_.boundary == PmeBoundary::dirichlet_zero;
    for (std::size_t i = 1; i + 1 < n_; ++i) {
      J.diag[i] = 1.0 + 2.0 * d[i];
      J.lower[i - 1] = (dirichlet && i == 1) ? 0.0 : -d[i - 1];
      J.upper[i] = (dirichlet && i + 2 == n_) ? 0.0 : -d[i + 1];
    }
    if (dirichlet) {
      J.diag[0] = 1.0;
      J.upper[0] = 0.0;
      J.diag[n_ - 1] = 1.0;
      J.lower[n_ - 2] = 0.0;
    } else {
      J.diag[0] = 1.0 + 2.0 * d[0];
      J.upper[0] = -2.0 * d[1];
      J.diag[n_ - 1] = 1.0 + 2.0 * d[n_ - 1];
      J.lower[n_ - 2] = -2.0 * d[n_ - 2];
    }
    return J;
  }

 private:
  const PmeConfig& cfg_;
  std::size_t n_;
  double dt_;
  double inv_dx2_;
  std::vector<double> kappa_;
};

}  // namespace

History pme_solve(const PmeConfig& cfg) {
  require(cfg.initial.grid == cfg.grid, ErrorCode::InvalidArgument,
          "initial field must live on the solver grid");
  require(cfg.newton_tol > 0.0 && cfg.newton_max_iter >= 1, ErrorCode::InvalidArgument,
          "Newton tolerance and iteration cap must be positive");
  for (double u : cfg.initial.values) {
    require(u >= 0.0, ErrorCode::InvalidArgument, "initial data must be non-negative");
  }

  History h{cfg.mesh, {}, {}};
  h.meta.backward = false;
  h.slices.reserve(cfg.mesh.size());
  h.slices.push_back(cfg.initial);
  if (cfg.boundary == PmeBoundary::dirichlet_zero) {
    auto& v = h.slices.back().values;
    v.front() = 0.0;
    v.back() = 0.0;
  }

  const std::size_t n = cfg.grid.size();
  bool boundary_warned = false;
  for (std::size_t k = 0; k < cfg.mesh.steps(); ++k) {
    const double t_new = cfg.mesh.times()[k + 1];
    const PmeStep step(cfg, t_new, cfg.mesh.step(k));
    const std::vector<double>& u_old = h.slices.back().values;

    NewtonOutcome out = damped_newton(
        u_old, [&](const std::vector<double>& u) { return step.residual(u, u_old); },
        [&](const std::vector<double>& u) { return step.jacobian(u); },
        [](const std::vector<double>&, const std::vector<double>&) { return 1.0; },
        cfg.newton_tol, cfg.newton_max_iter);

    h.meta.newton_iterations.push_back(out.iterations);
    h.meta.residuals.push_back(out.residual);
    if (!out.converged) {
      std::ostringstream os;
      os << "PME Newton failed at t = " << t_new << " (residual " << out.residual << ", "
         << out.reason << ")";
      throw StepFailure(os.str(), truncated(h));
    }
    // The exact discrete solution is non-negative; clip Newton undershoot.
    double undershoot = 0.0;
    for (double& u : out.x) {
      undershoot = std::max(undershoot, -u);
      u = std::max(u, 0.0);
    }
    if (undershoot > cfg.newton_tol) {
      std::ostringstream os;
      os << "clipped negative value " << -undershoot << " at t = " << t_new;
      h.meta.warnings.push_back(os.str());
    }
    if (!boundary_warned && n >= 4) {
      const double edge = std::max(std::abs(out.x[1]), std::abs(out.x[n - 2]));
      if (cfg.boundary == PmeBoundary::dirichlet_zero && edge > 1e-8) {
        std::ostringstream os;
        os << "solution reaches the artificial boundary at t = " << t_new << " (|u| = " << edge << ")";
        h.meta.warnings.push_back(os.str());
        boundary_warned = true;
      }
    }
    h.slices.emplace_back(cfg.grid, std::move(out.x));
  }
  return h;
}

}  // namespace fnlpde
