#include "fnlpde/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "newton_util.hpp"

namespace fnlpde {

HjbOperator HjbOperator::impact(const ImpactParams& p) {
  HjbOperator op;
  op.name = "impact";
  op.F = [p](double t, double x, double g) { return impact_F_eval(p, t, x, g, 0); };
  op.F_gamma = [p](double t, double x, double g) { return impact_F_eval(p, t, x, g, 1); };
  op.lambda = p.lambda;
  return op;
}

HjbOperator HjbOperator::separable(const KappaModel& kappa, const PhiModel& phi) {
  require(phi.signed_domain, ErrorCode::InvalidArgument,
          "pricing nonlinearity needs a signed-domain phi");
  HjbOperator op;
  op.name = kappa.name + "*" + phi.name;
  op.F = [kappa, phi](double t, double x, double g) { return kappa(t, x) * phi_eval(phi, g, 0); };
  op.F_gamma = [kappa, phi](double t, double x, double g) {
    return kappa(t, x) * phi_eval(phi, g, 1);
  };
  op.lambda = std::isfinite(phi.singular_at) ? 1.0 / phi.singular_at : 0.0;
  return op;
}

HjbOperator HjbOperator::general(const GeneralF& f) {
  HjbOperator op;
  op.name = f.name;
  op.F = f.F;
  op.F_gamma = f.F_u;
  return op;
}

std::vector<double> hjb_curvature(std::span<const double> v, double dx, HjbBoundary boundary) {
  const std::size_t n = v.size();
  const double inv = 1.0 / (dx * dx);
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv;
  // Frozen boundaries never use their curvature in the residual; the copy keeps
  // the barrier check meaningful there too.
  (void)boundary;
  g[0] = g[1];
  g[n - 1] = g[n - 2];
  return g;
}

namespace {

constexpr double kBarrierFloor = 1e-10;
constexpr double kFgammaFloor = 1e-14;

class HjbStep {
 public:
  HjbStep(const HjbConfig& cfg, double t, double dt, const std::vector<double>& v_next)
      : cfg_(cfg), n_(cfg.grid.size()), t_(t), dt_(dt), inv_dx2_(1.0 / (cfg.grid.dx() * cfg.grid.dx())),
        v_next_(v_next), x_(cfg.grid.nodes()), scale_(n_, 1.0) {
    // Rows are divided by the Jacobian diagonal at the previous slice, which
    // keeps the rounding floor of the residual near eps |v| for any dt/dx^2.
    const std::vector<double> g = curvature(v_next);
    for (std::size_t i = 0; i < n_; ++i) {
      const double d = dt_ * inv_dx2_ * std::max(cfg_.op.F_gamma(t_, x_[i], g[i]), kFgammaFloor);
      scale_[i] = 1.0 / (1.0 + 2.0 * d);
    }
  }

  std::vector<double> curvature(const std::vector<double>& v) const {
    return hjb_curvature(v, cfg_.grid.dx(), cfg_.boundary);
  }

  std::vector<double> residual(const std::vector<double>& v) const {
    const std::vector<double> g = curvature(v);
    const double lambda = cfg_.op.lambda;
    std::vector<double> r(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (lambda > 0.0 && !(1.0 - lambda * g[i] > kBarrierFloor)) {
        fail(ErrorCode::SingularDomain, "iterate crosses the singular threshold");
      }
      r[i] = v[i] - v_next_[i] - dt_ * cfg_.op.F(t_, x_[i], g[i]);
      if (!std::isfinite(r[i])) fail(ErrorCode::NonFinite, "non-finite HJB residual");
    }
    if (cfg_.boundary == HjbBoundary::dirichlet_frozen) {
      r[0] = v[0] - v_next_[0];
      r[n_ - 1] = v[n_ - 1] - v_next_[n_ - 1];
    }
    for (std::size_t i = 0; i < n_; ++i) r[i] *= scale_[i];
    return r;
  }

  // J = I - dt F_gamma D2, with the boundary rows depending on the closure.
  Tridiagonal jacobian(const std::vector<double>& v) const {
    const std::vector<double> g = curvature(v);
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      d[i] = dt_ * inv_dx2_ * std::max(cfg_.op.F_gamma(t_, x_[i], g[i]), kFgammaFloor);
    }
    Tridiagonal J(n_);
    for (std::size_t i = 1; i + 1 < n_; ++i) {
      J.lower[i - 1] = -d[i];
      J.diag[i] = 1.0 + 2.0 * d[i];
      J.upper[i] = -d[i];
    }
    if (cfg_.boundary == HjbBoundary::dirichlet_frozen) {
      J.diag[0] = 1.0;
      J.upper[0] = 0.0;
      J.diag[n_ - 1] = 1.0;
      J.lower[n_ - 2] = 0.0;
    } else {
      // Row 0 sees gamma_1 = D2 v at node 1 evaluated with x_0.
      J.diag[0] = 1.0 - d[0];
      J.upper[0] = 2.0 * d[0];
      J.extra_top = -d[0];
      J.diag[n_ - 1] = 1.0 - d[n_ - 1];
      J.lower[n_ - 2] = 2.0 * d[n_ - 1];
      J.extra_bottom = -d[n_ - 1];
    }
    for (std::size_t i = 0; i < n_; ++i) {
      J.diag[i] *= scale_[i];
      if (i > 0) J.lower[i - 1] *= scale_[i];
      if (i + 1 < n_) J.upper[i] *= scale_[i];
    }
    J.extra_top *= scale_[0];
    J.extra_bottom *= scale_[n_ - 1];
    return J;
  }

  double max_fraction(const std::vector<double>& v, const std::vector<double>& delta) const {
    const double lambda = cfg_.op.lambda;
    if (lambda <= 0.0) return 1.0;
    const std::vector<double> g = curvature(v);
    const std::vector<double> dg = curvature(delta);
    double alpha = 1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double growth = lambda * dg[i];
      if (growth > 0.0) {
        alpha = std::min(alpha, (1.0 - cfg_.barrier_gap) * (1.0 - lambda * g[i]) / growth);
      }
    }
    return alpha;
  }

 private:
  const HjbConfig& cfg_;
  std::size_t n_;
  double t_;
  double dt_;
  double inv_dx2_;
  const std::vector<double>& v_next_;
  std::vector<double> x_;
  std::vector<double> scale_;
};

}  // namespace

History hjb_solve_backward(const HjbConfig& cfg) {
  require(cfg.terminal.grid == cfg.grid, ErrorCode::InvalidArgument,
          "terminal field must live on the solver grid");
  require(static_cast<bool>(cfg.op.F) && static_cast<bool>(cfg.op.F_gamma),
          ErrorCode::InvalidArgument, "HJB operator needs F and F_gamma");
  require(cfg.barrier_gap > 0.0 && cfg.barrier_gap < 1.0, ErrorCode::InvalidArgument,
          "barrier_gap must lie in (0, 1)");
  require(cfg.newton_tol > 0.0 && cfg.newton_max_iter >= 1, ErrorCode::InvalidArgument,
          "Newton tolerance and iteration cap must be positive");
  if (cfg.op.lambda > 0.0) {
    const auto g = hjb_curvature(cfg.terminal.values, cfg.grid.dx(), cfg.boundary);
    for (double gi : g) {
      require(1.0 - cfg.op.lambda * gi > kBarrierFloor, ErrorCode::InvalidArgument,
              "terminal data violates lambda d_xx v < 1");
    }
  }

  const std::size_t levels = cfg.mesh.size();
  // Solve in reverse and flip at the end; `solved` holds T, t_{N-1}, ...
  std::vector<Field> solved;
  solved.reserve(levels);
  solved.push_back(cfg.terminal);
  SolveDiagnostics meta;
  meta.backward = true;

  auto partial_history = [&]() {
    std::vector<Field> slices(solved.rbegin(), solved.rend());
    const auto first = static_cast<long>(levels - slices.size());
    std::vector<double> t(cfg.mesh.times().begin() + first, cfg.mesh.times().end());
    return History{TimeMesh(std::move(t), cfg.mesh.grading(), cfg.mesh.ratio()), std::move(slices),
                   meta};
  };

  for (std::size_t k = levels - 1; k-- > 0;) {
    const double t = cfg.mesh.times()[k];
    const std::vector<double>& v_next = solved.back().values;
    const HjbStep step(cfg, t, cfg.mesh.step(k), v_next);
    const double tol = cfg.newton_tol * std::max(1.0, max_abs(v_next));
    NewtonOutcome out = damped_newton(
        v_next, [&](const std::vector<double>& v) { return step.residual(v); },
        [&](const std::vector<double>& v) { return step.jacobian(v); },
        [&](const std::vector<double>& v, const std::vector<double>& d) {
          return step.max_fraction(v, d);
        },
        tol, cfg.newton_max_iter);
    meta.newton_iterations.push_back(out.iterations);
    meta.residuals.push_back(out.residual);
    if (!out.converged) {
      std::ostringstream os;
      os << "HJB Newton failed at t = " << t << " (residual " << out.residual << ", "
         << out.reason << ")";
      throw StepFailure(os.str(), partial_history());
    }
    solved.emplace_back(cfg.grid, std::move(out.x));
  }
  return partial_history();
}

}  // namespace fnlpde
