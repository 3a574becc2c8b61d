#pragma once

// Shared damped-Newton driver for the implicit solvers.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fnlpde/errors.hpp"
#include "fnlpde/grid.hpp"

namespace fnlpde {

/// Tridiagonal matrix plus optional entries at (0, 2) and (n-1, n-3), which
/// appear with extrapolated boundary closures. They are eliminated against the
/// neighbouring rows before the Thomas solve.
struct Tridiagonal {
  explicit Tridiagonal(std::size_t n) : lower(n - 1, 0.0), diag(n, 0.0), upper(n - 1, 0.0) {}
  std::vector<double> lower, diag, upper;
  double extra_top = 0.0;
  double extra_bottom = 0.0;

  std::vector<double> solve(std::vector<double> rhs) const {
    const std::size_t n = diag.size();
    std::vector<double> lo = lower, di = diag, up = upper;
    if (extra_top != 0.0 && n >= 3) {
      const double f = extra_top / up[1];
      di[0] -= f * lo[0];
      up[0] -= f * di[1];
      rhs[0] -= f * rhs[1];
    }
    if (extra_bottom != 0.0 && n >= 3) {
      const double f = extra_bottom / lo[n - 3];
      di[n - 1] -= f * up[n - 2];
      lo[n - 2] -= f * di[n - 2];
      rhs[n - 1] -= f * rhs[n - 2];
    }
    return solve_tridiagonal(lo, di, up, rhs);
  }
};

struct NewtonOutcome {
  std::vector<double> x;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::string reason;
};

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

constexpr int kMaxHalvings = 30;
constexpr double kStepTol = 1e-11;

/// Newton iteration on R(x) = 0. Each update is first capped by
/// `max_fraction(x, delta)` and then halved until ||R||_2 decreases. Converges
/// when max |R| <= tol or the Newton step falls below 1e-11 max(1, max |x|).
template <typename Residual, typename Jacobian, typename MaxFraction>
NewtonOutcome damped_newton(std::vector<double> x, Residual&& residual, Jacobian&& jacobian,
                            MaxFraction&& max_fraction, double tol, int max_iter) {
  NewtonOutcome out;
  std::vector<double> r = residual(x);
  out.residual = max_abs(r);
  while (out.residual > tol) {
    if (out.iterations >= max_iter) {
      out.reason = "iteration cap reached";
      out.x = std::move(x);
      return out;
    }
    const Tridiagonal J = jacobian(x);
    std::vector<double> rhs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
    std::vector<double> delta;
    try {
      delta = J.solve(std::move(rhs));
    } catch (const Error& e) {
      out.reason = e.what();
      out.x = std::move(x);
      return out;
    }
    // Once the Newton step is at rounding size the residual sits on its
    // rounding floor (amplified by 1/dx^2) and cannot improve further.
    if (max_abs(delta) <= kStepTol * std::max(1.0, max_abs(x))) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += delta[i];
      ++out.iterations;
      out.reason = "step below rounding tolerance";
      break;
    }
    double alpha = std::min(1.0, max_fraction(x, delta));
    const double norm0 = l2(r);
    bool accepted = false;
    std::vector<double> trial(x.size());
    for (int h = 0; h <= kMaxHalvings && !accepted; ++h, alpha *= 0.5) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + alpha * delta[i];
      std::vector<double> rt;
      try {
        rt = residual(trial);
      } catch (const Error&) {
        continue;
      }
      if (l2(rt) < norm0 || max_abs(rt) <= tol) {
        x.swap(trial);
        r = std::move(rt);
        accepted = true;
      }
    }
    ++out.iterations;
    if (!accepted) {
      out.reason = "damping could not reduce the residual";
      out.x = std::move(x);
      return out;
    }
    out.residual = max_abs(r);
  }
  out.converged = true;
  out.x = std::move(x);
  return out;
}

/// History restricted to its computed slices (used for partial results).
inline History truncated(const History& h) {
  std::vector<double> t(h.mesh.times().begin(),
                        h.mesh.times().begin() + static_cast<long>(h.slices.size()));
  History out{TimeMesh(std::move(t), h.mesh.grading(), h.mesh.ratio()), h.slices, h.meta};
  return out;
}

}  // namespace fnlpde
