#include "fnlpde/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fnlpde/errors.hpp"

namespace fnlpde {

namespace {

// Lower convex hull of points sorted by x (monotone chain).
std::vector<std::size_t> lower_hull(std::span<const double> x, std::span<const double> f) {
  std::vector<std::size_t> h;
  h.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    while (h.size() >= 2) {
      const std::size_t a = h[h.size() - 2], b = h.back();
      // Drop b when it lies on or above the chord a-i.
      const double cross = (x[b] - x[a]) * (f[i] - f[a]) - (f[b] - f[a]) * (x[i] - x[a]);
      if (cross <= 0.0) {
        h.pop_back();
      } else {
        break;
      }
    }
    h.push_back(i);
  }
  return h;
}

}  // namespace

ConjugateSweep conjugate_nodes(std::span<const double> x, std::span<const double> f,
                               std::span<const double> y, bool refine) {
  require(x.size() == f.size() && x.size() >= 2, ErrorCode::InvalidArgument,
          "conjugate needs matching node and value arrays");
  require(std::is_sorted(y.begin(), y.end()), ErrorCode::InvalidArgument,
          "conjugate evaluation points must be sorted");
  const std::vector<std::size_t> hull = lower_hull(x, f);

  ConjugateSweep out;
  out.values.resize(y.size());
  out.argmax.resize(y.size());
  out.map.resize(y.size());
  std::size_t j = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double yk = y[k];
    while (j + 1 < hull.size()) {
      const std::size_t a = hull[j], b = hull[j + 1];
      const double slope = (f[b] - f[a]) / (x[b] - x[a]);
      if (slope < yk) {
        ++j;
      } else {
        break;
      }
    }
    const std::size_t i = hull[j];
    double value = x[i] * yk - f[i];
    double xstar = x[i];
    if (refine && i > 0 && i + 1 < x.size()) {
      const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
      const double d0 = (f[i] - f[i - 1]) / h0, d1 = (f[i + 1] - f[i]) / h1;
      const double half_c = (d1 - d0) / (h0 + h1);
      const double s = d0 + half_c * h0;
      if (half_c > 0.0) {
        const double dx = (yk - s) / (2.0 * half_c);
        if (dx >= -h0 && dx <= h1) {
          xstar = x[i] + dx;
          value = xstar * yk - (f[i] + s * dx + half_c * dx * dx);
        }
      }
    }
    out.values[k] = value;
    out.argmax[k] = i;
    out.map[k] = xstar;
  }
  return out;
}

std::pair<double, double> slope_range(const Field& primal) {
  const auto& v = primal.values;
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double s = (v[i + 1] - v[i]) / primal.grid.dx();
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {lo, hi};
}

ConjugatePair discrete_conjugate(const Field& primal, std::span<const double> y, bool refine) {
  const auto [lo, hi] = slope_range(primal);
  const double tol = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  for (double yk : y) {
    if (yk < lo - tol || yk > hi + tol) {
      std::ostringstream os;
      os << "y = " << yk << " outside the primal slope range [" << lo << ", " << hi << "]";
      fail(ErrorCode::OutOfRange, os.str());
    }
  }
  const std::vector<double> x = primal.grid.nodes();
  ConjugateSweep sweep = conjugate_nodes(x, primal.values, y, refine);
  ConjugatePair out{primal, std::nullopt, std::vector<double>(y.begin(), y.end()),
                    std::move(sweep.values), std::move(sweep.map), std::move(sweep.argmax)};
  return out;
}

ConjugatePair discrete_conjugate(const Field& primal, const Grid1D& y_grid, bool refine) {
  const std::vector<double> y = y_grid.nodes();
  ConjugatePair out = discrete_conjugate(primal, std::span<const double>(y), refine);
  out.y_grid = y_grid;
  return out;
}

double biconjugate_error(const Field& convex) {
  const std::size_t n = convex.values.size();
  const std::vector<double> x = convex.grid.nodes();
  std::vector<double> y(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    y[i] = (convex.values[i + 1] - convex.values[i]) / (x[i + 1] - x[i]);
    require(i == 0 || y[i] > y[i - 1], ErrorCode::InvalidArgument,
            "biconjugation needs strictly convex data");
  }
  const ConjugateSweep dual = conjugate_nodes(x, convex.values, y);
  const ConjugateSweep back = conjugate_nodes(y, dual.values, x);
  double err = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) err = std::max(err, std::abs(back.values[i] - convex.values[i]));
  return err;
}

Field legendre_primal(const Field& v, double lambda) {
  std::vector<double> u(v.values.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = v.grid.x(i);
    u[i] = 0.5 * x * x - lambda * v.values[i];
  }
  return Field(v.grid, std::move(u));
}

Grid1D default_y_grid(const Field& v, double lambda, std::size_t n, double fraction) {
  const auto [lo, hi] = slope_range(legendre_primal(v, lambda));
  const double mid = 0.5 * (lo + hi), half = 0.5 * fraction * (hi - lo);
  return Grid1D(mid - half, mid + half, n);
}

Grid1D default_y_grid(const History& h, double lambda, std::size_t n, double fraction) {
  double lo = -kInf, hi = kInf;
  for (const auto& s : h.slices) {
    const auto [a, b] = slope_range(legendre_primal(s, lambda));
    lo = std::max(lo, a);
    hi = std::min(hi, b);
  }
  require(hi > lo, ErrorCode::OutOfRange, "slices share no common slope range");
  const double mid = 0.5 * (lo + hi), half = 0.5 * fraction * (hi - lo);
  return Grid1D(mid - half, mid + half, n);
}

DualCurvature dual_curvature(const Field& v, double lambda, const Grid1D& y_grid) {
  require(lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be non-negative");
  const Field d2 = second_difference(v);
  const std::size_t n = v.values.size();
  std::vector<double> recip(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hess = 1.0 - lambda * d2.values[i];
    if (!(hess > 0.0)) {
      if (i > 0 && i + 1 < n) {
        std::ostringstream os;
        os << "1 - lambda d_xx v = " << hess << " <= 0 at x = " << v.grid.x(i);
        fail(ErrorCode::NonConvexPrimal, os.str());
      }
      recip[i] = kInf;
      continue;
    }
    recip[i] = 1.0 / hess;
  }

  const ConjugatePair pair = discrete_conjugate(legendre_primal(v, lambda), y_grid, true);
  DualCurvature out{second_difference(Field(y_grid, pair.dual)), {}, pair.map_x_of_y, 0.0, 0.0};
  out.reciprocal.resize(pair.y.size());
  for (std::size_t k = 0; k < pair.y.size(); ++k) {
    out.reciprocal[k] = interpolate(v.grid, recip, pair.map_x_of_y[k]);
    const double diff = std::abs(out.from_conjugate.values[k] - out.reciprocal[k]);
    out.max_discrepancy = std::max(out.max_discrepancy, diff);
    out.max_relative_discrepancy =
        std::max(out.max_relative_discrepancy, diff / std::abs(out.reciprocal[k]));
  }
  return out;
}

double time_identity_residual(const History& h, double lambda, const Grid1D& y_grid) {
  const std::vector<double> y = y_grid.nodes();
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < h.slices.size(); ++k) {
    const Field u0 = legendre_primal(h.slices[k], lambda);
    const Field u1 = legendre_primal(h.slices[k + 1], lambda);
    const ConjugatePair c0 = discrete_conjugate(u0, std::span<const double>(y));
    const ConjugatePair c1 = discrete_conjugate(u1, std::span<const double>(y));
    const double dt = h.mesh.step(k);
    for (std::size_t j = 0; j < y.size(); ++j) {
      const std::size_t i = c0.argmax[j];
      const double d_dual = c1.dual[j] - c0.dual[j];
      const double d_primal = u1.values[i] - u0.values[i];
      worst = std::max(worst, std::abs(d_dual + d_primal) / dt);
    }
  }
  return worst;
}

DualEquationResidual dual_equation_residual(const History& h, const HjbOperator& op,
                                            const Grid1D& y_grid) {
  const double lambda = op.lambda;
  require(lambda > 0.0, ErrorCode::InvalidArgument, "dual equation needs lambda > 0");
  DualEquationResidual out;
  ConjugatePair prev = discrete_conjugate(legendre_primal(h.slices[0], lambda), y_grid, true);
  for (std::size_t k = 0; k + 1 < h.slices.size(); ++k) {
    ConjugatePair next = discrete_conjugate(legendre_primal(h.slices[k + 1], lambda), y_grid, true);
    const Field z = second_difference(Field(y_grid, prev.dual));
    const double t = h.mesh.times()[k];
    const double dt = h.mesh.step(k);
    for (std::size_t j = 1; j + 1 < prev.y.size(); ++j) {
      const double zj = z.values[j];
      if (!(zj > 0.0)) fail(ErrorCode::NonConvexPrimal, "conjugate lost convexity");
      const double gamma = (1.0 - 1.0 / zj) / lambda;
      const double predicted = -lambda * op.F(t, prev.map_x_of_y[j], gamma);
      const double observed = (next.dual[j] - prev.dual[j]) / dt;
      const double r = std::abs(observed - predicted);
      out.max_abs = std::max(out.max_abs, r);
      out.max_rel = std::max(out.max_rel, r / std::max(std::abs(predicted), 1e-12));
    }
    prev = std::move(next);
  }
  return out;
}

}  // namespace fnlpde
