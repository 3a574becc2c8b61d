#include <gtest/gtest.h>

#include <cmath>

#include "fnlpde/hjb.hpp"

using namespace fnlpde;

namespace {

ImpactParams impact(double sigma = 1.0) {
  ImpactParams p;
  p.set_sigma_constant(sigma);
  return p;
}

HjbConfig make(const HjbOperator& op, const Grid1D& g, const TimeMesh& m,
               const std::function<double(double)>& vT) {
  return HjbConfig{op, g, m, Field::sample(g, vT)};
}

double max_inner_error(const History& h, const std::function<double(double, double)>& exact,
                       double fraction = 0.5) {
  const auto [a, b] = h.grid().inner_range(fraction);
  double err = 0.0;
  for (std::size_t k = 0; k < h.slices.size(); ++k) {
    for (std::size_t i = a; i <= b; ++i) {
      err = std::max(err, std::abs(h.slices[k].values[i] - exact(h.mesh.times()[k], h.grid().x(i))));
    }
  }
  return err;
}

}  // namespace

TEST(HjbSolve, QuadraticIsExact) {
  const auto p = impact();
  const double q = 0.5, Fq = impact_F_eval(p, 0, 0, q, 0);
  const auto g = Grid1D::with_spacing(-4.0, 4.0, 0.01);
  const auto h = hjb_solve_backward(make(HjbOperator::impact(p), g, TimeMesh::uniform(0, 1, 50),
                                         [q](double x) { return 0.5 * q * x * x; }));
  EXPECT_TRUE(h.meta.backward);
  EXPECT_LT(max_inner_error(h, [&](double t, double x) { return 0.5 * q * x * x + (1.0 - t) * Fq; }), 1e-8);
}

TEST(HjbSolve, ConstantsArePreserved) {
  const auto g = Grid1D::with_spacing(-2.0, 2.0, 0.02);
  for (double c : {-3.0, 0.0, 7.5}) {
    const auto h = hjb_solve_backward(make(HjbOperator::impact(impact(2.0)), g,
                                           TimeMesh::uniform(0, 1, 20), [c](double) { return c; }));
    for (const auto& s : h.slices) {
      for (double v : s.values) EXPECT_NEAR(v, c, 1e-12);
    }
  }
}

TEST(HjbSolve, LinearPhiMatchesBackwardHeatKernel) {
  // v_t + kappa v_xx = 0 with Gaussian terminal data of variance w^2.
  const double kappa = 0.5, w2 = 1.0;
  const auto exact = [&](double t, double x) {
    const double s2 = w2 + 2.0 * kappa * (1.0 - t);
    return std::sqrt(w2 / s2) * std::exp(-x * x / (2.0 * s2));
  };
  const auto g = Grid1D::with_spacing(-8.0, 8.0, 0.02);
  const auto op = HjbOperator::separable(KappaModel::constant(kappa), PhiModel::linear(1.0));
  const auto h = hjb_solve_backward(make(op, g, TimeMesh::uniform(0, 1, 400),
                                         [&](double x) { return exact(1.0, x); }));
  EXPECT_LT(max_inner_error(h, exact), 5e-4);
}

TEST(HjbSolve, OrderedTerminalDataStayOrdered) {
  const auto g = Grid1D::with_spacing(-4.0, 4.0, 0.02);
  const auto m = TimeMesh::uniform(0, 1, 40);
  const auto op = HjbOperator::impact(impact());
  const auto bump = [](double x) { return 0.3 * std::exp(-x * x); };
  const auto lo = hjb_solve_backward(make(op, g, m, bump));
  const auto hi = hjb_solve_backward(make(op, g, m, [&](double x) { return bump(x) + 0.1 * std::exp(-4 * x * x); }));
  for (std::size_t k = 0; k < m.size(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_GE(hi.slices[k].values[i] - lo.slices[k].values[i], -1e-8);
  }
}

TEST(HjbSolve, StaysBelowSingularThreshold) {
  // Terminal curvature peaks at 0.99.
  const auto g = Grid1D::with_spacing(-5.0, 5.0, 0.01);
  const auto h = hjb_solve_backward(make(HjbOperator::impact(impact()), g,
                                         TimeMesh::geometric_toward_end(0, 1, 60, 0.95),
                                         [](double x) { return 0.99 * std::exp(-x * x / 2.0); }));
  for (const auto& s : h.slices) {
    const auto c = hjb_curvature(s.values, g.dx(), HjbBoundary::linear_extrapolation);
    for (double gi : c) EXPECT_LT(gi, 1.0);
  }
}

TEST(HjbSolve, RejectsTerminalDataPastThreshold) {
  const auto g = Grid1D::with_spacing(-1.0, 1.0, 0.01);
  EXPECT_THROW(hjb_solve_backward(make(HjbOperator::impact(impact()), g, TimeMesh::uniform(0, 1, 4),
                                       [](double x) { return 0.6 * x * x; })),
               Error);
}

TEST(HjbCurvature, LinearExtrapolationCopiesNeighbour) {
  const std::vector<double> v{0.0, 1.0, 4.0, 9.0, 16.0};
  const auto c = hjb_curvature(v, 1.0, HjbBoundary::linear_extrapolation);
  EXPECT_EQ(c, (std::vector<double>{2.0, 2.0, 2.0, 2.0, 2.0}));
}
