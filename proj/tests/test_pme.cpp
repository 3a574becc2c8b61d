#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fnlpde/pme.hpp"

using namespace fnlpde;

namespace {

PmeConfig make(const PhiModel& phi, const KappaModel& kappa, const Grid1D& g, const TimeMesh& m,
               const std::function<double(double)>& u0,
               PmeBoundary bc = PmeBoundary::dirichlet_zero) {
  return PmeConfig{phi, kappa, g, m, Field::sample(g, u0), bc};
}

double l1_error(const Field& f, const std::function<double(double)>& exact) {
  std::vector<double> e(f.values.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::abs(f.values[i] - exact(f.grid.x(i)));
  return trapezoid(f.grid, e);
}

}  // namespace

TEST(Barenblatt, ClosedFormProperties) {
  // Support edge at x^2 = C t^(2a) / k.
  const double m = 2.0, a = 1.0 / 3.0, k = a / 4.0;
  const double edge = std::sqrt(1.0 / k) * std::pow(2.0, a);
  EXPECT_GT(barenblatt_exact(m, 1.0, 2.0, 0.99 * edge), 0.0);
  EXPECT_EQ(barenblatt_exact(m, 1.0, 2.0, 1.01 * edge), 0.0);
  EXPECT_NEAR(barenblatt_exact(m, 1.0, 2.0, 0.0), std::pow(2.0, -a), 1e-15);
  // Mass is constant in time.
  const Grid1D g(-8.0, 8.0, 16001);
  const auto mass = [&](double t) {
    return trapezoid(g, Field::sample(g, [&](double x) { return barenblatt_exact(m, 1.0, t, x); }).values);
  };
  EXPECT_NEAR(mass(1.0), mass(3.0), 1e-5);
  EXPECT_THROW(barenblatt_exact(1.0, 1.0, 1.0, 0.0), Error);
}

TEST(PmeSolve, HeatLimitMatchesGaussian) {
  // phi(u) = u: Gaussian of variance 2t.
  const auto g = Grid1D::with_spacing(-8.0, 8.0, 0.02);
  const auto mesh = TimeMesh::uniform(1.0, 1.5, 200);
  const auto gauss = [](double t) {
    return [t](double x) { return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t); };
  };
  const auto h = pme_solve(make(PhiModel::linear(1.0), KappaModel::constant(1.0), g, mesh, gauss(1.0)));
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(h.slices.back().values[i] - gauss(1.5)(g.x(i))));
  EXPECT_LT(err, 2e-4);
}

TEST(PmeSolve, ConservesMassAndPositivity) {
  const auto g = Grid1D::with_spacing(-5.0, 5.0, 0.02);
  const auto mesh = TimeMesh::uniform(0.0, 0.5, 50);
  const auto h = pme_solve(make(PhiModel::power(3.0), KappaModel::exp_sin(0.5, 0.3, 3.0), g, mesh,
                                [](double x) { return std::abs(x) < 1.0 ? 1.0 - x * x : 0.0; },
                                PmeBoundary::neumann_zero));
  ASSERT_EQ(h.slices.size(), mesh.size());
  const double m0 = trapezoid(g, h.slices.front().values);
  for (const auto& s : h.slices) {
    for (double u : s.values) EXPECT_GE(u, 0.0);
    EXPECT_NEAR(trapezoid(g, s.values), m0, 1e-10 * m0);
  }
  EXPECT_FALSE(h.meta.backward);
  EXPECT_EQ(h.meta.newton_iterations.size(), mesh.steps());
}

TEST(PmeSolve, BarenblattErrorHalvesWithResolution) {
  const auto exact = [](double t) { return [t](double x) { return barenblatt_exact(2.0, 1.0, t, x); }; };
  auto run = [&](double dx, std::size_t steps) {
    const auto g = Grid1D::with_spacing(-6.0, 6.0, dx);
    const auto h = pme_solve(make(PhiModel::power(2.0), KappaModel::constant(1.0), g,
                                  TimeMesh::uniform(1.0, 2.0, steps), exact(1.0)));
    return l1_error(h.slices.back(), exact(2.0));
  };
  const double coarse = run(0.04, 50), fine = run(0.02, 100);
  EXPECT_LT(fine, coarse);
  EXPECT_GT(coarse / fine, 1.7);
}

TEST(PmeSolve, OrderedDataStayOrdered) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> amp(0.2, 2.0), shift(-1.0, 1.0);
  const auto g = Grid1D::with_spacing(-5.0, 5.0, 0.05);
  const auto mesh = TimeMesh::uniform(0.0, 0.3, 30);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = amp(gen), c = shift(gen), extra = amp(gen);
    const auto lower = [=](double x) { return a * std::exp(-(x - c) * (x - c)); };
    const auto upper = [=](double x) { return lower(x) + extra * std::exp(-x * x); };
    const auto hl = pme_solve(make(PhiModel::power(2.0), KappaModel::constant(1.0), g, mesh, lower));
    const auto hu = pme_solve(make(PhiModel::power(2.0), KappaModel::constant(1.0), g, mesh, upper));
    for (std::size_t k = 0; k < mesh.size(); ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_GE(hu.slices[k].values[i] - hl.slices[k].values[i], -1e-8);
      }
    }
  }
}

TEST(PmeSolve, RejectsNegativeData) {
  const auto g = Grid1D::with_spacing(-1.0, 1.0, 0.1);
  EXPECT_THROW(pme_solve(make(PhiModel::power(2.0), KappaModel::constant(1.0), g,
                              TimeMesh::uniform(0.0, 1.0, 2), [](double x) { return x; })),
               Error);
}

TEST(Barenblatt, UnitCentreAndResidual) {
  EXPECT_DOUBLE_EQ(barenblatt_exact(2.0, 1.0, 1.0, 0.0), 1.0);
  // Centred differences of the closed form on |x| <= 1, well inside the
  // support edge near 3.46 at t = 1.
  const double dt = 1e-5, dx = 1e-3, t = 1.0;
  const auto u = [](double s, double x) { return barenblatt_exact(2.0, 1.0, s, x); };
  double res = 0.0;
  for (double x = -1.0; x <= 1.0; x += 0.01) {
    const double ut = (u(t + dt, x) - u(t - dt, x)) / (2.0 * dt);
    const double a = u(t, x - dx), b = u(t, x), c = u(t, x + dx);
    const double lap = (a * a - 2.0 * b * b + c * c) / (dx * dx);
    res = std::max(res, std::abs(ut - lap));
  }
  EXPECT_LE(res, 1e-3);
}

TEST(PmeSolve, ConstantDataAreSteady) {
  const auto g = Grid1D::with_spacing(-1.0, 1.0, 0.02);
  const auto h = pme_solve(make(PhiModel::power(2.0), KappaModel::constant(1.0), g,
                                TimeMesh::uniform(0.0, 1.0, 20), [](double) { return 0.7; },
                                PmeBoundary::neumann_zero));
  for (const auto& s : h.slices) {
    for (double v : s.values) EXPECT_NEAR(v, 0.7, 1e-12);
  }
}

TEST(PmeSolve, InteriorZeroRegionStaysNonNegative) {
  const auto g = Grid1D::with_spacing(-3.0, 3.0, 0.02);
  const auto h = pme_solve(make(PhiModel::power(2.0), KappaModel::constant(1.0), g,
                                TimeMesh::uniform(0.0, 0.5, 50),
                                [](double x) { return std::abs(x) < 0.5 ? 0.0 : std::exp(-(std::abs(x) - 1.0) * (std::abs(x) - 1.0) * 8.0); }));
  for (const auto& s : h.slices) {
    for (double v : s.values) EXPECT_GE(v, -1e-10);
  }
  // The gap is still open shortly after the start.
  EXPECT_LT(h.slices[1].values[g.size() / 2], 1e-6);
}
