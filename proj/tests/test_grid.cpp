#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fnlpde/errors.hpp"
#include "fnlpde/grid.hpp"

using namespace fnlpde;

namespace {

// Dense Gaussian elimination with partial pivoting.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    }
    std::swap(a[k], a[p]);
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace

TEST(Grid, SpacingAndNodes) {
  const auto g = Grid1D::with_spacing(-1.0, 1.0, 0.01);
  EXPECT_EQ(g.size(), 201u);
  EXPECT_DOUBLE_EQ(g.dx(), 0.01);
  EXPECT_EQ(g.x(0), -1.0);
  EXPECT_EQ(g.x(200), 1.0);
  EXPECT_NEAR(g.x(100), 0.0, 1e-15);
}

TEST(Grid, RejectsDegenerateInput) {
  EXPECT_THROW(Grid1D(1.0, 0.0, 10), Error);
  EXPECT_THROW(Grid1D(0.0, 1.0, 1), Error);
}

TEST(Grid, InnerRangeIsCentered) {
  const Grid1D g(-1.0, 1.0, 201);
  const auto [a, b] = g.inner_range(0.5);
  EXPECT_EQ(a, 50u);
  EXPECT_EQ(b, 150u);
  const auto [c, d] = g.inner_range(1.0);
  EXPECT_EQ(c, 0u);
  EXPECT_EQ(d, 200u);
  EXPECT_THROW(g.inner_range(0.0), Error);
}

TEST(TimeMesh, Uniform) {
  const auto m = TimeMesh::uniform(0.0, 1.0, 10);
  EXPECT_EQ(m.size(), 11u);
  for (std::size_t k = 0; k < m.steps(); ++k) EXPECT_NEAR(m.step(k), 0.1, 1e-15);
  EXPECT_EQ(m.find(0.3), 3u);
  EXPECT_EQ(m.find(0.35), TimeMesh::npos);
}

TEST(TimeMesh, GeometricStepsShrinkByRatio) {
  const auto m = TimeMesh::geometric_toward_end(0.0, 1.0, 50, 0.9);
  EXPECT_EQ(m.t_start(), 0.0);
  EXPECT_EQ(m.t_end(), 1.0);
  for (std::size_t k = 0; k + 2 < m.size(); ++k) {
    EXPECT_NEAR(m.step(k + 1) / m.step(k), 0.9, 1e-9);
  }
}

TEST(TimeMesh, RejectsNonIncreasingTimes) {
  EXPECT_THROW(TimeMesh({0.0, 0.5, 0.5}), Error);
  EXPECT_THROW(TimeMesh({0.0, 1.0, 0.5}), Error);
}

TEST(SecondDifference, ExactOnCubicsIncludingEndpoints) {
  const Grid1D g(-1.0, 2.0, 31);
  const auto f = Field::sample(g, [](double x) { return x * x * x - 2.0 * x * x + x; });
  const auto d = second_difference(f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(d.values[i], 6.0 * g.x(i) - 4.0, 1e-9) << i;
  }
}

TEST(SecondDifference, SineTruncationBound) {
  // Central stencil error <= dx^2/12 max|f''''| = dx^2/12 for sin.
  for (double dx : {0.1, 0.05, 0.025}) {
    const auto g = Grid1D::with_spacing(0.0, 3.0, dx);
    const auto d = second_difference(Field::sample(g, [](double x) { return std::sin(x); }));
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
      EXPECT_LE(std::abs(d.values[i] + std::sin(g.x(i))), dx * dx / 12.0 + 1e-12);
    }
  }
}

TEST(SecondDifference, ThreeNodes) {
  const std::vector<double> f{1.0, 0.0, 1.0};
  const auto d = second_difference(f, 1.0);
  EXPECT_EQ(d, (std::vector<double>{2.0, 2.0, 2.0}));
}

TEST(SecondDifference, RejectsNonFinite) {
  const std::vector<double> f{1.0, NAN, 1.0, 2.0};
  try {
    second_difference(f, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFinite);
  }
}

TEST(Tridiagonal, MatchesDenseElimination) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {1u, 2u, 5u, 40u}) {
    std::vector<double> lo(n - 1), di(n), up(n - 1), rhs(n);
    for (auto& v : lo) v = u(gen);
    for (auto& v : up) v = u(gen);
    for (auto& v : rhs) v = u(gen);
    for (auto& v : di) v = 3.0 + u(gen);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      a[i][i] = di[i];
      if (i > 0) a[i][i - 1] = lo[i - 1];
      if (i + 1 < n) a[i][i + 1] = up[i];
    }
    const auto x = solve_tridiagonal(lo, di, up, rhs);
    const auto ref = dense_solve(a, rhs);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref[i], 1e-13);
  }
}

TEST(Tridiagonal, ZeroPivotThrows) {
  const std::vector<double> lo{1.0}, di{1.0, 1.0}, up{1.0}, rhs{1.0, 2.0};
  try {
    solve_tridiagonal(lo, di, up, rhs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularSystem);
  }
}

TEST(Interpolate, ExactOnLinearAndMidpointErrorOnQuadratic) {
  const Grid1D g(0.0, 1.0, 11);
  const auto lin = Field::sample(g, [](double x) { return 3.0 * x - 1.0; });
  EXPECT_NEAR(interpolate_field(lin, 0.437), 3.0 * 0.437 - 1.0, 1e-14);
  const auto quad = Field::sample(g, [](double x) { return x * x; });
  // Chord above x^2 by dx^2/4 at the midpoint of a cell.
  const double xm = 0.45;
  EXPECT_NEAR(interpolate_field(quad, xm) - xm * xm, 0.01 / 4.0, 1e-14);
  EXPECT_EQ(interpolate_field(quad, 1.0), 1.0);
  EXPECT_THROW(interpolate_field(quad, 1.0001), Error);
}

TEST(Trapezoid, ErrorFormulaOnQuadratic) {
  const Grid1D g(0.0, 1.0, 11);
  const auto f = Field::sample(g, [](double x) { return x * x; });
  // Composite trapezoid error (b - a) h^2 f'' / 12.
  EXPECT_NEAR(trapezoid(g, f.values) - 1.0 / 3.0, 0.01 * 2.0 / 12.0, 1e-14);
}

TEST(Tridiagonal, IdentityAndSmallSystem) {
  const std::vector<double> zeros(3, 0.0), ones(4, 1.0), rhs{1.5, -2.0, 0.0, 4.0};
  EXPECT_EQ(solve_tridiagonal(zeros, ones, zeros, rhs), rhs);
  const std::vector<double> off(2, -1.0), diag(3, 2.0);
  const auto x = solve_tridiagonal(off, diag, off, std::vector<double>{1.0, 0.0, 1.0});
  for (double v : x) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Tridiagonal, RandomDominantResidual) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::size_t n = 50;
  std::vector<double> lo(n - 1), up(n - 1), d(n), b(n);
  for (auto& v : lo) v = U(gen);
  for (auto& v : up) v = U(gen);
  for (auto& v : d) v = 3.0 + U(gen);
  for (auto& v : b) v = U(gen);
  const auto x = solve_tridiagonal(lo, d, up, b);
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = d[i];
    if (i > 0) a[i][i - 1] = lo[i - 1];
    if (i + 1 < n) a[i][i + 1] = up[i];
  }
  const auto ref = dense_solve(a, b);
  double nb = 0.0, nx = 0.0, res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(x[i], ref[i], 1e-10);
    double r = -b[i];
    for (std::size_t j = 0; j < n; ++j) r += a[i][j] * x[j];
    res = std::max(res, std::abs(r));
    nb = std::max(nb, std::abs(b[i]));
    nx = std::max(nx, std::abs(x[i]));
  }
  EXPECT_LE(res, 1e-12 * (nb + nx));
}

TEST(SecondDifference, LinearAndAnnihilatesAffine) {
  const auto g = Grid1D::with_spacing(0.0, 2.0, 0.05);
  const auto f = Field::sample(g, [](double x) { return std::sin(3.0 * x); });
  const auto h = Field::sample(g, [](double x) { return std::exp(x); });
  auto comb = f;
  for (std::size_t i = 0; i < g.size(); ++i) comb.values[i] = 2.0 * f.values[i] - 0.5 * h.values[i];
  const auto df = second_difference(f), dh = second_difference(h), dc = second_difference(comb);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(dc.values[i], 2.0 * df.values[i] - 0.5 * dh.values[i], 1e-9);
  }
  const auto affine = second_difference(Field::sample(g, [](double x) { return 4.0 - 1.5 * x; }));
  for (double v : affine.values) EXPECT_NEAR(v, 0.0, 1e-11);
}

TEST(Interpolate, MonotoneDataGiveMonotoneValues) {
  const auto g = Grid1D::with_spacing(-1.0, 1.0, 0.1);
  const auto f = Field::sample(g, [](double x) { return std::tanh(4.0 * x); });
  double prev = -INFINITY;
  for (int k = 0; k <= 1000; ++k) {
    const double v = interpolate_field(f, -1.0 + 0.002 * k);
    EXPECT_GE(v, prev);
    prev = v;
  }
}
