#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fnlpde/grid.hpp"
#include "fnlpde/hjb.hpp"

namespace fnlpde {

/// Conjugate of sampled data f on sorted nodes x, evaluated at sorted y:
/// dual[j] = max_i (x_i y_j - f_i). `refine` replaces the nodal maximum by the
/// maximum of the local three-point parabola through the argmax node (exact on
/// quadratics). Linear time after a convex-hull pass.
struct ConjugateSweep {
  std::vector<double> values;
  std::vector<std::size_t> argmax;
  std::vector<double> map;  // maximizing x (refined when requested)
};

ConjugateSweep conjugate_nodes(std::span<const double> x, std::span<const double> f,
                               std::span<const double> y, bool refine = false);

struct ConjugatePair {
  Field primal;
  std::optional<Grid1D> y_grid;
  std::vector<double> y;
  std::vector<double> dual;
  std::vector<double> map_x_of_y;
  std::vector<std::size_t> argmax;
};

/// Smallest and largest forward slope of the primal data.
std::pair<double, double> slope_range(const Field& primal);

/// Throws OutOfRange if a y value lies outside the primal slope range.
ConjugatePair discrete_conjugate(const Field& primal, const Grid1D& y_grid, bool refine = false);
ConjugatePair discrete_conjugate(const Field& primal, std::span<const double> y, bool refine = false);

/// Conjugates strictly convex data at its forward slopes and back again;
/// returns the largest deviation from the data at interior nodes.
double biconjugate_error(const Field& convex);

/// upsilon = x^2/2 - lambda v.
Field legendre_primal(const Field& v, double lambda);

/// Uniform y-grid over the central `fraction` of the slope range of the
/// Legendre primal of every slice.
Grid1D default_y_grid(const History& h, double lambda, std::size_t n, double fraction = 0.9);
Grid1D default_y_grid(const Field& v, double lambda, std::size_t n, double fraction = 0.9);

struct DualCurvature {
  Field from_conjugate;             // second differences of the conjugate
  std::vector<double> reciprocal;   // 1/(1 - lambda d_xx v) at x(y)
  std::vector<double> map_x_of_y;
  double max_discrepancy = 0.0;
  double max_relative_discrepancy = 0.0;
};

/// d_yy of the conjugate, computed from the conjugate itself and from the
/// reciprocal rule through the argmax map. Throws NonConvexPrimal when
/// 1 - lambda d_xx v <= 0 at an interior node.
DualCurvature dual_curvature(const Field& v, double lambda, const Grid1D& y_grid);

/// max over steps and y of |d_t upsilon*(y) + d_t upsilon(x(y))|, using
/// forward differences and the argmax node of the earlier slice.
double time_identity_residual(const History& h, double lambda, const Grid1D& y_grid);

struct DualEquationResidual {
  double max_abs = 0.0;
  double max_rel = 0.0;
};

/// Residual of d_t upsilon* = -lambda F(t, x(y), (1 - 1/z)/lambda),
/// z = d_yy upsilon*, on a backward HJB history. In time-to-maturity this is
/// d_s upsilon* = Fbar(s, x(y), z).
DualEquationResidual dual_equation_residual(const History& h, const HjbOperator& op,
                                            const Grid1D& y_grid);

}  // namespace fnlpde
