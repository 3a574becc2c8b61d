#pragma once

#include <string>

#include "fnlpde/grid.hpp"
#include "fnlpde/models.hpp"
#include "fnlpde/pme.hpp"

namespace fnlpde {

/// Nonlinearity F(t, x, gamma) of d_t v + F(t, x, d_xx v) = 0, with its
/// gamma-derivative. `lambda > 0` marks the singular threshold lambda gamma = 1.
struct HjbOperator {
  std::string name;
  TxuFn F;
  TxuFn F_gamma;
  double lambda = 0.0;

  static HjbOperator impact(const ImpactParams& p);
  /// F = kappa(t, x) phi(gamma); lambda = 1/phi.singular_at.
  static HjbOperator separable(const KappaModel& kappa, const PhiModel& phi);
  static HjbOperator general(const GeneralF& f);
};

enum class HjbBoundary { linear_extrapolation, dirichlet_frozen };

struct HjbConfig {
  HjbOperator op;
  Grid1D grid;
  TimeMesh mesh;  // terminal time T = mesh.t_end()
  Field terminal;
  HjbBoundary boundary = HjbBoundary::linear_extrapolation;
  /// Relative to max(1, max |v|) of the previous slice.
  double newton_tol = 1e-10;
  int newton_max_iter = 100;
  /// A Newton update never shrinks 1 - lambda d_xx v below this fraction of its
  /// previous value.
  double barrier_gap = 0.01;
};

/// Discrete d_xx with the solver's boundary closure (linear extrapolation
/// copies the neighbouring interior value).
std::vector<double> hjb_curvature(std::span<const double> v, double dx, HjbBoundary boundary);

/// Implicit backward stepping v^n = v^{n+1} + dt F(t^n, x, d_xx v^n). Slices
/// are stored in increasing time; meta.backward is set. Throws StepFailure.
History hjb_solve_backward(const HjbConfig& cfg);

}  // namespace fnlpde
