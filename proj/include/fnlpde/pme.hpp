#pragma once

#include "fnlpde/errors.hpp"
#include "fnlpde/grid.hpp"
#include "fnlpde/models.hpp"

namespace fnlpde {

enum class PmeBoundary { dirichlet_zero, neumann_zero };

/// Forward problem d_t u = d_xx(kappa(t, x) phi(u)) with non-negative data.
struct PmeConfig {
  PhiModel phi;
  KappaModel kappa;
  Grid1D grid;
  TimeMesh mesh;
  Field initial;
  PmeBoundary boundary = PmeBoundary::dirichlet_zero;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
};

/// Thrown when a time step does not converge; carries the slices computed so
/// far (mesh truncated to them).
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, History partial)
      : Error(ErrorCode::StepFailure, what), partial_(std::move(partial)) {}

  const History& partial() const noexcept { return partial_; }

 private:
  History partial_;
};

/// Source-type self-similar solution of d_t u = d_xx(u^m), m > 1:
///   t^-a (C - k x^2 t^-2a)_+^(1/(m-1)),  a = 1/(m+1),  k = a (m-1)/(2m).
double barenblatt_exact(double m_exp, double C, double t, double x);

/// Backward-Euler stepping, damped Newton with tridiagonal Jacobian solves.
History pme_solve(const PmeConfig& cfg);

}  // namespace fnlpde
