#pragma once

#include <vector>

#include "fnlpde/grid.hpp"
#include "fnlpde/hjb.hpp"
#include "fnlpde/models.hpp"

namespace fnlpde {

struct Violation {
  double t = 0.0;
  double x = 0.0;
  double magnitude = 0.0;
};

/// Discrete monotonicity of g = theta t^(rho theta) kappa phi(u) in time.
struct MonotonicityReport {
  double rho_used = 0.0;
  int theta = 1;
  double tolerance = 0.0;
  /// Most negative normalized increment (g_{k+1} - g_k) / max(|g_k|, |g_{k+1}|, 1e-30).
  double min_increment = 0.0;
  std::vector<Violation> violations;
  /// Fraction of (step, node) pairs skipped by the support collar.
  double collar_excluded = 0.0;
  bool passed() const { return violations.empty(); }
};

struct MonotonicityOptions {
  double tol = 1e-6;
  /// Nodes within this many cells of a point where u < 1e-8 max u are skipped.
  double collar = 3.0;
  /// t is measured from this origin in the factor t^(rho theta).
  double time_origin = 0.0;
};

MonotonicityReport check_monotonicity(const History& h, const PhiModel& phi,
                                      const KappaModel& kappa, double rho,
                                      const MonotonicityOptions& opt = {});
MonotonicityReport check_monotonicity(const History& h, const GeneralF& f, double rho,
                                      const MonotonicityOptions& opt = {});

/// Smallest rho (bisection width 1e-3) with zero violations, searched in
/// [0, 4 sufficient_rho]. Throws BracketFailure when the upper end fails.
double empirical_min_rho(const History& h, const PhiModel& phi, const KappaModel& kappa,
                         const MonotonicityOptions& opt = {});

/// The certified rho for a run: structural constant sampled from the history,
/// kappa bounds over [origin, t_end].
double certified_rho(const History& h, const PhiModel& phi, const KappaModel& kappa,
                     double time_origin = 0.0);

struct ComparisonReport {
  double tolerance = 0.0;
  double min_difference = 0.0;  // min over all (t, x) of A - B
  std::vector<Violation> crossings;
  bool passed() const { return crossings.empty(); }
};

/// A and B must share grid and mesh, with A >= B on the starting slice
/// (Precondition error otherwise).
ComparisonReport check_comparison(const History& a, const History& b, double tol = 1e-8);

struct EpsilonReport {
  double lambda = 0.0;
  double inner_fraction = 0.5;
  std::vector<double> tau_list;
  std::vector<double> upper_margin;  // min of 1 - lambda d_xx v
  std::vector<double> lower_bound;   // min of d_xx v
};

/// Extrema over {t <= T - tau} x inner region of a backward history.
EpsilonReport interior_bounds(const History& h, double lambda, const std::vector<double>& tau_list,
                              double inner_fraction = 0.5);

/// min of 1/(1 - lambda d_xx v) over {t <= T - tau} x inner region. Throws
/// NonConvexPrimal if 1 - lambda d_xx v <= 0 there.
double positivity_margin(const History& h, double lambda, double tau, double inner_fraction = 0.5);

/// Pointwise lower bound kept in time: min u0 >= M' should give min u >= M.
struct LowerBoundReport {
  double M = 0.0;
  double M_prime = 0.0;
  double initial_min = 0.0;
  double overall_min = 0.0;
  bool premise = false;
  bool conclusion = false;
  bool passed() const { return !premise || conclusion; }
};

/// Minima are taken over the inner region; the starting slice is the premise.
/// Both comparisons allow a slack of `tol`.
LowerBoundReport lower_bound_propagation(const History& u, double M, double M_prime,
                                         double inner_fraction = 0.5, double tol = 0.0);

/// Slices replaced by their second differences, restricted to the central
/// `inner_fraction` of the grid.
History curvature_history(const History& v, double inner_fraction = 1.0);

/// Companion run with terminal curvature max(d_xx v_T, M'), solved with the
/// same operator and mesh.
struct CompanionReport {
  double M = 0.0;
  double M_prime = 0.0;
  LowerBoundReport lower;            // on the companion curvature
  ComparisonReport ordering;         // companion curvature above the base curvature
  EpsilonReport companion_bounds;
  bool passed() const { return lower.passed() && ordering.passed(); }
};

struct CompanionRun {
  History companion;
  CompanionReport report;
};

CompanionRun supersolution_companion(const HjbConfig& base, const History& base_run, double M,
                                     double M_prime, const std::vector<double>& tau_list,
                                     double inner_fraction = 0.5, double tol = 1e-8);

}  // namespace fnlpde
