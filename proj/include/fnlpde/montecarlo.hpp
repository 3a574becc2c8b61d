#pragma once

#include <cstdint>
#include <vector>

#include "fnlpde/grid.hpp"
#include "fnlpde/models.hpp"

namespace fnlpde {

struct MCConfig {
  std::size_t n_paths = 100000;
  std::size_t substeps = 1;  // Euler steps per mesh interval
  std::uint64_t seed = 0;
  double t0 = 0.0;
  double x0 = 0.0;
  unsigned threads = 1;
};

struct PathSamples {
  std::vector<double> x_T;
  std::vector<double> discount;  // exp(-int d_t kappa / kappa), left-endpoint rule
  std::vector<std::uint8_t> escaped;
  std::size_t steps = 0;
};

/// Euler-Maruyama paths of dX = sigma dW with sigma^2 = 2 kappa phi'(d_xx v),
/// the curvature interpolated linearly from h in x and between mesh slices in
/// t. Paths leaving the grid are absorbed and flagged. Output does not depend
/// on `threads`.
PathSamples simulate_paths(const History& h, const KappaModel& kappa, const PhiModel& phi,
                           const MCConfig& cfg);

struct MCResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_effective = 0;
  double pde_value = 0.0;
  double z_score = 0.0;
  double escaped_fraction = 0.0;
  double singular_hit_fraction = 0.0;
  /// Set when more than 1% of the paths escaped.
  bool bias_flag = false;
  /// Rounding resolution of kappa phi(d_xx v) read from h; smaller
  /// differences give z_score = 0.
  double resolution = 0.0;
};

/// Discounted mean of kappa phi(d_xx v)(T, X_T) over non-escaped paths,
/// compared with the same quantity read from h at (t0, x0).
MCResult representation_check(const History& h, const KappaModel& kappa, const PhiModel& phi,
                              const MCConfig& cfg);

/// Deterministic pairwise sum.
double pairwise_sum(const double* v, std::size_t n);

}  // namespace fnlpde
