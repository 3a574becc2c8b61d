#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fnlpde {

/// Uniform grid on [x_min, x_max] with n nodes.
class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n);

  /// Grid with spacing dx, n = round((x_max - x_min)/dx) + 1.
  static Grid1D with_spacing(double x_min, double x_max, double dx);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  double x(std::size_t i) const noexcept {
    return i + 1 == n_ ? x_max_ : x_min_ + static_cast<double>(i) * dx_;
  }
  std::vector<double> nodes() const;

  /// Index range [first, last] of the nodes in the central `fraction` of the
  /// domain.
  std::pair<std::size_t, std::size_t> inner_range(double fraction) const;

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

enum class Grading { uniform, geometric_toward_end };

/// Strictly increasing list of time levels.
class TimeMesh {
 public:
  explicit TimeMesh(std::vector<double> times, Grading grading = Grading::uniform,
                    double ratio = 1.0);

  static TimeMesh uniform(double t_start, double t_end, std::size_t n_steps);

  /// Step sizes shrink geometrically by `ratio` toward t_end.
  static TimeMesh geometric_toward_end(double t_start, double t_end,
                                       std::size_t n_steps, double ratio);

  double t_start() const noexcept { return times_.front(); }
  double t_end() const noexcept { return times_.back(); }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  std::size_t steps() const noexcept { return times_.size() - 1; }
  double step(std::size_t k) const { return times_.at(k + 1) - times_.at(k); }
  Grading grading() const noexcept { return grading_; }
  double ratio() const noexcept { return ratio_; }

  /// Index of the mesh time equal to t within `tol`, or npos.
  std::size_t find(double t, double tol = 1e-12) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<double> times_;
  Grading grading_;
  double ratio_;
};

/// Values on a grid at a single time.
struct Field {
  Field(Grid1D g, std::vector<double> v);

  /// Samples f at every grid node.
  template <typename F>
  static Field sample(const Grid1D& g, F&& f) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g.x(i));
    return Field(g, std::move(v));
  }

  Grid1D grid;
  std::vector<double> values;
};

struct SolveDiagnostics {
  std::vector<int> newton_iterations;  // one entry per time step, solve order
  std::vector<double> residuals;       // final max-norm residual per step
  std::vector<std::string> warnings;
  bool backward = false;
};

/// Solution slices at every mesh time, stored in increasing time order.
struct History {
  TimeMesh mesh;
  std::vector<Field> slices;
  SolveDiagnostics meta;

  const Grid1D& grid() const { return slices.front().grid; }
  /// Slice the solve started from: first for forward runs, last for backward.
  const Field& start_slice() const {
    return meta.backward ? slices.back() : slices.front();
  }
  void validate() const;
};

/// Discrete second derivative: central stencil inside, second-order
/// one-sided stencils at the two endpoints (n == 3 reuses the only interior
/// value).
Field second_difference(const Field& f);
std::vector<double> second_difference(std::span<const double> f, double dx);

/// Thomas algorithm. lower/upper have size n-1. Throws SingularSystem on a
/// zero pivot.
std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs);

/// Piecewise-linear interpolation; throws OutOfDomain outside the grid.
double interpolate_field(const Field& f, double x);
double interpolate(const Grid1D& g, std::span<const double> values, double x);

/// Trapezoidal integral of nodal values.
double trapezoid(const Grid1D& g, std::span<const double> values);

}  // namespace fnlpde
