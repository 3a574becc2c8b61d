#include "fnlpde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fnlpde/errors.hpp"

namespace fnlpde {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::SingularSystem: return "singular-system";
    case ErrorCode::OutOfDomain: return "out-of-domain";
    case ErrorCode::SingularPoint: return "singular-point";
    case ErrorCode::HypothesisViolated: return "hypothesis-violated";
    case ErrorCode::SingularDomain: return "singular-domain";
    case ErrorCode::StepFailure: return "step-failure";
    case ErrorCode::NonConvexPrimal: return "non-convex-primal";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::BracketFailure: return "bracket-failure";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::NoSample: return "no-sample";
    case ErrorCode::ModelError: return "model-error";
    case ErrorCode::ConfigError: return "config-error";
  }
  return "unknown";
}

Grid1D::Grid1D(double x_min, double x_max, std::size_t n)
    : x_min_(x_min), x_max_(x_max), n_(n), dx_(0.0) {
  require(n >= 3, ErrorCode::InvalidArgument, "Grid1D needs at least 3 nodes");
  require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min,
          ErrorCode::InvalidArgument, "Grid1D needs finite x_min < x_max");
  dx_ = (x_max - x_min) / static_cast<double>(n - 1);
}

Grid1D Grid1D::with_spacing(double x_min, double x_max, double dx) {
  require(dx > 0.0, ErrorCode::InvalidArgument, "grid spacing must be positive");
  const double cells = std::round((x_max - x_min) / dx);
  require(cells >= 2.0, ErrorCode::InvalidArgument, "grid spacing too coarse");
  return Grid1D(x_min, x_max, static_cast<std::size_t>(cells) + 1);
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = x(i);
  return out;
}

std::pair<std::size_t, std::size_t> Grid1D::inner_range(double fraction) const {
  require(fraction > 0.0 && fraction <= 1.0, ErrorCode::InvalidArgument,
          "inner fraction must lie in (0, 1]");
  const double center = 0.5 * static_cast<double>(n_ - 1);
  const double half = 0.5 * fraction * static_cast<double>(n_ - 1);
  const auto first = static_cast<std::size_t>(std::ceil(center - half - 1e-9));
  const auto last = static_cast<std::size_t>(std::floor(center + half + 1e-9));
  return {first, std::min(last, n_ - 1)};
}

TimeMesh::TimeMesh(std::vector<double> times, Grading grading, double ratio)
    : times_(std::move(times)), grading_(grading), ratio_(ratio) {
  require(!times_.empty(), ErrorCode::InvalidArgument, "time mesh needs at least one level");
  require(ratio_ > 0.0 && ratio_ <= 1.0, ErrorCode::InvalidArgument,
          "geometric ratio must lie in (0, 1]");
  for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
    require(std::isfinite(times_[k]) && times_[k + 1] > times_[k],
            ErrorCode::InvalidArgument, "time mesh must be strictly increasing");
  }
}

TimeMesh TimeMesh::uniform(double t_start, double t_end, std::size_t n_steps) {
  require(n_steps >= 1 && t_end > t_start, ErrorCode::InvalidArgument,
          "uniform mesh needs t_end > t_start and n_steps >= 1");
  std::vector<double> t(n_steps + 1);
  const double h = (t_end - t_start) / static_cast<double>(n_steps);
  for (std::size_t k = 0; k <= n_steps; ++k) t[k] = t_start + static_cast<double>(k) * h;
  t.back() = t_end;
  return TimeMesh(std::move(t), Grading::uniform, 1.0);
}

TimeMesh TimeMesh::geometric_toward_end(double t_start, double t_end,
                                        std::size_t n_steps, double ratio) {
  require(n_steps >= 1 && t_end > t_start, ErrorCode::InvalidArgument,
          "graded mesh needs t_end > t_start and n_steps >= 1");
  require(ratio > 0.0 && ratio <= 1.0, ErrorCode::InvalidArgument,
          "geometric ratio must lie in (0, 1]");
  if (ratio == 1.0) {
    TimeMesh m = uniform(t_start, t_end, n_steps);
    m.grading_ = Grading::geometric_toward_end;
    return m;
  }
  const double span = t_end - t_start;
  const double h0 = span * (1.0 - ratio) / (1.0 - std::pow(ratio, static_cast<double>(n_steps)));
  std::vector<double> t(n_steps + 1);
  t[0] = t_start;
  double h = h0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    t[k] = t[k - 1] + h;
    h *= ratio;
  }
  t.back() = t_end;
  return TimeMesh(std::move(t), Grading::geometric_toward_end, ratio);
}

std::size_t TimeMesh::find(double t, double tol) const {
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (std::abs(times_[k] - t) <= tol) return k;
  }
  return npos;
}

Field::Field(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
  require(values.size() == grid.size(), ErrorCode::InvalidArgument,
          "field length does not match grid");
  for (double x : values) {
    require(std::isfinite(x), ErrorCode::NonFinite, "field contains non-finite values");
  }
}

void History::validate() const {
  require(slices.size() == mesh.size(), ErrorCode::InvalidArgument,
          "history needs one slice per mesh time");
  for (const auto& s : slices) {
    require(s.grid == slices.front().grid, ErrorCode::InvalidArgument,
            "history slices must share one grid");
  }
}

std::vector<double> second_difference(std::span<const double> f, double dx) {
  const std::size_t n = f.size();
  require(n >= 3, ErrorCode::InvalidArgument, "second difference needs n >= 3");
  for (double x : f) {
    require(std::isfinite(x), ErrorCode::NonFinite, "second difference of non-finite data");
  }
  const double inv = 1.0 / (dx * dx);
  std::vector<double> out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (f[i - 1] - 2.0 * f[i] + f[i + 1]) * inv;
  }
  if (n >= 4) {
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * inv;
  } else {
    out[0] = out[1];
    out[2] = out[1];
  }
  return out;
}

Field second_difference(const Field& f) {
  return Field(f.grid, second_difference(f.values, f.grid.dx()));
}

std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs) {
  const std::size_t n = diag.size();
  require(n >= 1 && rhs.size() == n && lower.size() + 1 == n && upper.size() + 1 == n,
          ErrorCode::InvalidArgument, "tridiagonal dimensions are inconsistent");
  std::vector<double> c(n), d(n);
  double pivot = diag[0];
  if (pivot == 0.0 || !std::isfinite(pivot)) {
    fail(ErrorCode::SingularSystem, "zero pivot at row 0");
  }
  c[0] = n > 1 ? upper[0] / pivot : 0.0;
  d[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - lower[i - 1] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      std::ostringstream os;
      os << "zero pivot at row " << i;
      fail(ErrorCode::SingularSystem, os.str());
    }
    c[i] = i + 1 < n ? upper[i] / pivot : 0.0;
    d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

double interpolate(const Grid1D& g, std::span<const double> values, double x) {
  if (!(x >= g.x_min() && x <= g.x_max())) {
    std::ostringstream os;
    os << "x = " << x << " outside [" << g.x_min() << ", " << g.x_max() << "]";
    fail(ErrorCode::OutOfDomain, os.str());
  }
  const double s = (x - g.x_min()) / g.dx();
  const auto nearest = static_cast<std::size_t>(std::llround(s));
  if (nearest < g.size() && g.x(nearest) == x) return values[nearest];
  auto i = static_cast<std::size_t>(s);
  if (i >= g.size() - 1) i = g.size() - 2;
  const double w = s - static_cast<double>(i);
  if (w == 0.0) return values[i];
  if (w == 1.0) return values[i + 1];
  return (1.0 - w) * values[i] + w * values[i + 1];
}

double interpolate_field(const Field& f, double x) {
  return interpolate(f.grid, f.values, x);
}

double trapezoid(const Grid1D& g, std::span<const double> values) {
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * g.dx();
}

}  // namespace fnlpde
