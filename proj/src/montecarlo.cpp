#include "fnlpde/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "fnlpde/errors.hpp"
#include "fnlpde/rng.hpp"

namespace fnlpde {

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

namespace {

struct SubStep {
  double t;
  double dt;
  std::size_t k;  // mesh interval
  double w;       // position of t inside the interval
};

struct Surface {
  const History& h;
  std::vector<std::vector<double>> curvature;

  explicit Surface(const History& hist) : h(hist) {
    curvature.reserve(h.slices.size());
    for (const auto& s : h.slices) curvature.push_back(second_difference(s).values);
  }

  double gamma(std::size_t k, double w, double x) const {
    const double g0 = interpolate(h.grid(), curvature[k], x);
    if (w == 0.0) return g0;
    return (1.0 - w) * g0 + w * interpolate(h.grid(), curvature[k + 1], x);
  }

  // Interval index and weight for an arbitrary time in [t_start, t_end].
  std::pair<std::size_t, double> locate(double t) const {
    const auto& times = h.mesh.times();
    const std::size_t hit = h.mesh.find(t, 1e-12 * std::max(1.0, std::abs(t)));
    if (hit != TimeMesh::npos) {
      return hit + 1 == times.size() ? std::pair{hit - 1, 1.0} : std::pair{hit, 0.0};
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
    return {k, (t - times[k]) / (times[k + 1] - times[k])};
  }
};

std::vector<SubStep> schedule(const History& h, double t0, std::size_t substeps) {
  const auto& times = h.mesh.times();
  std::vector<SubStep> out;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    if (times[k + 1] <= t0 + 1e-12 * std::max(1.0, std::abs(t0))) continue;
    const double start = std::max(times[k], t0);
    const double dt = (times[k + 1] - start) / static_cast<double>(substeps);
    for (std::size_t j = 0; j < substeps; ++j) {
      const double t = start + static_cast<double>(j) * dt;
      out.push_back({t, dt, k, (t - times[k]) / (times[k + 1] - times[k])});
    }
  }
  return out;
}

void check_config(const History& h, const MCConfig& cfg) {
  require(cfg.n_paths >= 1 && cfg.substeps >= 1, ErrorCode::InvalidArgument,
          "n_paths and substeps must be at least 1");
  require(h.slices.size() >= 2, ErrorCode::InvalidArgument, "history needs two slices");
  require(cfg.t0 >= h.mesh.t_start() && cfg.t0 < h.mesh.t_end(), ErrorCode::InvalidArgument,
          "start time must lie in [t_start, T)");
  require(cfg.x0 > h.grid().x_min() && cfg.x0 < h.grid().x_max(), ErrorCode::InvalidArgument,
          "start point must be interior");
}

double sigma_sq(const KappaModel& kappa, const PhiModel& phi, double t, double x, double gamma) {
  const double s2 = 2.0 * kappa(t, x) * phi_eval(phi, gamma, 1);
  if (!(s2 >= 0.0)) {
    std::ostringstream os;
    os << "negative diffusion coefficient " << s2 << " at t = " << t << ", x = " << x;
    fail(ErrorCode::ModelError, os.str());
  }
  return s2;
}

}  // namespace

PathSamples simulate_paths(const History& h, const KappaModel& kappa, const PhiModel& phi,
                           const MCConfig& cfg) {
  check_config(h, cfg);
  const Surface surf(h);
  const std::vector<SubStep> steps = schedule(h, cfg.t0, cfg.substeps);
  const double lo = h.grid().x_min(), hi = h.grid().x_max();

  PathSamples out;
  out.x_T.assign(cfg.n_paths, 0.0);
  out.discount.assign(cfg.n_paths, 1.0);
  out.escaped.assign(cfg.n_paths, 0);
  out.steps = steps.size();

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double x = cfg.x0;
      double log_disc = 0.0;
      for (std::size_t s = 0; s < steps.size(); ++s) {
        const SubStep& st = steps[s];
        const double s2 = sigma_sq(kappa, phi, st.t, x, surf.gamma(st.k, st.w, x));
        if (kappa.dt_kappa) log_disc += kappa.dt_kappa(st.t, x) / kappa(st.t, x) * st.dt;
        x += std::sqrt(s2 * st.dt) * normal_at(cfg.seed, p, s);
        if (x < lo || x > hi) {
          out.escaped[p] = 1;
          break;
        }
      }
      out.x_T[p] = x;
      out.discount[p] = std::exp(-log_disc);
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.n_paths)));
  if (threads == 1) {
    run_range(0, cfg.n_paths);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (cfg.n_paths + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t b = std::min(cfg.n_paths, w * chunk), e = std::min(cfg.n_paths, b + chunk);
    pool.emplace_back([&, w, b, e] {
      try {
        run_range(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

MCResult representation_check(const History& h, const KappaModel& kappa, const PhiModel& phi,
                              const MCConfig& cfg) {
  const PathSamples paths = simulate_paths(h, kappa, phi, cfg);
  const Surface surf(h);
  const double T = h.mesh.t_end();
  const std::size_t last = h.slices.size() - 1;

  std::vector<double> vals;
  vals.reserve(cfg.n_paths);
  std::size_t singular_hits = 0;
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    if (paths.escaped[p]) continue;
    const double x = paths.x_T[p];
    const double g = interpolate(h.grid(), surf.curvature[last], x);
    if (std::isfinite(phi.singular_at) && 1.0 - g / phi.singular_at < 1e-6) ++singular_hits;
    vals.push_back(paths.discount[p] * kappa(T, x) * phi_eval(phi, g, 0));
  }

  MCResult res;
  res.n_effective = vals.size();
  res.escaped_fraction =
      static_cast<double>(cfg.n_paths - vals.size()) / static_cast<double>(cfg.n_paths);
  res.bias_flag = res.escaped_fraction > 0.01;
  require(!vals.empty(), ErrorCode::NoSample, "every path escaped the grid");
  res.singular_hit_fraction = static_cast<double>(singular_hits) / static_cast<double>(vals.size());

  const auto n = static_cast<double>(vals.size());
  res.estimate = pairwise_sum(vals.data(), vals.size()) / n;
  if (vals.size() > 1) {
    std::vector<double> sq(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) sq[i] = (vals[i] - res.estimate) * (vals[i] - res.estimate);
    res.std_error = std::sqrt(pairwise_sum(sq.data(), sq.size()) / (n - 1.0) / n);
  }

  const auto [k, w] = surf.locate(cfg.t0);
  res.pde_value = kappa(cfg.t0, cfg.x0) * phi_eval(phi, surf.gamma(k, w, cfg.x0), 0);

  // Second differences carry rounding of order eps max|v| / dx^2.
  double v_max = 0.0;
  for (double v : h.slices[last].values) v_max = std::max(v_max, std::abs(v));
  const double dx = h.grid().dx();
  const double gamma_res = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, v_max) / (dx * dx);
  res.resolution = std::abs(kappa(cfg.t0, cfg.x0) * phi_eval(phi, surf.gamma(k, w, cfg.x0), 1)) * gamma_res;
  const double diff = res.estimate - res.pde_value;
  if (res.std_error > 0.0 && std::abs(diff) > res.resolution) res.z_score = diff / res.std_error;
  return res;
}

}  // namespace fnlpde
