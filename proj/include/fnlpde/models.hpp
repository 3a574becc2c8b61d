#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fnlpde {

using ScalarFn = std::function<double(double)>;
using TxFn = std::function<double(double, double)>;
using TxuFn = std::function<double(double, double, double)>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Box of (t, x) sample points used by the hypothesis validators.
struct SampleBox {
  double t_min = 0.0;
  double t_max = 1.0;
  double x_min = -5.0;
  double x_max = 5.0;
  std::size_t nt = 21;
  std::size_t nx = 101;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t a = 0; a < nt; ++a) {
      const double t = nt == 1 ? t_min : t_min + (t_max - t_min) * a / double(nt - 1);
      for (std::size_t b = 0; b < nx; ++b) {
        const double x = nx == 1 ? x_min : x_min + (x_max - x_min) * b / double(nx - 1);
        fn(t, x);
      }
    }
  }
};

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<std::string> notes;
  bool regularity_applicable = false;

  void add(std::string name, bool passed, std::string detail = {});
  bool all_passed() const;
  const ValidationCheck* find(const std::string& name) const;
};

/// The nonlinearity phi. Power models phi(u) = u^m; custom models carry
/// phi and its first two derivatives. Signed-domain models (the gamma-part of
/// a pricing nonlinearity) accept negative arguments.
struct PhiModel {
  enum class Kind { power, custom };

  Kind kind = Kind::power;
  std::string name;
  double exponent = 1.0;
  ScalarFn phi, dphi, ddphi;
  int theta = 1;
  double m_struct = 0.0;
  bool signed_domain = false;
  /// phi blows up as the argument approaches this value from below.
  double singular_at = kInf;

  static PhiModel power(double exponent);
  static PhiModel custom(std::string name, ScalarFn phi, ScalarFn dphi, ScalarFn ddphi,
                         bool signed_domain = false, double singular_at = kInf);
  /// phi(u) = slope * u on the whole line.
  static PhiModel linear(double slope = 1.0);
};

double phi_eval(const PhiModel& model, double u, int order);

struct Structure {
  int theta = 1;
  double m_struct = 0.0;
};

/// Sign theta and infimum of theta * phi phi'' / phi'^2. Power models get the
/// exact constant (m-1)/m. For custom models the samples are extended by a
/// geometric probe toward u = 0, and an infimum below `floor` counts as zero.
Structure structural_theta_m(const PhiModel& model, std::span<const double> u_samples,
                             double floor = 1e-6);

/// phi(0) = 0, monotonicity and the structural inequality on (0, u_max].
ValidationReport validate_phi(const PhiModel& model, double u_max, std::size_t n_samples = 200);

/// Space-time coefficient kappa(t, x) with declared bound L.
struct KappaModel {
  std::string name;
  TxFn kappa, dt_kappa, dtt_kappa;
  TxFn dx_kappa;  // optional; finite differences are used when empty
  double L = 1.0;
  double dx_kappa_bound = 0.0;
  bool time_independent = false;

  double operator()(double t, double x) const { return kappa(t, x); }

  static KappaModel constant(double value);
  /// kappa = exp(alpha t) (1 + beta sin x), |beta| < 1.
  static KappaModel exp_sin(double alpha, double beta, double L);
  /// Bilinear table on a (t, x) tensor grid, values stored t-major.
  static KappaModel table(std::vector<double> t_nodes, std::vector<double> x_nodes,
                          std::vector<double> values, double L);
};

ValidationReport validate_kappa(const KappaModel& model, const SampleBox& box);

/// Bounds c1 >= |t dt(kappa)/kappa| and c2 >= |t dt(t dt(kappa)/kappa)| on [0, T].
struct RhoBounds {
  double c1 = 0.0;
  double c2 = 0.0;
};

RhoBounds kappa_rho_bounds(const KappaModel& model, double T);

/// Certified monotonicity exponent: rho = c1 + max((1 + margin + c1)/m, c2/margin)
/// with c1 = T L^2 and c2 = T L^2 + T^2 (L^2 + L^4). This keeps Q >= margin and
/// rho~ Q >= c2 pointwise.
double sufficient_rho(double m_struct, double L, double T, int theta, double margin = 1.0);
double sufficient_rho_from_bounds(double m_struct, RhoBounds bounds, double margin = 1.0);

/// General nonlinearity F(t, x, u) of the non-separable dual equation.
struct GeneralF {
  std::string name;
  TxuFn F, F_u, F_t, F_uu, F_ut;
  int theta = 1;
  double m_struct = 0.0;
  /// Bound on |F_t/F|, |(F_t/F)_t| and |F_ut/F_u|.
  double ratio_bounds = 0.0;

  static GeneralF separable(const KappaModel& kappa, const PhiModel& phi);
};

/// F(t,x,0) = 0, monotonicity in u, the structural inequality on [u_min, u_max]
/// and the declared ratio bounds.
ValidationReport validate_general_F(const GeneralF& f, const SampleBox& box, double u_min,
                                    double u_max, std::size_t nu = 64);

/// c1 = T B and c2 = 3 T B + T^2 B with B = ratio_bounds.
RhoBounds general_rho_bounds(const GeneralF& f, double T);

/// Constants of the market-impact pricing nonlinearity
///   F = sigma^2/2 (a + b (1 - lambda g)^-p1 + c (1 - lambda g)^-p2).
struct ImpactParams {
  double a = -2.0;
  double b = 1.0;
  double c = 1.0;
  double p1 = 1.0;
  double p2 = 2.0;
  double lambda = 1.0;
  std::string sigma_name = "constant";
  TxFn sigma;
  TxFn sigma_dt;   // optional, zero when empty
  TxFn sigma_dtt;  // optional, zero when empty
  double sigma_inf = 1.0;
  double sigma_lip = 0.0;

  /// sigma(t, x) = s.
  void set_sigma_constant(double s);
  /// sigma(t, x) = s0 (1 + beta sin x), |beta| < 1.
  void set_sigma_local_sin(double s0, double beta);

  double sigma_sq_half(double t, double x) const;
};

/// Order 0: F(t, x, gamma). Order 1: dF/dgamma. Throws SingularDomain when
/// lambda * gamma >= 1.
double impact_F_eval(const ImpactParams& p, double t, double x, double gamma, int order);

/// Curvature-side form Fbar(t, x, z) = lambda sigma^2/2 (a + b z^p1 + c z^p2)
/// with z = 1/(1 - lambda gamma); order 1 gives dFbar/dz. It drives the
/// conjugate in time-to-maturity.
double impact_dual_F(const ImpactParams& p, double t, double x, double z, int order);

ValidationReport validate_impact_params(const ImpactParams& p, const SampleBox& box = {});

/// gamma-part of F as a signed-domain phi model (singular at 1/lambda).
PhiModel impact_phi_model(const ImpactParams& p);
/// kappa = sigma^2 / 2, with L derived from sigma_inf and sampled sup over `box`.
KappaModel impact_kappa_model(const ImpactParams& p, const SampleBox& box = {});

}  // namespace fnlpde
