#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fnlpde/estimates.hpp"
#include "fnlpde/hjb.hpp"
#include "fnlpde/legendre.hpp"
#include "fnlpde/montecarlo.hpp"
#include "fnlpde/pme.hpp"
#include "fnlpde/rng.hpp"
#include "fnlpde/scenario.hpp"

namespace py = pybind11;
using namespace fnlpde;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

Field field_on(const Grid1D& g, const Array& values) {
  auto v = to_vec(values);
  if (v.size() != g.size()) throw py::value_error("values do not match the grid size");
  return Field(g, std::move(v));
}

py::dict history_dict(const History& h) {
  const std::size_t nt = h.slices.size(), nx = h.grid().size();
  Array values({static_cast<py::ssize_t>(nt), static_cast<py::ssize_t>(nx)});
  auto out = values.mutable_unchecked<2>();
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t i = 0; i < nx; ++i) out(k, i) = h.slices[k].values[i];
  }
  py::dict d;
  d["t"] = to_array(h.mesh.times());
  d["x"] = to_array(h.grid().nodes());
  d["values"] = values;
  d["newton_iterations"] = h.meta.newton_iterations;
  d["warnings"] = h.meta.warnings;
  return d;
}

History history_from(const Array& t, const Array& x, const Array& values) {
  const auto times = to_vec(t);
  const auto nodes = to_vec(x);
  if (values.ndim() != 2 || static_cast<std::size_t>(values.shape(0)) != times.size() ||
      static_cast<std::size_t>(values.shape(1)) != nodes.size()) {
    throw py::value_error("values must have shape (len(t), len(x))");
  }
  const Grid1D g(nodes.front(), nodes.back(), nodes.size());
  History h{TimeMesh(times), {}, {}};
  auto v = values.unchecked<2>();
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) row[i] = v(k, i);
    h.slices.emplace_back(g, std::move(row));
  }
  return h;
}

ImpactParams impact_from(double a, double b, double c, double p1, double p2, double lambda, double sigma) {
  ImpactParams p;
  p.a = a;
  p.b = b;
  p.c = c;
  p.p1 = p1;
  p.p2 = p2;
  p.lambda = lambda;
  p.set_sigma_constant(sigma);
  return p;
}

TimeMesh mesh_from(double t0, double t1, std::size_t steps, double ratio) {
  return ratio == 1.0 ? TimeMesh::uniform(t0, t1, steps) : TimeMesh::geometric_toward_end(t0, t1, steps, ratio);
}

py::dict scenario_dict(const ScenarioResult& r) {
  py::dict d;
  d["exit_code"] = r.exit_code;
  d["diagnostic"] = r.diagnostic;
  d["report_json"] = r.report_json;
  return d;
}

Config config_from(const std::string& preset, const std::string& text,
                   const std::vector<std::string>& overrides) {
  Config cfg = preset.empty() ? Config{} : preset_config(preset);
  if (!text.empty()) cfg.merge(Config::parse(text));
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_fnlpde, m) {
  m.doc() = "Solvers and certification checks for degenerate and singular parabolic equations.";
  m.attr("__version__") = library_version();

  // Raised with a `code` attribute naming the ErrorCode.
  static py::handle error_type = py::exception<Error>(m, "Error", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = error_type(e.what());
      err.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  m.def("barenblatt", &barenblatt_exact, py::arg("m"), py::arg("C"), py::arg("t"), py::arg("x"));

  m.def("impact_F",
        [](double gamma, double a, double b, double c, double p1, double p2, double lambda, double sigma, int order) {
          return impact_F_eval(impact_from(a, b, c, p1, p2, lambda, sigma), 0.0, 0.0, gamma, order);
        },
        py::arg("gamma"), py::arg("a") = -2.0, py::arg("b") = 1.0, py::arg("c") = 1.0, py::arg("p1") = 1.0,
        py::arg("p2") = 2.0, py::arg("lam") = 1.0, py::arg("sigma") = 1.0, py::arg("order") = 0);

  m.def("solve_pme",
        [](const Array& initial, double x_min, double x_max, double t_start, double t_end, std::size_t steps,
           double m_exp, double kappa, bool neumann) {
          const Grid1D g(x_min, x_max, static_cast<std::size_t>(initial.size()));
          const PhiModel phi = m_exp == 1.0 ? PhiModel::linear(1.0) : PhiModel::power(m_exp);
          PmeConfig cfg{phi, KappaModel::constant(kappa), g, TimeMesh::uniform(t_start, t_end, steps),
                        field_on(g, initial),
                        neumann ? PmeBoundary::neumann_zero : PmeBoundary::dirichlet_zero};
          return history_dict(pme_solve(cfg));
        },
        "Forward solve of d_t u = d_xx(kappa u^m) on a uniform grid.", py::arg("initial"), py::arg("x_min"),
        py::arg("x_max"), py::arg("t_start"), py::arg("t_end"), py::arg("steps"), py::arg("m") = 2.0,
        py::arg("kappa") = 1.0, py::arg("neumann") = false);

  m.def("solve_hjb_impact",
        [](const Array& terminal, double x_min, double x_max, double t_start, double t_end, std::size_t steps,
           double ratio, double a, double b, double c, double p1, double p2, double lambda, double sigma) {
          const Grid1D g(x_min, x_max, static_cast<std::size_t>(terminal.size()));
          HjbConfig cfg{HjbOperator::impact(impact_from(a, b, c, p1, p2, lambda, sigma)), g,
                        mesh_from(t_start, t_end, steps, ratio), field_on(g, terminal)};
          return history_dict(hjb_solve_backward(cfg));
        },
        "Backward solve of d_t v + F(d_xx v) = 0 with the market-impact F.", py::arg("terminal"),
        py::arg("x_min"), py::arg("x_max"), py::arg("t_start"), py::arg("t_end"), py::arg("steps"),
        py::arg("ratio") = 1.0, py::arg("a") = -2.0, py::arg("b") = 1.0, py::arg("c") = 1.0, py::arg("p1") = 1.0,
        py::arg("p2") = 2.0, py::arg("lam") = 1.0, py::arg("sigma") = 1.0);

  m.def("conjugate",
        [](const Array& x, const Array& f, const Array& y, bool refine) {
          const auto s = conjugate_nodes(to_vec(x), to_vec(f), to_vec(y), refine);
          return py::make_tuple(to_array(s.values), to_array(s.map));
        },
        "Discrete convex conjugate max_i (x_i y - f_i) and its maximizer.", py::arg("x"), py::arg("f"),
        py::arg("y"), py::arg("refine") = false);

  m.def("biconjugate_error",
        [](const Array& f, double x_min, double x_max) {
          const Grid1D g(x_min, x_max, static_cast<std::size_t>(f.size()));
          return biconjugate_error(field_on(g, f));
        },
        py::arg("f"), py::arg("x_min"), py::arg("x_max"));

  m.def("dual_curvature",
        [](const Array& v, double x_min, double x_max, double lambda, std::size_t ny) {
          const Grid1D g(x_min, x_max, static_cast<std::size_t>(v.size()));
          const Field f = field_on(g, v);
          const Grid1D yg = default_y_grid(f, lambda, ny);
          const auto d = dual_curvature(f, lambda, yg);
          py::dict out;
          out["y"] = to_array(yg.nodes());
          out["from_conjugate"] = to_array(d.from_conjugate.values);
          out["reciprocal"] = to_array(d.reciprocal);
          out["max_discrepancy"] = d.max_discrepancy;
          return out;
        },
        py::arg("v"), py::arg("x_min"), py::arg("x_max"), py::arg("lam") = 1.0, py::arg("ny") = 201);

  m.def("check_monotonicity",
        [](const Array& t, const Array& x, const Array& values, double m_exp, double rho, double tol) {
          const History h = history_from(t, x, values);
          const auto r = check_monotonicity(h, PhiModel::power(m_exp), KappaModel::constant(1.0), rho,
                                            MonotonicityOptions{tol});
          py::dict out;
          out["violations"] = r.violations.size();
          out["min_increment"] = r.min_increment;
          out["passed"] = r.passed();
          return out;
        },
        "Monotonicity of t^rho u^m in time for kappa = 1.", py::arg("t"), py::arg("x"), py::arg("values"),
        py::arg("m") = 2.0, py::arg("rho") = 4.0, py::arg("tol") = 1e-6);

  m.def("check_comparison",
        [](const Array& t, const Array& x, const Array& a, const Array& b, double tol) {
          return check_comparison(history_from(t, x, a), history_from(t, x, b), tol).min_difference;
        },
        "min over all nodes and times of A - B.", py::arg("t"), py::arg("x"), py::arg("a"), py::arg("b"),
        py::arg("tol") = 1e-8);

  m.def("normal", &normal_at, "Standard normal for (seed, stream, step).", py::arg("seed"), py::arg("stream"),
        py::arg("step"));

  m.def("preset_names", &preset_names);
  m.def("preset_text", &preset_text, py::arg("name"));

  m.def("execute",
        [](const std::string& preset, const std::string& text, const std::vector<std::string>& overrides) {
          const Config cfg = config_from(preset, text, overrides);
          ScenarioResult r;
          {
            py::gil_scoped_release release;
            r = execute_scenario(cfg);
          }
          return scenario_dict(r);
        },
        "Runs a scenario in memory; returns exit_code, diagnostic and report_json.", py::arg("preset") = "",
        py::arg("text") = "", py::arg("overrides") = std::vector<std::string>{});

  m.def("run",
        [](const std::string& out_dir, const std::string& preset, const std::string& text,
           const std::vector<std::string>& overrides) {
          const Config cfg = config_from(preset, text, overrides);
          ScenarioResult r;
          {
            py::gil_scoped_release release;
            r = run_scenario(cfg, out_dir);
          }
          return scenario_dict(r);
        },
        "Runs a scenario and writes history.csv, report.json and run_meta.json.", py::arg("out_dir"),
        py::arg("preset") = "", py::arg("text") = "", py::arg("overrides") = std::vector<std::string>{});
}
