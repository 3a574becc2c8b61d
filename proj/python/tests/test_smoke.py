import math

import numpy as np
import pytest

import fnlpde


def test_impact_value_and_threshold():
    assert fnlpde.impact_F(0.5) == pytest.approx(2.0)
    assert fnlpde.impact_F(0.0) == 0.0
    with pytest.raises(fnlpde.Error) as info:
        fnlpde.impact_F(1.0)
    assert info.value.code == "singular-domain"


def test_pme_barenblatt():
    x = np.linspace(-6.0, 6.0, 601)
    u0 = np.array([fnlpde.barenblatt(2.0, 1.0, 1.0, xi) for xi in x])
    h = fnlpde.solve_pme(u0, -6.0, 6.0, 1.0, 2.0, 100)
    assert h["values"].shape == (101, 601)
    exact = np.array([fnlpde.barenblatt(2.0, 1.0, 2.0, xi) for xi in x])
    assert np.trapezoid(np.abs(h["values"][-1] - exact), x) < 1e-2
    mono = fnlpde.check_monotonicity(h["t"], h["x"], h["values"], m=2.0, rho=4.0)
    assert mono["passed"]


def test_comparison_of_ordered_runs():
    x = np.linspace(-5.0, 5.0, 201)
    lo = fnlpde.solve_pme(np.exp(-x * x), -5.0, 5.0, 0.0, 0.5, 25)
    hi = fnlpde.solve_pme(2.0 * np.exp(-x * x), -5.0, 5.0, 0.0, 0.5, 25)
    assert fnlpde.check_comparison(hi["t"], hi["x"], hi["values"], lo["values"]) >= -1e-8


def test_hjb_quadratic_exact():
    x = np.linspace(-4.0, 4.0, 801)
    h = fnlpde.solve_hjb_impact(0.25 * x * x, -4.0, 4.0, 0.0, 1.0, 20)
    inner = slice(200, 601)
    for t, v in zip(h["t"], h["values"]):
        exact = 0.25 * x * x + (1.0 - t) * 2.0
        assert np.max(np.abs(v[inner] - exact[inner])) < 1e-8


def test_conjugate_and_reciprocal_rule():
    x = np.linspace(-3.0, 3.0, 61)
    y = np.linspace(-2.0, 2.0, 11)
    values, argx = fnlpde.conjugate(x, 0.5 * x * x, y, refine=True)
    np.testing.assert_allclose(values, 0.5 * y * y, atol=1e-12)
    np.testing.assert_allclose(argx, y, atol=1e-12)
    assert fnlpde.biconjugate_error(np.cosh(x), -3.0, 3.0) <= 1e-8
    d = fnlpde.dual_curvature(0.25 * x * x, -3.0, 3.0)
    assert d["max_discrepancy"] < 1e-3


def test_normal_is_deterministic():
    assert fnlpde.normal(1, 2, 3) == fnlpde.normal(1, 2, 3)
    assert math.isfinite(fnlpde.normal(0, 0, 0))


def test_presets_and_scenarios(tmp_path):
    assert "quadratic-hjb" in fnlpde.preset_names()
    res = fnlpde.execute("quadratic-hjb", overrides=["scenario=hjb-backward"])
    assert res["exit_code"] == 0
    assert fnlpde.report(res)["exact"]["max_error"] < 1e-6

    text = fnlpde.preset_text("quadratic-hjb").replace("lambda = 1", "")
    bad = fnlpde.execute(text=text)
    assert bad["exit_code"] == 3
    assert "impact.lambda" in bad["diagnostic"]

    out = fnlpde.run(str(tmp_path), "heat-mc", overrides=["mc.paths=2000"])
    assert out["exit_code"] == 0
    for name in ("history.csv", "report.json", "run_meta.json"):
        assert (tmp_path / name).exists()
