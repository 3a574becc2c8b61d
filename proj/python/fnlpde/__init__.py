"""Python access to the fnlpde solvers, transforms and scenario runner."""

import json

from ._fnlpde import (
    Error,
    __version__,
    barenblatt,
    biconjugate_error,
    check_comparison,
    check_monotonicity,
    conjugate,
    dual_curvature,
    execute,
    impact_F,
    normal,
    preset_names,
    preset_text,
    run,
    solve_hjb_impact,
    solve_pme,
)


def report(result):
    """Parsed report.json of a result returned by `execute` or `run`."""
    return json.loads(result["report_json"]) if result["report_json"] else None


__all__ = [
    "Error",
    "__version__",
    "barenblatt",
    "biconjugate_error",
    "check_comparison",
    "check_monotonicity",
    "conjugate",
    "dual_curvature",
    "execute",
    "impact_F",
    "normal",
    "preset_names",
    "preset_text",
    "report",
    "run",
    "solve_hjb_impact",
    "solve_pme",
]
