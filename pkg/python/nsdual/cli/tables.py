"""Flat CSV tables written next to a report."""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..convex.utility import Utility
from ..solvers.models import LadderTrace, SolveReport

FLOAT_FORMAT = "%.17g"

ATOM_COLUMNS = ["x", "atom", "p", "X", "Y", "B", "utility", "conjugate"]
LADDER_COLUMNS = ["kind", "n", "V_n", "W_n"]
CURVE_COLUMNS = ["y", "value"]
SCATTER_COLUMNS = ["atom", "X", "Y"]

PLOT_FILES = {
    "ladder": "ladder.csv",
    "dual_curve": "dual_curve.csv",
    "scatter": "scatter.csv",
}


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def atoms_frame(report: SolveReport, probabilities: Sequence[float], utility: Optional[Utility] = None) -> pd.DataFrame:
    """Per-atom ``X*``, ``Y*``, ``B``, ``U(X* - B)`` and ``Ũ(Y*)``."""
    X = np.asarray(report.X, dtype=float)
    Y = np.asarray(report.dual.Y, dtype=float)
    B = np.asarray(report.B, dtype=float)
    if utility is not None:
        with np.errstate(all="ignore"):
            u = np.asarray(utility.value(X - B), dtype=float)
            u_conj = np.asarray(utility.conjugate().value(Y), dtype=float)
    else:
        u = np.full(X.shape, np.nan)
        u_conj = np.full(X.shape, np.nan)
    return pd.DataFrame(
        {
            "x": report.x,
            "atom": list(report.atoms),
            "p": np.asarray(probabilities, dtype=float),
            "X": X,
            "Y": Y,
            "B": B,
            "utility": u,
            "conjugate": u_conj,
        },
        columns=ATOM_COLUMNS,
    )


def ladder_frame(traces: Sequence[Optional[LadderTrace]]) -> pd.DataFrame:
    rows: List[Dict[str, object]] = []
    for trace in traces:
        if trace is None:
            continue
        for point in trace.points:
            rows.append(
                {
                    "kind": trace.kind.value,
                    "n": point.n,
                    "V_n": np.nan if point.primal is None else point.primal,
                    "W_n": point.dual,
                }
            )
    return pd.DataFrame(rows, columns=LADDER_COLUMNS)


def curve_frame(ys: Sequence[float], values: Sequence[float]) -> pd.DataFrame:
    return pd.DataFrame({"y": list(ys), "value": list(values)}, columns=CURVE_COLUMNS)


def scatter_frame(report: Optional[SolveReport]) -> pd.DataFrame:
    if report is None:
        return pd.DataFrame(columns=SCATTER_COLUMNS)
    return pd.DataFrame(
        {"atom": list(report.atoms), "X": list(report.X), "Y": list(report.dual.Y)},
        columns=SCATTER_COLUMNS,
    )


def emit_plot_data(
    out_dir: Union[str, Path],
    report: Optional[SolveReport] = None,
    ladders: Sequence[Optional[LadderTrace]] = (),
    curve: Optional[Dict[str, List[float]]] = None,
) -> Dict[str, Path]:
    """Write the ladder, dual value curve and scatter tables.

    Missing inputs produce header-only files so downstream plotting scripts can
    rely on every table being present.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if report is not None and not ladders:
        ladders = (report.smoothing_trace, report.truncation_trace)
    curve = curve or {"y": [], "value": []}
    frames = {
        "ladder": ladder_frame(ladders),
        "dual_curve": curve_frame(curve["y"], curve["value"]),
        "scatter": scatter_frame(report),
    }
    return {name: write_csv(frame, out_dir / PLOT_FILES[name]) for name, frame in frames.items()}


def is_discretely_convex(ys: Sequence[float], values: Sequence[float], tol: float = 1e-8) -> bool:
    """Slopes between consecutive points are nondecreasing up to ``tol``."""
    y = np.asarray(ys, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = np.isfinite(v)
    y, v = y[keep], v[keep]
    if y.size < 3:
        return True
    slopes = np.diff(v) / np.diff(y)
    return bool(np.all(np.diff(slopes) >= -tol * (1.0 + np.abs(slopes[1:]))))
