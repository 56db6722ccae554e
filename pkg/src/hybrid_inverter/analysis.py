"""Parameter sweeps and the predicted stability boundary.

A sweep reruns a base scenario once per value of one axis (load resistance,
reference amplitude or reference frequency) and pairs the measured tracking
error with the predicted margin ``1 - V_m ||Gamma||``.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import LoadChange, Metrics, Scenario, run
from .plant import InverterParams
from .reference import ReferenceSpec, make_gamma, stability_margin

__all__ = ["SweepSpec", "SweepResult", "NoBoundaryError", "AXES", "sweep", "boundary", "scenario_for"]

AXES = ("load_r", "v_m", "omega")


class NoBoundaryError(ValueError):
    """The stability condition does not change sign in the search interval."""


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    axis: str
    values: Sequence[float]
    retune: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if len(self.values) == 0:
            raise ValueError("sweep needs at least one value")
        if any(not (math.isfinite(v) and v > 0) for v in self.values):
            raise ValueError("sweep values must be positive and finite")


@dataclass
class SweepResult:
    axis: str
    values: list
    metrics: list
    margins: list

    def rows(self):
        for v, m, g in zip(self.values, self.metrics, self.margins):
            yield v, m.rms_error_final_period, m.max_abs_error, m.diverged, g

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([self.axis, "rms_error", "max_error", "diverged", "predicted_margin"])
            for v, rms, mx, div, g in self.rows():
                w.writerow([repr(float(v)), repr(float(rms)), repr(float(mx)), int(div), repr(float(g))])
        return path


def scenario_for(spec: SweepSpec, value: float) -> tuple[Scenario, float]:
    """The scenario run at one sweep point and its predicted margin.

    For ``load_r`` without retuning the controller keeps the base load's
    tuning while the plant sees ``value``; this is expressed as an unannounced
    load change at the start of the run.
    """
    base = spec.base
    if spec.axis == "load_r":
        params = base.params.with_load(value)
        if spec.retune:
            scn = replace(base, params=params)
        else:
            ev = LoadChange(base.t_start, value, known=False)
            scn = replace(base, events=(ev, *base.events))
        return scn, stability_margin(params, base.spec)
    if spec.axis == "v_m":
        ref = ReferenceSpec(value, base.spec.omega)
    else:
        ref = ReferenceSpec(base.spec.v_m, value)
    scn = replace(base, spec=ref)
    return scn, stability_margin(base.params, ref)


def _run_metrics(scn: Scenario) -> Metrics:
    return run(scn)[1]


def sweep(spec: SweepSpec, workers: Optional[int] = 1) -> SweepResult:
    """Run every sweep point; diverged points are recorded, not raised.

    ``workers > 1`` (or ``None`` for one per CPU) runs points in separate
    processes. Results are merged by index, so they do not depend on the
    execution order.
    """
    points = [scenario_for(spec, float(v)) for v in spec.values]
    scenarios = [p[0] for p in points]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(scenarios) == 1:
        metrics = [_run_metrics(s) for s in scenarios]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            metrics = list(pool.map(_run_metrics, scenarios))
    return SweepResult(spec.axis, [float(v) for v in spec.values], metrics, [p[1] for p in points])


def _gain_excess(params: InverterParams, axis: str, value: float, fixed_other: float) -> float:
    # V_m ||Gamma|| - 1, positive where the guarantee is lost
    if axis == "v_m":
        return value * make_gamma(params, fixed_other).norm - 1.0
    return fixed_other * make_gamma(params, value).norm - 1.0


def boundary(params: InverterParams, axis: str, fixed_other: float,
             interval: Optional[tuple] = None, rtol: float = 1e-6) -> float:
    """Axis value at which ``V_m ||Gamma(omega)|| = 1``.

    For ``axis="v_m"``, ``fixed_other`` is the frequency; for ``axis="omega"``
    it is the amplitude. The search scans ``interval`` on a geometric grid for
    the highest crossing from guaranteed to not guaranteed and refines it by
    bisection.

    Raises
    ------
    NoBoundaryError
        If no such crossing lies in the interval.
    """
    if axis not in ("v_m", "omega"):
        raise ValueError(f"axis must be 'v_m' or 'omega', got {axis!r}")
    if interval is None:
        interval = (1e-3, 1e6) if axis == "v_m" else (1e-3, 1e7)
    lo, hi = float(interval[0]), float(interval[1])
    if not 0 < lo < hi:
        raise ValueError(f"invalid search interval {interval}")

    def f(x):
        return _gain_excess(params, axis, x, fixed_other)

    grid = np.geomspace(lo, hi, 2001)
    vals = np.array([f(x) for x in grid])
    idx = np.flatnonzero((vals[:-1] < 0.0) & (vals[1:] >= 0.0))
    if idx.size == 0:
        raise NoBoundaryError(f"no stability boundary for {axis} in [{lo}, {hi}]")
    a, b = grid[idx[-1]], grid[idx[-1] + 1]
    while b - a > rtol * b:
        mid = 0.5 * (a + b)
        if f(mid) < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)
