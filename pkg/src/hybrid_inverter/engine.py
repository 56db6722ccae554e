"""Closed-loop simulation of the switched inverter.

Every control tick the engine forms the tracking error ``e = x - Pi z``,
picks ``u = -sign(B^T P e)``, holds it for one control period while the plant
is propagated exactly (or, for cross-checks, by sub-stepped RK4), and rotates
the oscillator. Events (load changes, setpoint changes, droop activation) and
droop updates split the run into segments of constant parameters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernel
from .controller import ControllerState, MarginWarning, retune, switching_row
from .droop import DroopParams, PowerWindow, droop_update, measure_power
from .numerics import DiscreteMap, NotHurwitzError, is_hurwitz, zoh_discretize
from .plant import InverterParams, build_state_matrices
from .reference import ReferenceSpec, initial_osc, make_pi, rotation, set_amplitude

__all__ = [
    "LoadChange",
    "SetpointChange",
    "DroopEnable",
    "Scenario",
    "Trace",
    "Metrics",
    "TRACE_COLUMNS",
    "run",
    "error_of",
    "compute_metrics",
]

TRACE_COLUMNS = (
    "t", "v_c", "i_l", "v_ref", "i_ref", "u", "lyap_v",
    "p_meas", "q_meas", "omega_cmd", "v_m_cmd",
)
TRACE_UNITS = ("s", "V", "A", "V", "A", "1", "-", "W", "VAR", "rad/s", "V")

SETTLING_FRACTION = 0.02


@dataclass(frozen=True)
class LoadChange:
    t: float
    r_new: float
    known: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.r_new) and self.r_new > 0):
            raise ValueError(f"r_new must be positive, got {self.r_new!r}")


@dataclass(frozen=True)
class SetpointChange:
    t: float
    v_m_star: float
    omega_star: float


@dataclass(frozen=True)
class DroopEnable:
    t: float
    droop: DroopParams


Event = Union[LoadChange, SetpointChange, DroopEnable]


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one simulation run.

    ``initial_state=None`` starts the plant on the reference. ``initial_osc``
    and ``t_start`` allow resuming a run mid-way; by default the oscillator
    starts at phase zero.
    """

    params: InverterParams
    spec: ReferenceSpec
    t_end: float
    alpha: float = 1.0
    initial_state: Optional[tuple] = None
    control_period: float = 1e-6
    events: Sequence[Event] = ()
    droop: Optional[DroopParams] = None
    record_decimation: int = 10
    initial_osc: Optional[tuple] = None
    t_start: float = 0.0
    integrator: str = "zoh"
    rk4_substeps: int = 10
    divergence_factor: float = 100.0
    keep_fine: bool = False

    def __post_init__(self):
        if not self.control_period > 0:
            raise ValueError("control_period must be positive")
        if not self.t_end >= self.t_start:
            raise ValueError("t_end must not precede t_start")
        if self.record_decimation < 1:
            raise ValueError("record_decimation must be a positive integer")
        if self.integrator not in ("zoh", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        times = [ev.t for ev in self.events]
        if times != sorted(times):
            raise ValueError("events must be sorted by time")
        for t in times:
            if not self.t_start <= t <= self.t_end:
                raise ValueError(f"event at t={t} lies outside [{self.t_start}, {self.t_end}]")

    @property
    def n_ticks(self) -> int:
        return int(round((self.t_end - self.t_start) / self.control_period))

    def tick_of(self, t: float) -> int:
        return int(round((t - self.t_start) / self.control_period))


@dataclass
class Metrics:
    """Tracking-error summary. Entries not reported (diverged run, too-short
    trace) are NaN."""

    rms_error_final_period: float
    max_abs_error: float
    settling_time: float
    diverged: bool


@dataclass
class Trace:
    """Decimated per-tick record plus the full-resolution voltage error.

    ``columns`` holds one array per name in :data:`TRACE_COLUMNS`. ``err_fine``
    is ``v_c - v_ref`` at every control tick; ``e2_fine`` and ``lyap_fine``
    (current error and ``e^T P e``) are filled only when the scenario asks for
    ``keep_fine``.
    """

    columns: dict
    err_fine: np.ndarray
    control_period: float
    t_start: float
    diverged: bool
    final_state: np.ndarray
    final_osc: np.ndarray
    final_spec: ReferenceSpec
    min_margin: float
    e2_fine: Optional[np.ndarray] = None
    lyap_fine: Optional[np.ndarray] = None
    droop_log: list = field(default_factory=list)

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in TRACE_COLUMNS])

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            fh.write("# units: " + ",".join(TRACE_UNITS) + "\n")
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            np.savetxt(fh, self.as_array(), fmt="%.17g", delimiter=",")
        return path


def error_of(x, z, pi) -> np.ndarray:
    """Tracking error ``x - Pi z``."""
    return np.asarray(x, dtype=float) - np.asarray(pi, dtype=float) @ np.asarray(z, dtype=float)


def compute_metrics(trace: Trace, spec: ReferenceSpec) -> Metrics:
    """Summarise the voltage tracking error of a run.

    The RMS is taken over the final fundamental period of ``spec``; settling
    time is the first instant after which ``|v_c - v_ref|`` stays below 2 % of
    ``spec.v_m`` (``inf`` if it never does).
    """
    err = np.abs(np.asarray(trace.err_fine))
    if err.size == 0:
        raise ValueError("empty trace")
    max_err = float(err.max())
    if trace.diverged:
        return Metrics(math.nan, max_err, math.nan, True)
    h = trace.control_period
    n_per = int(round(spec.period / h))
    if err.size < n_per:
        return Metrics(math.nan, max_err, math.nan, False)
    tail = err[-n_per:]
    rms = float(math.sqrt(np.mean(tail * tail)))
    thr = SETTLING_FRACTION * spec.v_m
    above = np.flatnonzero(err >= thr)
    if above.size == 0:
        settling = 0.0
    elif above[-1] == err.size - 1:
        settling = math.inf
    else:
        settling = float((above[-1] + 1) * h)
    return Metrics(rms, max_err, settling, False)


class _Discretizer:
    """Caches the discrete map per ``(params, h)``."""

    def __init__(self, h):
        self.h = h
        self._cache = {}

    def __call__(self, params) -> DiscreteMap:
        key = (params.R, params.L, params.C, params.V_dc)
        if key not in self._cache:
            a, b = build_state_matrices(params)
            self._cache[key] = zoh_discretize(a, b, self.h)
        return self._cache[key]


def _quiet_retune(params, spec, alpha) -> ControllerState:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MarginWarning)
        return retune(params, spec, alpha)


def _validate(scn: Scenario):
    sets = [scn.params]
    for ev in scn.events:
        if isinstance(ev, LoadChange):
            sets.append(scn.params.with_load(ev.r_new))
    for p in sets:
        a, _ = build_state_matrices(p)
        if not is_hurwitz(a):
            raise NotHurwitzError(f"state matrix not Hurwitz for {p}")


def run(scenario: Scenario) -> tuple[Trace, Metrics]:
    """Simulate a scenario and return its trace and tracking metrics."""
    scn = scenario
    _validate(scn)
    h = scn.control_period
    n_ticks = scn.n_ticks
    dec = scn.record_decimation
    n_rows = n_ticks // dec + 1
    mode = _kernel.ZOH if scn.integrator == "zoh" else _kernel.RK4
    discretize = _Discretizer(h)

    plant = scn.params
    model = scn.params
    v_m, omega = scn.spec.v_m, scn.spec.omega
    ctrl = _quiet_retune(model, ReferenceSpec(v_m, omega), scn.alpha)
    min_margin = ctrl.margin

    z = np.array(scn.initial_osc if scn.initial_osc is not None else initial_osc(v_m), dtype=float)
    pi = make_pi(model, omega)
    if scn.initial_state is None:
        x = pi @ z
    else:
        x = np.array(scn.initial_state, dtype=float)

    rec = {c: np.full(n_rows, np.nan) for c in TRACE_COLUMNS}
    err_fine = np.zeros(n_ticks + 1)
    keep = bool(scn.keep_fine)
    e2_fine = np.zeros(n_ticks + 1) if keep else _kernel.empty()
    lyap_fine = np.zeros(n_ticks + 1) if keep else _kernel.empty()

    droop = None
    window = None
    next_update = None
    meas = (math.nan, math.nan)
    cmd_logged = (math.nan, math.nan)
    droop_log = []

    def enable_droop(dp, k):
        nonlocal droop, window, next_update
        droop = dp
        window = PowerWindow(dp.omega_star, h)
        next_update = k + window.capacity

    if scn.droop is not None:
        enable_droop(scn.droop, 0)
        cmd_logged = (omega, v_m)

    events = sorted(
        ((scn.tick_of(ev.t), i, ev) for i, ev in enumerate(scn.events)), key=lambda e: (e[0], e[1])
    )
    ev_idx = 0
    k = 0
    diverged = False

    while True:
        # apply everything scheduled for this tick
        while ev_idx < len(events) and events[ev_idx][0] <= k:
            ev = events[ev_idx][2]
            ev_idx += 1
            if isinstance(ev, LoadChange):
                plant = plant.with_load(ev.r_new)
                if ev.known:
                    model = model.with_load(ev.r_new)
                    ctrl = _quiet_retune(model, ReferenceSpec(v_m, omega), scn.alpha)
                    pi = make_pi(model, omega)
                    if droop is not None:
                        droop = DroopParams.for_load(model, droop.v_m_star, droop.omega_star,
                                                     droop.k_p, droop.k_q, h)
            elif isinstance(ev, SetpointChange):
                if droop is not None:
                    new = DroopParams.for_load(model, ev.v_m_star, ev.omega_star,
                                               droop.k_p, droop.k_q, h)
                    if new.omega_star != droop.omega_star:
                        enable_droop(new, k)
                    droop = new
                else:
                    z = set_amplitude(z, ev.v_m_star)
                    v_m, omega = ev.v_m_star, ev.omega_star
                    pi = make_pi(model, omega)
                    ctrl = _quiet_retune(model, ReferenceSpec(v_m, omega), scn.alpha)
            elif isinstance(ev, DroopEnable):
                enable_droop(ev.droop, k)
                cmd_logged = (omega, v_m)
        if droop is not None and next_update is not None and k >= next_update and window.full:
            meas = measure_power(window)
            omega, v_m = droop_update(droop, *meas)
            v_m = max(v_m, 0.0)
            z = set_amplitude(z, v_m)
            pi = make_pi(model, omega)
            ctrl = _quiet_retune(model, ReferenceSpec(v_m, omega), scn.alpha)
            cmd_logged = (omega, v_m)
            droop_log.append((k * h + scn.t_start, meas[0], meas[1], omega, v_m))
            next_update = k + window.capacity
        min_margin = min(min_margin, ctrl.margin)

        if k >= n_ticks:
            break
        stop = n_ticks
        if ev_idx < len(events):
            stop = min(stop, max(events[ev_idx][0], k + 1))
        if droop is not None:
            stop = min(stop, next_update)

        n = stop - k
        a, b = build_state_matrices(plant)
        dmap = discretize(plant)
        srow = switching_row(ctrl)
        pm = np.array([ctrl.p.p11, ctrl.p.p12, ctrl.p.p22])
        rot = rotation(omega, h)
        ceiling = scn.divergence_factor * v_m if v_m > 0 else math.inf
        if droop is not None:
            seg_v, seg_i = np.empty(n), np.empty(n)
        else:
            seg_v = seg_i = _kernel.empty()
        row0 = -(-k // dec)
        done, hit = _kernel.run_segment(
            x, z, k, n,
            dmap.phi, dmap.gd, rot, pi, srow, pm,
            a, b, mode, scn.rk4_substeps, h, ceiling,
            err_fine, e2_fine, lyap_fine, keep,
            dec, rec["v_c"], rec["i_l"], rec["v_ref"], rec["i_ref"], rec["u"], rec["lyap_v"],
            seg_v, seg_i, droop is not None,
        )
        row1 = -(-(k + done) // dec)
        rec["p_meas"][row0:row1] = meas[0]
        rec["q_meas"][row0:row1] = meas[1]
        rec["omega_cmd"][row0:row1] = cmd_logged[0] if droop is not None else omega
        rec["v_m_cmd"][row0:row1] = cmd_logged[1] if droop is not None else v_m
        if droop is not None:
            window.push(seg_v[:done], seg_i[:done])
        k += done
        if hit:
            diverged = True
            break

    # final tick: record the state reached and the decision that would follow
    r = pi @ z
    e = x - r
    u = -1.0 if float(switching_row(ctrl) @ e) >= 0.0 else 1.0
    lv = ctrl.p.quadratic(e)
    err_fine[k] = e[0]
    if keep:
        e2_fine[k] = e[1]
        lyap_fine[k] = lv
    last = k // dec
    if k % dec == 0 or diverged:
        if k % dec != 0:
            last += 1
        if last < n_rows:
            for name, val in (("v_c", x[0]), ("i_l", x[1]), ("v_ref", r[0]), ("i_ref", r[1]),
                              ("u", u), ("lyap_v", lv), ("p_meas", meas[0]), ("q_meas", meas[1]),
                              ("omega_cmd", omega), ("v_m_cmd", v_m)):
                rec[name][last] = val
    n_used = min(last + 1, n_rows)
    ticks = np.arange(n_used) * dec
    if diverged and n_used > 0:
        ticks[-1] = k
    rec = {c: rec[c][:n_used] for c in TRACE_COLUMNS}
    rec["t"] = scn.t_start + ticks * h

    trace = Trace(
        columns=rec,
        err_fine=err_fine[: k + 1],
        control_period=h,
        t_start=scn.t_start,
        diverged=diverged,
        final_state=x.copy(),
        final_osc=z.copy(),
        final_spec=ReferenceSpec(v_m, omega),
        min_margin=min_margin,
        e2_fine=e2_fine[: k + 1] if keep else None,
        lyap_fine=lyap_fine[: k + 1] if keep else None,
        droop_log=droop_log,
    )
    return trace, compute_metrics(trace, trace.final_spec)
