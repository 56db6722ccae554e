"""Switched half-bridge inverter with an LC filter and resistive load.

State is ``x = (v_c, i_l)``; the switch command ``u`` is +1 or -1 and sets the
polarity of the ``V_dc / 2`` terminal voltage::

    x' = A x + B u
    A = [[-1/(RC), 1/C], [-1/L, 0]],   B = (0, V_dc / (2L))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .numerics import DiscreteMap

__all__ = ["InverterParams", "NOMINAL_PARAMS", "build_state_matrices", "check_switch", "step", "steady_state"]


@dataclass(frozen=True)
class InverterParams:
    """Physical constants of the inverter and its load (SI units)."""

    R: float
    L: float
    C: float
    V_dc: float

    def __post_init__(self):
        for name in ("R", "L", "C", "V_dc"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")

    def with_load(self, r_new: float) -> "InverterParams":
        return replace(self, R=float(r_new))


# Parameters of the reference experiments. The filter capacitor is 2.5 mF
# (a value sometimes printed as "2.5 mC"; the quantity is a capacitance).
NOMINAL_PARAMS = InverterParams(R=50.0, L=450e-6, C=2.5e-3, V_dc=1200.0)


def build_state_matrices(params: InverterParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(A, B)`` for the switched model."""
    r, l, c = params.R, params.L, params.C
    a = np.array([[-1.0 / (r * c), 1.0 / c], [-1.0 / l, 0.0]])
    b = np.array([0.0, params.V_dc / (2.0 * l)])
    return a, b


def check_switch(u) -> int:
    if u not in (1, -1) or isinstance(u, bool):
        raise ValueError(f"switch command must be +1 or -1, got {u!r}")
    return int(u)


def step(state, u: int, dmap: DiscreteMap) -> np.ndarray:
    """Propagate the state exactly over one hold interval with ``u`` held."""
    u = check_switch(u)
    return dmap.phi @ np.asarray(state, dtype=float) + dmap.gd * u


def steady_state(params: InverterParams, u: int) -> np.ndarray:
    """Equilibrium ``-A^{-1} B u`` reached under a constant switch position."""
    u = check_switch(u)
    half = 0.5 * params.V_dc * u
    return np.array([half, half / params.R])
