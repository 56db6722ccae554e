"""Sinusoidal reference generator.

A harmonic oscillator ``z' = [[0, w], [-w, 0]] z`` started at ``z(0) = (0, V_m)``
traces ``z(t) = (V_m sin wt, V_m cos wt)``. The plant reference is the linear
image ``x_ref = Pi z`` with ``Pi = [[1, 0], [1/R, wC]]``, and ``Gamma`` is the
feed-forward row with ``Pi Theta = A Pi + B Gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import InverterParams

__all__ = [
    "ReferenceSpec",
    "GainRow",
    "initial_osc",
    "osc_step",
    "rotation",
    "make_theta",
    "make_pi",
    "make_gamma",
    "stability_margin",
    "reference_state",
    "set_amplitude",
]


@dataclass(frozen=True)
class ReferenceSpec:
    """Target sinusoid ``v_m sin(omega t)``."""

    v_m: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.v_m) and self.v_m >= 0):
            raise ValueError(f"v_m must be non-negative, got {self.v_m!r}")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be positive, got {self.omega!r}")

    @classmethod
    def from_hz(cls, v_m: float, f_hz: float) -> "ReferenceSpec":
        return cls(float(v_m), 2.0 * math.pi * float(f_hz))

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


@dataclass(frozen=True)
class GainRow:
    """Feed-forward row ``Gamma``; ``Gamma z`` is the input the reference needs."""

    g1: float
    g2: float

    def __call__(self, z) -> float:
        return self.g1 * z[0] + self.g2 * z[1]

    @property
    def norm(self) -> float:
        return math.hypot(self.g1, self.g2)

    def as_array(self) -> np.ndarray:
        return np.array([self.g1, self.g2])


def initial_osc(v_m: float) -> np.ndarray:
    """Oscillator state at phase zero, so that ``v_ref(0) = 0``."""
    return np.array([0.0, float(v_m)])


def rotation(omega: float, h: float) -> np.ndarray:
    c, s = math.cos(omega * h), math.sin(omega * h)
    return np.array([[c, s], [-s, c]])


def make_theta(omega: float) -> np.ndarray:
    return np.array([[0.0, omega], [-omega, 0.0]])


def osc_step(z, omega: float, h: float) -> np.ndarray:
    """Advance the oscillator by an exact rotation through ``omega * h``."""
    if h < 0:
        raise ValueError(f"h must be non-negative, got {h}")
    return rotation(omega, h) @ np.asarray(z, dtype=float)


def make_pi(params: InverterParams, omega: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [1.0 / params.R, omega * params.C]])


def make_gamma(params: InverterParams, omega: float) -> GainRow:
    """Feed-forward row matching the oscillator coordinates ``(z1, z2)``.

    ``Gamma = (2/V_dc) [1 - w^2 LC,  wL/R]``. The sin-coefficient comes first
    because ``z1`` carries the sine; with this ordering ``Pi Theta = A Pi + B
    Gamma`` holds exactly. Its 2-norm is symmetric in the two entries.
    """
    r, l, c, vdc = params.R, params.L, params.C, params.V_dc
    k = 2.0 / vdc
    return GainRow(k * (1.0 - omega * omega * l * c), k * omega * l / r)


def stability_margin(params: InverterParams, spec: ReferenceSpec) -> float:
    """``1 - V_m ||Gamma||``; positive iff the tracking guarantee applies."""
    return 1.0 - spec.v_m * make_gamma(params, spec.omega).norm


def reference_state(z, pi) -> np.ndarray:
    """``x_ref = Pi z``."""
    return np.asarray(pi, dtype=float) @ np.asarray(z, dtype=float)


def set_amplitude(z, v_m_new: float) -> np.ndarray:
    """Rescale the oscillator to a new amplitude, keeping its phase."""
    z = np.asarray(z, dtype=float)
    v_m_new = float(v_m_new)
    if v_m_new < 0:
        raise ValueError(f"amplitude must be non-negative, got {v_m_new}")
    norm = math.hypot(z[0], z[1])
    if norm == 0.0:
        if v_m_new == 0.0:
            return z.copy()
        raise ValueError("cannot rescale a zero oscillator state: phase is undefined")
    return z * (v_m_new / norm)
