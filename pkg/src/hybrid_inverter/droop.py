"""Droop outer loop: power measurement and setpoint law.

The loop adjusts the reference as::

    omega = omega* + k_p (P* - P)
    V_m   = V_m*   + k_q (Q* - Q)

``P`` and ``Q`` come from one-period sliding means of ``v_c i_l`` and of
``v_c(t - T/4) i_l(t)``, expressed in peak-amplitude form (twice the mean): an
in-phase sinusoid pair of amplitudes ``V`` and ``I`` reads ``P = V I``, which
is the convention behind ``P* = V_m*^2 / R`` on a resistive load. A current
leading the voltage gives negative ``Q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import InverterParams
from .reference import initial_osc, make_pi

__all__ = [
    "DroopParams",
    "PowerWindow",
    "WindowNotReady",
    "measure_power",
    "droop_update",
    "steady_state_targets",
    "droop_fixed_point",
]


class WindowNotReady(RuntimeError):
    """The measurement window does not yet hold a full period of samples."""


@dataclass(frozen=True)
class DroopParams:
    omega_star: float
    v_m_star: float
    k_p: float
    k_q: float
    p_star: float
    q_star: float

    def __post_init__(self):
        if self.k_p < 0 or self.k_q < 0:
            raise ValueError(f"droop gains must be non-negative, got k_p={self.k_p}, k_q={self.k_q}")
        if not self.omega_star > 0:
            raise ValueError(f"omega_star must be positive, got {self.omega_star}")
        if not self.v_m_star >= 0:
            raise ValueError(f"v_m_star must be non-negative, got {self.v_m_star}")

    @classmethod
    def for_load(cls, params: InverterParams, v_m_star: float, omega_star: float,
                 k_p: float, k_q: float, sample_period: float = 1e-6) -> "DroopParams":
        """Droop parameters whose power targets match the reference on this load."""
        p_star, q_star = steady_state_targets(params, v_m_star, omega_star, sample_period)
        return cls(omega_star, v_m_star, k_p, k_q, p_star, q_star)


class PowerWindow:
    """Ring buffer of ``(v_c, i_l)`` samples spanning one fundamental period."""

    def __init__(self, omega: float, sample_period: float):
        if not (omega > 0 and sample_period > 0):
            raise ValueError("omega and sample_period must be positive")
        self.sample_period = float(sample_period)
        self.capacity = max(4, int(round(2.0 * math.pi / omega / sample_period)))
        self.delay = int(round(self.capacity / 4))
        self._v = np.zeros(self.capacity)
        self._i = np.zeros(self.capacity)
        self._head = 0
        self._count = 0

    @property
    def full(self) -> bool:
        return self._count >= self.capacity

    def clear(self):
        self._head = 0
        self._count = 0

    def push(self, v, i):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        i = np.atleast_1d(np.asarray(i, dtype=float))
        if v.shape != i.shape:
            raise ValueError("voltage and current sample arrays differ in length")
        n = len(v)
        if n >= self.capacity:
            self._v[:] = v[-self.capacity:]
            self._i[:] = i[-self.capacity:]
            self._head = 0
            self._count = self.capacity
            return
        idx = (self._head + np.arange(n)) % self.capacity
        self._v[idx] = v
        self._i[idx] = i
        self._head = (self._head + n) % self.capacity
        self._count = min(self.capacity, self._count + n)

    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        """Buffered samples in chronological order."""
        order = (self._head + np.arange(self.capacity)) % self.capacity
        return self._v[order], self._i[order]


def measure_power(w: PowerWindow) -> tuple[float, float]:
    """Active and reactive power over the window, peak-amplitude form.

    The quarter-period delayed voltage wraps around the window, which is exact
    for signals periodic in the window length.
    """
    if not w.full:
        raise WindowNotReady(f"window holds {w._count} of {w.capacity} samples")
    v, i = w.samples()
    p = 2.0 * float(np.mean(v * i))
    q = 2.0 * float(np.mean(np.roll(v, w.delay) * i))
    return p, q


def droop_update(dp: DroopParams, p: float, q: float) -> tuple[float, float]:
    """Commanded ``(omega, V_m)`` for measured powers ``(p, q)``."""
    return dp.omega_star + dp.k_p * (dp.p_star - p), dp.v_m_star + dp.k_q * (dp.q_star - q)


def steady_state_targets(params: InverterParams, v_m_star: float, omega_star: float,
                         sample_period: float = 1e-6) -> tuple[float, float]:
    """Power setpoints ``(P*, Q*)`` for a reference of amplitude ``v_m_star``.

    ``P* = V_m*^2 / R``. ``Q*`` is what :func:`measure_power` reports for one
    period of the ideal reference pair ``(v_ref, i_ref)`` at ``omega_star``.
    """
    p_star = v_m_star * v_m_star / params.R
    w = PowerWindow(omega_star, sample_period)
    k = np.arange(w.capacity)
    theta = omega_star * sample_period * k
    z0 = initial_osc(v_m_star)
    z = np.stack([z0[1] * np.sin(theta), z0[1] * np.cos(theta)])
    v_ref, i_ref = make_pi(params, omega_star) @ z
    w.push(v_ref, i_ref)
    _, q_star = measure_power(w)
    return p_star, q_star


def droop_fixed_point(params: InverterParams, dp: DroopParams, tol: float = 1e-12,
                      max_iter: int = 10_000) -> tuple[float, float]:
    """Sinusoidal steady state ``(omega, V_m)`` of the droop loop.

    Assumes perfect tracking, so the measured powers are those of the ideal
    reference: ``P = V_m^2 / R`` and ``Q = -omega C V_m^2``. Solved by iterating
    the droop law, which is a contraction whenever the loop itself settles.
    """
    omega, v_m = dp.omega_star, dp.v_m_star
    for _ in range(max_iter):
        p = v_m * v_m / params.R
        q = -omega * params.C * v_m * v_m
        omega_new, v_new = droop_update(dp, p, q)
        if abs(omega_new - omega) <= tol * abs(omega) and abs(v_new - v_m) <= tol * max(abs(v_m), 1.0):
            return omega_new, v_new
        omega, v_m = omega_new, v_new
    raise RuntimeError("droop fixed-point iteration did not converge")
