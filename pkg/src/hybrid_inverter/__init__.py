"""Sampled-data simulation of a half-bridge inverter under Lyapunov-based switching.

The plant is an LC-filtered half-bridge feeding a resistive load. A sign
controller picks the switch position that makes a quadratic tracking-error
energy decrease, an exosystem generates the sinusoidal reference, and an
optional droop loop moves the reference amplitude and frequency with measured
power.
"""

from .controller import ControllerState, MarginWarning, control, retune, switching_row
from .droop import DroopParams, PowerWindow, WindowNotReady, droop_fixed_point, droop_update, measure_power
from .engine import (
    DroopEnable,
    LoadChange,
    Metrics,
    Scenario,
    SetpointChange,
    Trace,
    compute_metrics,
    run,
)
from .numerics import LyapMatrix, NotHurwitzError, closed_form_P, expm2, solve_lyapunov, zoh_discretize
from .plant import NOMINAL_PARAMS, InverterParams, build_state_matrices
from .reference import GainRow, ReferenceSpec, make_gamma, make_pi, stability_margin

__version__ = "0.1.0"

__all__ = [
    "ControllerState", "MarginWarning", "control", "retune", "switching_row",
    "DroopParams", "PowerWindow", "WindowNotReady", "droop_fixed_point", "droop_update", "measure_power",
    "DroopEnable", "LoadChange", "Metrics", "Scenario", "SetpointChange", "Trace", "compute_metrics", "run",
    "LyapMatrix", "NotHurwitzError", "closed_form_P", "expm2", "solve_lyapunov", "zoh_discretize",
    "NOMINAL_PARAMS", "InverterParams", "build_state_matrices",
    "GainRow", "ReferenceSpec", "make_gamma", "make_pi", "stability_margin",
]
