"""Sign-based switching law ``u = -sign(B^T P e)`` and its retuning."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import LyapMatrix, closed_form_P, is_hurwitz, NotHurwitzError
from .plant import InverterParams, build_state_matrices
from .reference import ReferenceSpec, stability_margin

__all__ = ["ControllerState", "MarginWarning", "retune", "control", "switching_row"]


class MarginWarning(UserWarning):
    """The reference violates ``V_m ||Gamma|| < 1``; tracking is not guaranteed."""


@dataclass(frozen=True)
class ControllerState:
    p: LyapMatrix
    b: np.ndarray
    margin: float
    alpha: float

    @property
    def guaranteed(self) -> bool:
        return self.margin > 0.0

    def __eq__(self, other):
        if not isinstance(other, ControllerState):
            return NotImplemented
        return (
            self.p == other.p
            and np.array_equal(self.b, other.b)
            and self.margin == other.margin
            and self.alpha == other.alpha
        )

    __hash__ = None


def switching_row(ctrl: ControllerState) -> np.ndarray:
    """Row vector ``B^T P``; the switching function is ``s = B^T P e``."""
    return ctrl.b @ ctrl.p.matrix


def control(e, ctrl: ControllerState) -> int:
    """Switch command for error ``e``.

    ``sign(0)`` is taken as +1, so zero error yields ``u = -1``.
    """
    s = float(switching_row(ctrl) @ np.asarray(e, dtype=float))
    return -1 if s >= 0.0 else 1


def retune(params_new: InverterParams, spec: ReferenceSpec, alpha: float = 1.0) -> ControllerState:
    """Build the controller for a (possibly new) load.

    A non-positive margin does not prevent construction; a
    :class:`MarginWarning` is emitted instead so sweeps past the guaranteed
    region can still run.
    """
    a, b = build_state_matrices(params_new)
    if not is_hurwitz(a):
        raise NotHurwitzError("state matrix is not Hurwitz")
    margin = stability_margin(params_new, spec)
    if margin <= 0.0:
        warnings.warn(
            f"V_m*||Gamma|| = {1.0 - margin:.4g} >= 1: tracking not guaranteed",
            MarginWarning,
            stacklevel=2,
        )
    return ControllerState(p=closed_form_P(params_new, alpha), b=b, margin=margin, alpha=float(alpha))
