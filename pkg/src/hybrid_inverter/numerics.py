"""Dense 2x2 linear algebra used throughout the simulator.

Matrices are plain ``(2, 2)`` numpy arrays and vectors are ``(2,)`` arrays.
Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NotHurwitzError",
    "LyapMatrix",
    "DiscreteMap",
    "expm2",
    "zoh_discretize",
    "solve_lyapunov",
    "closed_form_P",
    "is_hurwitz",
    "is_positive_definite",
]

# relative eigenvalue gap below which expm2 switches to the Taylor branch
_DEGENERATE_GAP = 1e-8
_TAYLOR_TERMS = 20


class NotHurwitzError(ValueError):
    """Raised when a Lyapunov solution is requested for a non-Hurwitz matrix."""


def _as_mat2(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    return a


def _as_vec2(v) -> np.ndarray:
    b = np.asarray(v, dtype=float)
    if b.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("vector entries must be finite")
    return b


@dataclass(frozen=True)
class LyapMatrix:
    """Symmetric solution ``P`` of ``A^T P + P A = -alpha I``."""

    p11: float
    p12: float
    p22: float
    alpha: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.p11, self.p12], [self.p12, self.p22]])

    def quadratic(self, e) -> float:
        """Evaluate ``e^T P e``."""
        e1, e2 = e
        return self.p11 * e1 * e1 + 2.0 * self.p12 * e1 * e2 + self.p22 * e2 * e2

    def residual(self, a) -> np.ndarray:
        """Return ``A^T P + P A + alpha I``; zero for an exact solution."""
        a = _as_mat2(a)
        p = self.matrix
        return a.T @ p + p @ a + self.alpha * np.eye(2)


@dataclass(frozen=True)
class DiscreteMap:
    """Exact one-step map ``x+ = phi x + gd u`` for a held input over ``h``."""

    phi: np.ndarray
    gd: np.ndarray
    h: float


def _taylor_expm(m: np.ndarray) -> np.ndarray:
    # scaling and squaring around a truncated series
    norm = np.abs(m).sum(axis=1).max()
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    ms = m / (2.0**s)
    term = np.eye(2)
    out = np.eye(2)
    for k in range(1, _TAYLOR_TERMS + 1):
        term = term @ ms / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def expm2(m, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(m * t)`` of a 2x2 matrix.

    Uses the closed form built from the two eigenvalues. Real eigenvalues go
    through a divided-difference formula (``expm1`` keeps it accurate when the
    eigenvalues are close); complex pairs use the cos/sin form. When the
    eigenvalues coincide to within ``1e-8 * ||m||`` a scaled Taylor series is
    used instead.
    """
    m = _as_mat2(m)
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    mt = m * t
    eye = np.eye(2)
    scale = np.abs(mt).max()
    if scale == 0.0:
        return eye

    half_tr = 0.5 * (mt[0, 0] + mt[1, 1])
    det = mt[0, 0] * mt[1, 1] - mt[0, 1] * mt[1, 0]
    shifted = mt - half_tr * eye
    # disc = ((l1 - l2) / 2)^2, computed from the traceless part to avoid cancellation
    disc = shifted[0, 0] ** 2 + mt[0, 1] * mt[1, 0]

    if 2.0 * math.sqrt(abs(disc)) <= _DEGENERATE_GAP * scale:
        return _taylor_expm(mt)

    if disc < 0.0:
        beta = math.sqrt(-disc)
        return math.exp(half_tr) * (math.cos(beta) * eye + (math.sin(beta) / beta) * shifted)

    root = math.sqrt(disc)
    # stable quadratic roots
    big = half_tr + math.copysign(root, half_tr) if half_tr != 0.0 else root
    small = det / big if big != 0.0 else half_tr - root
    l1, l2 = (big, small) if big >= small else (small, big)
    gap = l1 - l2
    f0 = math.exp(l2)
    f1 = f0 * math.expm1(gap) / gap
    return f0 * eye + f1 * (mt - l2 * eye)


def _taylor_integral(a: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    # returns (exp(a h), int_0^h exp(a s) ds) using I(2h) = I(h) + exp(a h) I(h)
    norm = np.abs(a).sum(axis=1).max() * h
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    hs = h / (2.0**s)
    ah = a * hs
    term = np.eye(2)
    phi = np.eye(2)
    integ = np.eye(2) * hs
    for k in range(1, _TAYLOR_TERMS + 1):
        term = term @ ah / k
        phi = phi + term
        integ = integ + term * (hs / (k + 1))
    for _ in range(s):
        integ = integ + phi @ integ
        phi = phi @ phi
    return phi, integ


def zoh_discretize(a, b, h: float) -> DiscreteMap:
    """Zero-order-hold discretization of ``x' = a x + b u`` over a step ``h``."""
    a = _as_mat2(a)
    b = _as_vec2(b)
    h = float(h)
    if not h >= 0.0:
        raise ValueError(f"step must be non-negative, got {h}")
    if h == 0.0:
        return DiscreteMap(np.eye(2), np.zeros(2), 0.0)

    phi = expm2(a, h)
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if abs(det) > 1e-12 * np.abs(a).max() ** 2:
        gd = np.linalg.solve(a, (phi - np.eye(2)) @ b)
    else:
        _, integ = _taylor_integral(a, h)
        gd = integ @ b
    return DiscreteMap(phi, gd, h)


def is_hurwitz(a) -> bool:
    """True iff both eigenvalues of ``a`` have strictly negative real part."""
    a = _as_mat2(a)
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return bool(tr < 0.0 and det > 0.0)


def is_positive_definite(p) -> bool:
    """Leading-principal-minor test for a symmetric 2x2 matrix."""
    p = np.asarray(p, dtype=float)
    return bool(p[0, 0] > 0.0 and p[0, 0] * p[1, 1] - p[0, 1] * p[1, 0] > 0.0)


def _gauss_solve(m, rhs) -> np.ndarray:
    # plain floats: for a 3x3 system numpy call overhead dominates
    rows = [[float(v) for v in row] + [float(r)] for row, r in zip(m, rhs)]
    n = len(rows)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(rows[r][col]))
        if rows[piv][col] == 0.0:
            raise np.linalg.LinAlgError("singular system")
        rows[col], rows[piv] = rows[piv], rows[col]
        top = rows[col]
        for r in range(col + 1, n):
            f = rows[r][col] / top[col]
            if f != 0.0:
                rows[r] = [x - f * y for x, y in zip(rows[r], top)]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = rows[r][n] - sum(rows[r][j] * x[j] for j in range(r + 1, n))
        x[r] = acc / rows[r][r]
    return np.array(x)


def solve_lyapunov(a, alpha: float = 1.0) -> LyapMatrix:
    """Solve ``a^T P + P a = -alpha I`` for symmetric ``P``.

    The three independent entries of the matrix equation form a 3x3 linear
    system in ``(p11, p12, p22)``, solved by Gaussian elimination with
    partial pivoting.

    Raises
    ------
    NotHurwitzError
        If ``a`` is not Hurwitz (no positive-definite solution exists).
    """
    a = _as_mat2(a)
    alpha = float(alpha)
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not is_hurwitz(a):
        raise NotHurwitzError("matrix is not Hurwitz; no positive-definite Lyapunov solution")
    (a11, a12), (a21, a22) = a
    system = [
        [2.0 * a11, 2.0 * a21, 0.0],
        [a12, a11 + a22, a21],
        [0.0, 2.0 * a12, 2.0 * a22],
    ]
    p11, p12, p22 = _gauss_solve(system, [-alpha, 0.0, -alpha])
    return LyapMatrix(p11, p12, p22, alpha)


def closed_form_P(params, alpha: float = 1.0) -> LyapMatrix:
    """Explicit Lyapunov solution for the inverter's ``A`` in terms of R, L, C.

    ``P = (alpha/2) [[RC + RC^2/L, -C], [-C, RL + L/R + RC]]``
    """
    r, l, c = float(params.R), float(params.L), float(params.C)
    alpha = float(alpha)
    for name, val in (("R", r), ("L", l), ("C", c), ("alpha", alpha)):
        if not (val > 0.0 and math.isfinite(val)):
            raise ValueError(f"{name} must be positive and finite, got {val}")
    k = 0.5 * alpha
    return LyapMatrix(
        p11=k * (r * c + r * c * c / l),
        p12=-k * c,
        p22=k * (r * l + l / r + r * c),
        alpha=alpha,
    )
