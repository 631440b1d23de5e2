"""The monotone torus family and its derivatives.

The vector field is

    x' = Omega_x - cos 2pi(y - phi) - eps cos 2pi x
    y' = Omega_y - sin 2pi y       - eps sin 2pi x

on the two-torus, with parameters ``Omega = (Omega_x, Omega_y)``.  All angles
are in turns (period 1); interior computations live on the universal cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi

PHI_MIN = 1.0 / 24.0
PHI_MAX = 5.0 / 24.0


class ParamPoint(NamedTuple):
    omega_x: float
    omega_y: float


class StatePoint(NamedTuple):
    x: float
    y: float

    def wrapped(self) -> "StatePoint":
        return StatePoint(self.x % 1.0, self.y % 1.0)


@dataclass(frozen=True)
class SystemConfig:
    """Family parameters ``epsilon`` and ``phi`` plus the derived ``C``, ``S``.

    ``validate=False`` skips the range checks; it exists so that degenerate
    probes (``epsilon = 0``, ``phi`` outside the good interval) can still be
    evaluated.
    """

    epsilon: float
    phi: float = 0.125
    validate: bool = True

    def __post_init__(self):
        if not self.validate:
            return
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not PHI_MIN < self.phi < PHI_MAX:
            raise ValueError(f"phi must lie in (1/24, 5/24), got {self.phi}")
        from .geometry import curvature_max

        kmax = curvature_max(self)
        if self.epsilon * kmax >= 1.0:
            raise ValueError(
                f"epsilon={self.epsilon} violates epsilon < 1/kappa_max = {1 / kmax:.6g}"
            )

    @property
    def C(self) -> float:
        return math.cos(TWO_PI * self.phi)

    @property
    def S(self) -> float:
        return math.sin(TWO_PI * self.phi)

    @property
    def sqrt_eps(self) -> float:
        return math.sqrt(self.epsilon)


def eval_field(cfg: SystemConfig, omega, s):
    """Velocity at state ``s`` for parameters ``omega``.

    Works elementwise on arrays: ``s`` may be a pair of arrays ``(x, y)``.
    """
    x, y = s
    eps = cfg.epsilon
    ox, oy = omega
    u = ox - np.cos(TWO_PI * (y - cfg.phi)) - eps * np.cos(TWO_PI * x)
    v = oy - np.sin(TWO_PI * y) - eps * np.sin(TWO_PI * x)
    return np.array([u, v])


def jacobian(cfg: SystemConfig, s) -> np.ndarray:
    """State Jacobian of the field; it does not depend on ``Omega``."""
    x, y = s
    eps = cfg.epsilon
    sx, cx = np.sin(TWO_PI * x), np.cos(TWO_PI * x)
    return TWO_PI * np.array(
        [
            [eps * sx, np.sin(TWO_PI * (y - cfg.phi))],
            [-eps * cx, -np.cos(TWO_PI * y)],
        ]
    )


def trace_det(cfg: SystemConfig, s):
    """Closed forms of trace and determinant of :func:`jacobian`."""
    x, y = s
    eps = cfg.epsilon
    tr = TWO_PI * (eps * np.sin(TWO_PI * x) - np.cos(TWO_PI * y))
    det = TWO_PI**2 * eps * (
        np.cos(TWO_PI * x) * np.sin(TWO_PI * (y - cfg.phi))
        - np.sin(TWO_PI * x) * np.cos(TWO_PI * y)
    )
    return tr, det


def second_derivative(cfg: SystemConfig, s, v1, v2) -> np.ndarray:
    """Symmetric bilinear form D^2 G(s)(v1, v2); the field has no mixed terms."""
    x, y = s
    eps = cfg.epsilon
    xx = v1[0] * v2[0]
    yy = v1[1] * v2[1]
    k = TWO_PI**2
    return k * np.array(
        [
            eps * np.cos(TWO_PI * x) * xx + np.cos(TWO_PI * (y - cfg.phi)) * yy,
            eps * np.sin(TWO_PI * x) * xx + np.sin(TWO_PI * y) * yy,
        ]
    )


def third_derivative(cfg: SystemConfig, s, v1, v2, v3) -> np.ndarray:
    """Symmetric trilinear form D^3 G(s)(v1, v2, v3)."""
    x, y = s
    eps = cfg.epsilon
    xxx = v1[0] * v2[0] * v3[0]
    yyy = v1[1] * v2[1] * v3[1]
    k = TWO_PI**3
    return k * np.array(
        [
            -eps * np.sin(TWO_PI * x) * xxx - np.sin(TWO_PI * (y - cfg.phi)) * yyy,
            eps * np.cos(TWO_PI * x) * xxx + np.cos(TWO_PI * y) * yyy,
        ]
    )


def monotonicity_constant(cfg: SystemConfig, n_check: int = 100, seed: int = 0) -> float:
    """Lower bound ``c`` in <D_Omega G w, w> >= c |w|^2.

    D_Omega G is the identity for this family, so the answer is 1.  The value
    is confirmed by differencing :func:`eval_field` in ``Omega`` at
    ``n_check`` random points; a mismatch raises ``AssertionError``.
    """
    rng = np.random.default_rng(seed)
    h = 1e-6
    worst = np.inf
    for _ in range(n_check):
        om = rng.uniform(-2, 2, size=2)
        s = rng.uniform(0, 1, size=2)
        D = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            D[:, j] = (eval_field(cfg, om + e, s) - eval_field(cfg, om - e, s)) / (2 * h)
        sym = 0.5 * (D + D.T)
        worst = min(worst, np.linalg.eigvalsh(sym)[0])
    assert abs(worst - 1.0) < 1e-6, worst
    return 1.0
