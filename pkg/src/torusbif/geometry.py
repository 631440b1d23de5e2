"""Geometry of the resonance region in parameter space.

The resonance region is the closed ``epsilon``-neighbourhood of the ellipse
``psi(theta) = (cos 2pi(theta - phi), sin 2pi theta)``.  Points near it are
addressed in tubular coordinates ``(theta, r)``: ``Omega = psi + r N``, with
``N`` the outward unit normal.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .family import TWO_PI, ParamPoint, SystemConfig, eval_field


class NoConvergence(RuntimeError):
    pass


class Degenerate(ValueError):
    """Tubular coordinates requested where the normal map is not injective."""


class PositivityFailed(RuntimeError):
    pass


class TubularCoord(NamedTuple):
    theta: float
    r: float


class RegionTag(enum.Enum):
    HOLE = "Hole"
    INTERIOR = "ResonanceInterior"
    INNER_BOUNDARY = "InnerBoundary"
    OUTER_BOUNDARY = "OuterBoundary"
    OUTSIDE = "Outside"


def psi(cfg: SystemConfig, theta):
    return np.array([np.cos(TWO_PI * (theta - cfg.phi)), np.sin(TWO_PI * theta)])


def psi_prime(cfg: SystemConfig, theta):
    return TWO_PI * np.array([-np.sin(TWO_PI * (theta - cfg.phi)), np.cos(TWO_PI * theta)])


def psi_second(cfg: SystemConfig, theta):
    return -(TWO_PI**2) * psi(cfg, theta)


def psi_normal(cfg: SystemConfig, theta):
    """Outward unit normal; the ellipse is traversed anticlockwise."""
    n = np.array([np.cos(TWO_PI * theta), np.sin(TWO_PI * (theta - cfg.phi))])
    return n / np.hypot(n[0], n[1])


def curvature(cfg: SystemConfig, theta):
    d1 = psi_prime(cfg, theta)
    d2 = psi_second(cfg, theta)
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    return np.abs(cross) / np.hypot(d1[0], d1[1]) ** 3


@lru_cache(maxsize=64)
def _curvature_max(phi: float) -> float:
    cfg = SystemConfig(0.0, phi, validate=False)
    grid = np.linspace(0.0, 1.0, 4096, endpoint=False)
    k = curvature(cfg, grid)
    i = int(np.argmax(k))
    h = 1.0 / 4096
    res = minimize_scalar(
        lambda t: -curvature(cfg, t),
        bounds=(grid[i] - h, grid[i] + h),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(max(-res.fun, k[i]))


def curvature_max(cfg: SystemConfig) -> float:
    """Maximum curvature of ``psi`` (scan plus bounded golden-section refine)."""
    return _curvature_max(float(cfg.phi))


def tubular_to_param(cfg: SystemConfig, tc: TubularCoord, check: bool = True) -> ParamPoint:
    theta, r = tc
    if check and r <= -1.0 / curvature_max(cfg):
        raise Degenerate(f"r={r} <= -1/kappa_max")
    p = psi(cfg, theta) + r * psi_normal(cfg, theta)
    return ParamPoint(float(p[0]), float(p[1]))


def _foot_point(cfg: SystemConfig, omega, n_seed: int = 256, maxiter: int = 50):
    om = np.asarray(omega, dtype=float)
    grid = np.arange(n_seed) / n_seed
    pts = psi(cfg, grid)
    d2 = (pts[0] - om[0]) ** 2 + (pts[1] - om[1]) ** 2
    th = float(grid[int(np.argmin(d2))])
    for _ in range(maxiter):
        diff = om - psi(cfg, th)
        d1 = psi_prime(cfg, th)
        h = diff @ d1
        dh = -(d1 @ d1) + diff @ psi_second(cfg, th)
        step = h / dh
        th -= step
        if abs(step) < 1e-15:
            break
    else:
        if abs(step) > 1e-12:
            raise NoConvergence(f"foot point Newton failed for Omega={tuple(om)}")
    th %= 1.0
    r = float((om - psi(cfg, th)) @ psi_normal(cfg, th))
    return th, r


def param_to_tubular(cfg: SystemConfig, omega) -> TubularCoord:
    """Inverse of :func:`tubular_to_param` on its injectivity domain."""
    th, r = _foot_point(cfg, omega)
    if r <= -1.0 / curvature_max(cfg):
        raise Degenerate(f"Omega={tuple(omega)} has r={r} <= -1/kappa_max")
    return TubularCoord(th, r)


def signed_distance(cfg: SystemConfig, omega) -> float:
    """Signed distance to the ellipse (negative inside); defined everywhere."""
    return _foot_point(cfg, omega)[1]


def region_classify(cfg: SystemConfig, omega, tol: float = 1e-9) -> RegionTag:
    # Nearest-point distance is used rather than param_to_tubular so that deep
    # hole points (beyond the injectivity radius) still classify.
    r = signed_distance(cfg, omega)
    eps = cfg.epsilon
    if abs(r - eps) <= tol:
        return RegionTag.OUTER_BOUNDARY
    if abs(r + eps) <= tol:
        return RegionTag.INNER_BOUNDARY
    if r > eps:
        return RegionTag.OUTSIDE
    if r < -eps:
        return RegionTag.HOLE
    return RegionTag.INTERIOR


def boundary_curve(cfg: SystemConfig, sign: int, n: int = 2048) -> np.ndarray:
    """Samples of the outer (``sign=+1``) or inner (``-1``) boundary, shape (2, n)."""
    th = np.arange(n) / n
    return psi(cfg, th) + sign * cfg.epsilon * psi_normal(cfg, th)


def winding_number(curve: np.ndarray, centre) -> float:
    ang = np.unwrap(np.arctan2(curve[1] - centre[1], curve[0] - centre[0]))
    total = ang[-1] - ang[0]
    last = math.atan2(curve[1, 0] - centre[1], curve[0, 0] - centre[0]) - math.atan2(
        curve[1, -1] - centre[1], curve[0, -1] - centre[0]
    )
    total += (last + math.pi) % TWO_PI - math.pi
    return total / TWO_PI


class CrossSection(NamedTuple):
    normal: np.ndarray
    certified_min: float
    argmin: tuple


def cross_section_functional(cfg: SystemConfig, omega, n_grid: int = 256) -> CrossSection:
    """Linear functional ``f = <N, (x, y)>`` with ``f' > 0`` for ``Omega`` outside R.

    Positivity is certified by minimising ``<N, G(Omega, s)>`` over an
    ``n_grid`` square torus grid followed by a local refinement.
    """
    th, r = _foot_point(cfg, omega)
    if r <= cfg.epsilon:
        raise PositivityFailed(f"Omega={tuple(omega)} is not outside R (r={r:.3g})")
    n = psi_normal(cfg, th)
    g = np.arange(n_grid) / n_grid
    X, Y = np.meshgrid(g, g, indexing="ij")
    F = eval_field(cfg, omega, (X, Y))
    val = n[0] * F[0] + n[1] * F[1]
    i, j = np.unravel_index(int(np.argmin(val)), val.shape)
    res = minimize(
        lambda s: float(n @ eval_field(cfg, omega, s)),
        x0=[g[i], g[j]],
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-15},
    )
    m = min(float(res.fun), float(val[i, j]))
    if m <= 0:
        raise PositivityFailed(f"min <N, G> = {m:.3g} <= 0 at Omega={tuple(omega)}")
    return CrossSection(n, m, (float(res.x[0]) % 1, float(res.x[1]) % 1))


def sample_region(cfg: SystemConfig, tag: RegionTag, n: int, rng: np.random.Generator,
                  strip: float | None = None) -> np.ndarray:
    """``n`` random ``Omega`` with the given tag, shape (n, 2).

    Interior points come from tubular coordinates with ``|r| < 0.999 eps``;
    boundary points sit exactly on ``r = +-eps``; hole and outside points are
    drawn by rejection.  ``strip`` keeps only ``|Omega_y| < strip``.
    """
    eps = cfg.epsilon
    if tag in (RegionTag.INTERIOR, RegionTag.INNER_BOUNDARY, RegionTag.OUTER_BOUNDARY):
        out = []
        while len(out) < n:
            th = rng.random()
            if tag is RegionTag.INTERIOR:
                r = eps * 0.999 * (2 * rng.random() - 1)
            else:
                r = eps if tag is RegionTag.OUTER_BOUNDARY else -eps
            p = psi(cfg, th) + r * psi_normal(cfg, th)
            if strip is None or abs(p[1]) < strip:
                out.append(p)
        return np.array(out)
    lo, hi = (np.array([-1.0, -1.0]), np.array([1.0, 1.0])) if tag is RegionTag.HOLE \
        else (np.array([-2.5, -1.5]), np.array([2.5, 1.5]))
    out = []
    while len(out) < n:
        p = lo + (hi - lo) * rng.random(2)
        if strip is not None and abs(p[1]) >= strip:
            continue
        if region_classify(cfg, p) is tag:
            out.append(p)
    return np.array(out)
