"""Reversible approximation near the top of the resonance region.

In the slow coordinates ``(x, eta)`` with ``y = 1/4 + sqrt(eps) eta`` the
leading-order system is

    x'   = 2 pi C eta
    eta' = rho - sin 2pi x + 2 pi^2 eta^2,

which is Hamiltonian for the area form ``exp(-2 pi x / C) dx ^ d eta`` with

    H(x, eta) = exp(-2 pi x / C) (C pi eta^2 + C rho / 2pi - g(x) / 4pi).

Orbits are level sets of ``H``; ``eta(x)`` is available in closed form
because ``H`` is quadratic in ``eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .family import TWO_PI, SystemConfig

PI = math.pi


class NoEquilibria(ValueError):
    pass


class EnergyOutOfRange(ValueError):
    pass


class AtNecklace(ValueError):
    pass


class ReducedParams(NamedTuple):
    rho: float
    alpha_tilde: float = 0.0


@dataclass(frozen=True)
class HamiltonianConstants:
    C: float
    x_g: float
    rho0: float
    g_amplitude: float


def constants(cfg: SystemConfig) -> HamiltonianConstants:
    C = cfg.C
    return HamiltonianConstants(
        C=C,
        x_g=math.atan(1.0 / C) / TWO_PI,
        rho0=-1.0 / math.sqrt(1.0 + C * C),
        g_amplitude=2.0 * C / math.sqrt(C * C + 1.0),
    )


def x_g(cfg: SystemConfig) -> float:
    return math.atan(1.0 / cfg.C) / TWO_PI


def rho0(cfg: SystemConfig) -> float:
    return -1.0 / math.sqrt(1.0 + cfg.C**2)


def g(cfg: SystemConfig, x):
    """Phase-shifted form of the auxiliary function ``g``."""
    C = cfg.C
    return 2.0 * C / math.sqrt(C * C + 1.0) * np.cos(TWO_PI * (x - x_g(cfg)))


def g_cartesian(cfg: SystemConfig, x):
    C = cfg.C
    return 2.0 * C / (C * C + 1.0) * (C * np.cos(TWO_PI * x) + np.sin(TWO_PI * x))


def g_prime(cfg: SystemConfig, x):
    C = cfg.C
    return -TWO_PI * 2.0 * C / math.sqrt(C * C + 1.0) * np.sin(TWO_PI * (x - x_g(cfg)))


def reduced_field(cfg: SystemConfig, rho, x, eta):
    C = cfg.C
    return np.array([TWO_PI * C * eta, rho - np.sin(TWO_PI * x) + 2 * PI**2 * eta**2])


def potential(cfg: SystemConfig, rho, x):
    """``H`` at ``eta = 0`` without the exponential weight."""
    return cfg.C * rho / TWO_PI - g(cfg, x) / (4 * PI)


def hamiltonian_H(cfg: SystemConfig, rho, x, eta):
    C = cfg.C
    return np.exp(-TWO_PI * x / C) * (C * PI * eta**2 + potential(cfg, rho, x))


def h_axis(cfg: SystemConfig, rho, x):
    """``H(x, 0)``; its critical points are the equilibria."""
    return np.exp(-TWO_PI * x / cfg.C) * potential(cfg, rho, x)


def saddle_center(rho: float) -> tuple[float, float]:
    """Abscissae of the saddle in (1/4, 3/4) and the centre in (-1/4, 1/4)."""
    if abs(rho) >= 1:
        raise NoEquilibria(f"|rho| = {abs(rho)} >= 1")
    a = math.asin(rho) / TWO_PI
    return 0.5 - a, a


def loop_geometry(cfg: SystemConfig, rho: float) -> tuple[float, float]:
    """Centre and the saddle bounding its homoclinic loop, on the universal cover.

    For ``rho > rho0`` the loop lies to the left of the saddle ``x_sad``; for
    ``rho < rho0`` it lies to the right of ``x_sad - 1``.  The centre is
    ``x_cen`` in both cases.
    """
    xs, xc = saddle_center(rho)
    if rho < rho0(cfg):
        xs -= 1.0
    return xc, xs


def energy_range(cfg: SystemConfig, rho: float) -> tuple[float, float]:
    xc, xs = loop_geometry(cfg, rho)
    return float(h_axis(cfg, rho, xc)), float(h_axis(cfg, rho, xs))


def necklace_loops(cfg: SystemConfig, x):
    """Upper and lower homoclinic loops at ``rho = rho0``."""
    amp = (1.0 + cfg.C**2) ** -0.25 / PI
    eta = amp * np.cos(PI * (np.asarray(x) - x_g(cfg)))
    return eta, -eta


@dataclass(frozen=True)
class EnergyOrbit:
    """Upper half (``eta >= 0``) of a closed level set of ``H``."""

    cfg: SystemConfig
    rho: float
    energy: float
    x_min: float
    x_max: float
    x_center: float
    x_saddle: float

    def eta2(self, x):
        C = self.cfg.C
        w = self.energy - h_axis(self.cfg, self.rho, x)
        return np.exp(TWO_PI * np.asarray(x) / C) * w / (C * PI)

    def eta(self, x):
        return np.sqrt(np.maximum(self.eta2(x), 0.0))

    __call__ = eta

    def residual(self, n: int = 200) -> float:
        xs = np.linspace(self.x_min, self.x_max, n + 2)[1:-1]
        H = hamiltonian_H(self.cfg, self.rho, xs, self.eta(xs))
        return float(np.max(np.abs(H - self.energy)))


def _root(f, a, b):
    return brentq(f, a, b, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)


def level_orbit(cfg: SystemConfig, rho: float, energy: float,
                rel_margin: float = 1e-8) -> EnergyOrbit:
    """Closed orbit of the reversible approximation at ``energy``."""
    xc, xs = loop_geometry(cfg, rho)
    e_cen, e_sad = energy_range(cfg, rho)
    d = rel_margin * (e_sad - e_cen)
    if not (e_cen + d <= energy <= e_sad - d):
        raise EnergyOutOfRange(f"E={energy!r} outside ({e_cen!r}, {e_sad!r})")
    f = lambda x: h_axis(cfg, rho, x) - energy
    far = xs - 1.0 if xs > xc else xs + 1.0
    r_near = _root(f, *sorted((xc, xs)))
    r_far = _root(f, *sorted((xc, far)))
    lo, hi = sorted((r_near, r_far))
    return EnergyOrbit(cfg, rho, float(energy), lo, hi, xc, xs)


def chc_orbit(cfg: SystemConfig, rho: float) -> EnergyOrbit:
    """Contractible homoclinic loop at ``E_sad``; endpoints are the saddle and the turning point."""
    r0 = rho0(cfg)
    if abs(rho - r0) < 1e-9:
        raise AtNecklace("rho is at the necklace value; use necklace_loops")
    if abs(rho) >= 1:
        raise NoEquilibria(f"|rho| = {abs(rho)} >= 1")
    xc, xs = loop_geometry(cfg, rho)
    e_sad = float(h_axis(cfg, rho, xs))
    far = xs - 1.0 if xs > xc else xs + 1.0
    turn = _root(lambda x: h_axis(cfg, rho, x) - e_sad, *sorted((xc, far)))
    lo, hi = sorted((turn, xs))
    return EnergyOrbit(cfg, rho, e_sad, lo, hi, xc, xs)
