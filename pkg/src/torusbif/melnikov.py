"""Pontryagin energy balance for the perturbed reversible approximation.

The sqrt(eps) correction to the reduced system is

    x'   += sqrt(eps) (C alpha~ - cos 2pi x + 2 pi^2 S eta^2),

so an orbit of the unperturbed system persists where the energy it gains
over one passage vanishes.  Every persistence condition below has the form
``alpha~ = b / (C a)`` for a pair of weighted integrals over the orbit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.optimize import minimize_scalar
from scipy.special import exprel

from .family import TWO_PI, ParamPoint, SystemConfig
from .geometry import psi, psi_normal
from .hamiltonian import (
    AtNecklace,
    EnergyOrbit,
    EnergyOutOfRange,
    ReducedParams,
    chc_orbit,
    energy_range,
    h_axis,
    level_orbit,
    loop_geometry,
    necklace_loops,
    rho0,
    saddle_center,
    x_g,
)

PI = math.pi


class QuadratureFailure(RuntimeError):
    pass


class InequalityViolated(RuntimeError):
    pass


def f_weight(cfg: SystemConfig, x):
    """``cos 2pi x + (C - S) sin 2pi x``."""
    return np.cos(TWO_PI * x) + (cfg.C - cfg.S) * np.sin(TWO_PI * x)


# -- rotational homoclinic connections ---------------------------------------

@dataclass(frozen=True)
class RhcConstants:
    a: float
    b: float
    c: float
    k: float
    a_quad: float = float("nan")
    b_quad: float = float("nan")
    c_quad: float = float("nan")

    @property
    def rel_errors(self) -> dict:
        return {n: abs(getattr(self, n + "_quad") - getattr(self, n)) / abs(getattr(self, n))
                for n in ("a", "b", "c")}


def rhc_closed_form(cfg: SystemConfig) -> tuple[float, float, float, float]:
    C, S = cfg.C, cfg.S
    k = (4 * C * math.exp(-math.atan(1 / C) / C) * math.cosh(PI / C)
         / (PI * (1 + C * C) ** 0.75 * (4 + C * C)))
    a = k * math.sqrt(1 + C * C)
    b = -k * 2 * C * C * (C + 2 * S) / (4 + 9 * C * C)
    c = k / 4 * (1 + C * C) ** 0.75 * (4 + C * C) * math.tanh(PI / C)
    return a, b, c, k


def rhc_constants(cfg: SystemConfig, quadrature: bool = True) -> RhcConstants:
    """Persistence constants of the upper necklace loop, closed form and by quadrature."""
    a, b, c, k = rhc_closed_form(cfg)
    if not quadrature:
        return RhcConstants(a, b, c, k)
    C, S = cfg.C, cfg.S
    xg = x_g(cfg)
    w = lambda x: math.exp(-TWO_PI * x / C)
    pre = -(1 + C * C) ** -0.25
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    lo, hi = xg - 0.5, xg + 0.5
    try:
        aq = pre * quad(lambda x: w(x) * math.sin(PI * (x - xg)), lo, hi, **opts)[0]
        bq = pre * quad(
            lambda x: w(x) * math.sin(PI * (x - xg))
            * (math.cos(TWO_PI * x) - 2 * S * math.cos(PI * (x - xg)) ** 2 / math.sqrt(1 + C * C)),
            lo, hi, **opts)[0]
        cq = quad(w, lo, hi, **opts)[0]
    except Exception as exc:  # pragma: no cover - scipy raises only on bad input
        raise QuadratureFailure(str(exc)) from exc
    return RhcConstants(a, b, c, k, aq, bq, cq)


# -- integrals over closed orbits --------------------------------------------

class OrbitIntegrals(NamedTuple):
    a: np.ndarray
    b: np.ndarray
    a_prime: np.ndarray
    b_prime: np.ndarray

    @property
    def alpha_tilde(self):
        raise AttributeError("needs C; use alpha_from_integrals")


def _bisect(fun, lo, hi, n_iter: int = 64):
    """Vectorised bisection; ``fun(lo)`` and ``fun(hi)`` must differ in sign elementwise."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo = fun(lo)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        same = np.sign(fm) == np.sign(flo)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def turning_points(cfg: SystemConfig, rho: float, energies):
    """Endpoints ``(x_min, x_max)`` of the orbits at ``energies`` (vectorised)."""
    E = np.atleast_1d(np.asarray(energies, dtype=float))
    xc, xs = loop_geometry(cfg, rho)
    far = xs - 1.0 if xs > xc else xs + 1.0
    fun = lambda x: h_axis(cfg, rho, x) - E
    near = _bisect(fun, np.full_like(E, xc), np.full_like(E, xs))
    other = _bisect(fun, np.full_like(E, xc), np.full_like(E, far))
    return np.minimum(near, other), np.maximum(near, other)


def _h_drop(cfg: SystemConfig, rho: float, x_end, x):
    """``H(x_end, 0) - H(x, 0)`` without cancelling the two values against each other."""
    C = cfg.C
    amp = 2.0 * C / math.sqrt(C * C + 1.0) / (4 * PI)
    xg = x_g(cfg)
    d = x - x_end
    # g(x_end) - g(x) via the cosine difference formula
    dg = 2.0 * np.sin(PI * (x + x_end - 2 * xg)) * np.sin(PI * d)
    pot = cfg.C * rho / TWO_PI - amp * np.cos(TWO_PI * (x - xg))
    inner = -amp * dg - np.expm1(-TWO_PI * d / C) * pot
    return np.exp(-TWO_PI * x_end / C) * inner


def _h_drop_over_u2(cfg: SystemConfig, rho: float, x_end, u, sign):
    """``_h_drop(x_end, x_end + sign u^2) / u^2``, finite at ``u = 0``."""
    C = cfg.C
    amp = 2.0 * C / math.sqrt(C * C + 1.0) / (4 * PI)
    xg = x_g(cfg)
    d = sign * u * u
    x = x_end + d
    dg = 2.0 * np.sin(PI * (x + x_end - 2 * xg)) * sign * PI * np.sinc(d)
    pot = cfg.C * rho / TWO_PI - amp * np.cos(TWO_PI * (x - xg))
    inner = -amp * dg + sign * (TWO_PI / C) * exprel(-TWO_PI * d / C) * pot
    return np.exp(-TWO_PI * x_end / C) * inner


def orbit_integrals(cfg: SystemConfig, rho: float, x_lo, x_hi, derivatives: bool = True,
                    epsabs: float = 1e-12, epsrel: float = 1e-10) -> OrbitIntegrals:
    """Weighted integrals of the upper half orbit between ``x_lo`` and ``x_hi``.

    Each half of the interval is mapped by ``x = endpoint -/+ u^2`` which
    removes the square-root behaviour of ``eta`` at the turning points;
    ``eta`` comes from the drop of ``H`` below its value at the nearer endpoint.
    """
    C, S = cfg.C, cfg.S
    x_lo = np.atleast_1d(np.asarray(x_lo, dtype=float))
    x_hi = np.atleast_1d(np.asarray(x_hi, dtype=float))
    mid = 0.5 * (x_lo + x_hi)
    U = np.sqrt(mid - x_lo)
    width = x_hi - x_lo
    eta_mid = np.sqrt(np.maximum(
        np.exp(TWO_PI * mid / C) * _h_drop(cfg, rho, x_lo, mid) / (C * PI), 1e-300))
    w_mid = np.exp(-TWO_PI * mid / C)
    scale_ab = 4 * PI / C * width * eta_mid * w_mid
    scale_d = 2 / C**2 * width / eta_mid
    n_comp = 4 if derivatives else 2

    def half(t, x_end, sign):
        u = t * U
        x = x_end + sign * u * u
        jac = 2.0 * u * U
        q = np.maximum(_h_drop_over_u2(cfg, rho, x_end, u, sign), 0.0)
        e = np.exp(-TWO_PI * x / C)
        # eta = u * eta_u
        eta_u = np.sqrt(np.exp(TWO_PI * x / C) * q / (C * PI))
        fs = f_weight(cfg, x) + S * rho
        ia = 4 * PI / C * e * eta_u * u * jac / scale_ab
        out = [ia, ia * fs]
        if derivatives:
            r = np.divide(2.0 * U, eta_u, out=np.zeros_like(eta_u), where=eta_u > 0)
            ida = 2 / C**2 * r / scale_d
            out += [ida, ida * fs]
        return np.stack(out)

    def integrand(t):
        return half(t, x_lo, +1.0) + half(t, x_hi, -1.0)

    val, err = quad_vec(integrand, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel, norm="max", limit=2000)
    a = val[0] * scale_ab
    b = val[1] * scale_ab
    if derivatives:
        return OrbitIntegrals(a, b, val[2] * scale_d, val[3] * scale_d)
    nan = np.full_like(a, np.nan)
    return OrbitIntegrals(a, b, nan, nan)


def alpha_from_integrals(cfg: SystemConfig, I: OrbitIntegrals):
    return I.b / (cfg.C * I.a)


def alpha_prime_from_integrals(cfg: SystemConfig, I: OrbitIntegrals):
    """Exact ``d alpha~ / dE`` along the family of closed orbits."""
    return (I.b_prime * I.a - I.b * I.a_prime) / (cfg.C * I.a**2)


def ratio_derivative_from_integrals(I: OrbitIntegrals):
    """``d(a/b)/dE``, the quantity whose sign opposes that of ``d alpha~/dE``."""
    return (I.a_prime * I.b - I.a * I.b_prime) / I.b**2


# -- extrapolation -----------------------------------------------------------

def extrapolate(ts, values, basis) -> float:
    """Constant term of a fit ``values ~ c0 + sum_k c_k basis_k(t)``.

    With as many samples as unknowns this is Richardson elimination; with
    more it is the least-squares version.
    """
    t = np.asarray(ts, dtype=float)
    cols = [np.ones_like(t)] + [np.asarray(fn(t), dtype=float) for fn in basis]
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    return float(coef[0])


def ladder(t0: float, n: int, ratio: float = 0.25) -> np.ndarray:
    return t0 * ratio ** np.arange(n)


POWER_BASIS = lambda k: [lambda t, p=p: t**p for p in range(1, k + 1)]
SEPARATRIX_BASIS = [lambda t: t * np.log(t), lambda t: t,
                    lambda t: t * t * np.log(t), lambda t: t * t]


# -- contractible periodic orbits --------------------------------------------

def _normalised_energies(cfg, rho, u):
    e_cen, e_sad = energy_range(cfg, rho)
    return e_cen + np.asarray(u, dtype=float) * (e_sad - e_cen)


def _check_energy(cfg, rho, E, margin=0.0):
    e_cen, e_sad = energy_range(cfg, rho)
    E = np.atleast_1d(E)
    if np.any(E <= e_cen) or np.any(E >= e_sad):
        raise EnergyOutOfRange(f"E outside ({e_cen!r}, {e_sad!r})")


def cpo_integrals(cfg: SystemConfig, E, rho: float, derivatives: bool = True) -> OrbitIntegrals:
    _check_energy(cfg, rho, E)
    lo, hi = turning_points(cfg, rho, E)
    return orbit_integrals(cfg, rho, lo, hi, derivatives)


def cpo_alpha(cfg: SystemConfig, E, rho: float):
    """``alpha~`` along which the closed orbit at energy ``E`` persists."""
    out = alpha_from_integrals(cfg, cpo_integrals(cfg, E, rho, derivatives=False))
    return float(out[0]) if np.ndim(E) == 0 else out


def cpo_alpha_prime(cfg: SystemConfig, E, rho: float):
    """``d alpha~ / dE`` of the persistence curve, from the endpoint-singular integrals."""
    out = alpha_prime_from_integrals(cfg, cpo_integrals(cfg, E, rho))
    return float(out[0]) if np.ndim(E) == 0 else out


def cpo_alpha_u(cfg: SystemConfig, rho: float, u):
    return cpo_alpha(cfg, _normalised_energies(cfg, rho, u), rho)


def centre_alpha(cfg: SystemConfig, rho: float) -> float:
    """Value of ``(f + S rho)/C`` at the centre, i.e. the small-orbit limit."""
    return rho + math.sqrt(1 - rho * rho) / cfg.C


def cpo_centre_limit(cfg: SystemConfig, rho: float, t0: float = 1e-2, n: int = 5) -> float:
    ts = ladder(t0, n)
    return extrapolate(ts, cpo_alpha_u(cfg, rho, ts), POWER_BASIS(n - 1))


def cpo_saddle_limit(cfg: SystemConfig, rho: float, t0: float = 1e-3, n: int = 7) -> float:
    ts = ladder(t0, n)
    return extrapolate(ts, cpo_alpha_u(cfg, rho, 1 - ts), SEPARATRIX_BASIS)


# -- contractible homoclinic loops and neutral saddles -----------------------

def chc_integrals(cfg: SystemConfig, rho: float) -> OrbitIntegrals:
    if not (-1 + 1e-6 <= rho <= 1 - 1e-6):
        raise ValueError(f"rho={rho} too close to +-1")
    orb = chc_orbit(cfg, rho)
    return orbit_integrals(cfg, rho, orb.x_min, orb.x_max, derivatives=False)


def chc_alpha(cfg: SystemConfig, rho: float) -> float:
    """``alpha~`` of the curve along which the contractible homoclinic loop persists."""
    return float(alpha_from_integrals(cfg, chc_integrals(cfg, rho))[0])


def chc_alpha_area(cfg: SystemConfig, rho: float) -> float:
    """Same quantity as a ratio of area integrals over the enclosed region."""
    from scipy.integrate import dblquad

    C, S = cfg.C, cfg.S
    orb = chc_orbit(cfg, rho)
    w = lambda eta, x: math.exp(-TWO_PI * x / C)
    wf = lambda eta, x: (float(f_weight(cfg, x)) + S * rho) / C * math.exp(-TWO_PI * x / C)
    lo_eta = lambda x: -float(orb.eta(x))
    hi_eta = lambda x: float(orb.eta(x))
    opts = dict(epsabs=1e-13, epsrel=1e-10)
    num = dblquad(wf, orb.x_min, orb.x_max, lo_eta, hi_eta, **opts)[0]
    den = dblquad(w, orb.x_min, orb.x_max, lo_eta, hi_eta, **opts)[0]
    return num / den


def chc_limit_edge(cfg: SystemConfig, sign: int, t0: float = 1e-2, n: int = 6) -> float:
    """Extrapolated ``chc_alpha`` as ``rho -> sign * 1`` on a ladder in ``1 - |rho|``."""
    ts = ladder(t0, n)
    vals = [chc_alpha(cfg, sign * (1 - t)) for t in ts]
    return extrapolate(np.sqrt(ts), vals, POWER_BASIS(n - 1))


def ns_alpha(cfg: SystemConfig, rho: float) -> float:
    """``alpha~`` of the neutral-saddle curve."""
    if abs(rho) >= 1:
        raise ValueError("|rho| must be < 1")
    xs, _ = saddle_center(rho)
    return (cfg.C * math.sin(TWO_PI * xs) + math.cos(TWO_PI * xs)) / cfg.C


def trace_zero_residual(cfg: SystemConfig, rho: float, alpha_tilde: float) -> float:
    """``rho^2 + C^2 (alpha~ - rho)^2 - 1``; zero on the trace-zero loop."""
    return rho * rho + cfg.C**2 * (alpha_tilde - rho) ** 2 - 1.0


def chc_limit_necklace(cfg: SystemConfig, side: int, t0: float = 1e-4, n: int = 7) -> float:
    """Extrapolated ``chc_alpha`` as ``rho -> rho0`` from above (``side=+1``) or below.

    The approach is like ``d log d`` in ``d = |rho - rho0|``.
    """
    ts = ladder(t0, n)
    r0 = rho0(cfg)
    vals = [chc_alpha(cfg, r0 + side * t) for t in ts]
    return extrapolate(ts, vals, SEPARATRIX_BASIS)


# -- density map of d alpha~/dE ------------------------------------------------

@dataclass(frozen=True)
class DensityGrid:
    rho: np.ndarray
    u: np.ndarray
    E: np.ndarray
    alpha_tilde: np.ndarray
    alpha_prime: np.ndarray

    def max_alpha_prime(self) -> tuple[float, float, float]:
        """Largest ``alpha~'`` on the grid with its ``(rho, u)`` location."""
        i, j = np.unravel_index(int(np.argmax(self.alpha_prime)), self.alpha_prime.shape)
        return float(self.alpha_prime[i, j]), float(self.rho[i]), float(self.u[j])

    def max_abs_alpha_prime(self) -> tuple[float, float, float]:
        i, j = np.unravel_index(int(np.argmax(np.abs(self.alpha_prime))), self.alpha_prime.shape)
        return float(abs(self.alpha_prime[i, j])), float(self.rho[i]), float(self.u[j])

    def rows(self):
        for i, r in enumerate(self.rho):
            for j, u in enumerate(self.u):
                yield (float(r), float(u), float(self.E[i, j]),
                       float(self.alpha_tilde[i, j]), float(self.alpha_prime[i, j]))

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "u", "E", "alpha_tilde", "alpha_prime"])
            for row in self.rows():
                w.writerow([repr(v) for v in row])


def _density_row(args):
    eps, phi, rho, u = args
    cfg = SystemConfig(eps, phi, validate=False)
    E = _normalised_energies(cfg, rho, u)
    lo, hi = turning_points(cfg, rho, E)
    I = orbit_integrals(cfg, rho, lo, hi)
    return E, alpha_from_integrals(cfg, I), alpha_prime_from_integrals(cfg, I)


def density_grid(cfg: SystemConfig, n_rho: int = 200, n_E: int = 200,
                 u_margin: float = 1e-6, workers: int = 1) -> DensityGrid:
    """``alpha~`` and ``d alpha~/dE`` over the region between the centre and chc curves.

    Rows are cell-centred in ``rho`` on ``(-1, 1)``; columns are uniform in the
    normalised energy on ``[u_margin, 1 - u_margin]``.
    """
    if n_rho < 2 or n_E < 2:
        raise ValueError("n_rho and n_E must be >= 2")
    rho = -1.0 + (2.0 * np.arange(n_rho) + 1.0) / n_rho
    r0 = rho0(cfg)
    rho = np.where(np.abs(rho - r0) < 1e-9, rho + 2e-9, rho)
    u = np.linspace(u_margin, 1.0 - u_margin, n_E)
    jobs = [(cfg.epsilon, cfg.phi, float(r), u) for r in rho]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            out = list(ex.map(_density_row, jobs))
    else:
        out = [_density_row(j) for j in jobs]
    E = np.stack([o[0] for o in out])
    A = np.stack([o[1] for o in out])
    Ap = np.stack([o[2] for o in out])
    return DensityGrid(rho, u, E, A, Ap)


# -- scaling chain between reduced and original parameters --------------------

def reduced_to_omega(cfg: SystemConfig, rho: float, alpha_tilde: float, side: int = 1) -> ParamPoint:
    """Map ``(rho, alpha~)`` near the top (``side=+1``) or bottom extremity to ``Omega``.

    ``theta = 1/4 - eps alpha~ / 2pi`` and ``r = eps rho``; the bottom is the
    image of the top under ``Omega -> -Omega``.
    """
    th = 0.25 - cfg.epsilon * alpha_tilde / TWO_PI
    r = cfg.epsilon * rho
    p = psi(cfg, th) + r * psi_normal(cfg, th)
    if side < 0:
        p = -p
    return ParamPoint(float(p[0]), float(p[1]))


def omega_to_reduced(cfg: SystemConfig, omega) -> tuple[ReducedParams, int]:
    from .geometry import param_to_tubular

    th, r = param_to_tubular(cfg, omega)
    d_top = (th - 0.25 + 0.5) % 1.0 - 0.5
    d_bot = (th - 0.75 + 0.5) % 1.0 - 0.5
    side, d = (1, d_top) if abs(d_top) <= abs(d_bot) else (-1, d_bot)
    return ReducedParams(float(r / cfg.epsilon), float(-TWO_PI * d / cfg.epsilon)), side


class PointKind(str, enum.Enum):
    N = "N"
    K = "K"
    H = "H"
    Z = "Z"
    B = "B"


@dataclass(frozen=True)
class CodimTwoPoint:
    kind: PointKind
    reduced: ReducedParams
    omega: ParamPoint
    side: int = 1
    rho_tilde: float = float("nan")
    label: str = ""
    extra: dict = field(default_factory=dict, compare=False)


def rhc_line_rho_tilde(cfg: SystemConfig, alpha_tilde, sign: int, consts: RhcConstants | None = None):
    """``rho~`` on the upper (``sign=+1``) or lower persistence line of the rotational loops."""
    k = consts or rhc_constants(cfg, quadrature=False)
    return sign * (cfg.C * k.a * np.asarray(alpha_tilde) - k.b) / k.c


def rhc_line_alpha(cfg: SystemConfig, rho_tilde, sign: int, consts: RhcConstants | None = None):
    k = consts or rhc_constants(cfg, quadrature=False)
    return (k.b + sign * k.c * np.asarray(rho_tilde)) / (cfg.C * k.a)


def n_alpha(cfg: SystemConfig) -> float:
    C, S = cfg.C, cfg.S
    return -2 * C * (C + 2 * S) / ((4 + 9 * C * C) * math.sqrt(1 + C * C))


def n_point(cfg: SystemConfig, side: int = 1) -> CodimTwoPoint:
    """Crossing of the two rotational-loop persistence lines."""
    k = rhc_constants(cfg, quadrature=False)
    al = k.b / (cfg.C * k.a)
    r0 = rho0(cfg)
    if trace_zero_residual(cfg, r0, al) >= 0:
        raise InequalityViolated("N point is not inside the trace-zero loop")
    return CodimTwoPoint(PointKind.N, ReducedParams(r0, al), reduced_to_omega(cfg, r0, al, side),
                         side, 0.0, "N" + ("+" if side > 0 else "-"))


def n_points(cfg: SystemConfig) -> list[CodimTwoPoint]:
    return [n_point(cfg, 1), n_point(cfg, -1)]


@dataclass(frozen=True)
class KPoint:
    alpha_tilde: float
    rho_tilde: float
    rho_tilde_from_lines: float
    ns_slope: float
    ns_slope_closed_form: float


def k_point(cfg: SystemConfig) -> KPoint:
    """Leading-order crossing of the upper rotational-loop line with the neutral-saddle curve."""
    C, S = cfg.C, cfg.S
    r0 = rho0(cfg)
    al = 2 * r0
    rt = -16 * C * (2 - S * C + 4 * C * C) / (
        (1 + C * C) ** 0.75 * (4 + C * C) * (4 + 9 * C * C) * math.tanh(PI / C))
    h = 1e-6
    slope = (ns_alpha(cfg, r0 + h) - ns_alpha(cfg, r0 - h)) / (2 * h)
    return KPoint(al, rt, float(rhc_line_rho_tilde(cfg, al, 1)), slope, -S * S / (C * C))


def k_points(cfg: SystemConfig) -> list[CodimTwoPoint]:
    kp = k_point(cfg)
    r0 = rho0(cfg)
    se = cfg.sqrt_eps
    out = []
    for side in (1, -1):
        for sign in (1, -1):
            rt = float(rhc_line_rho_tilde(cfg, kp.alpha_tilde, sign))
            rho = r0 + se * rt
            out.append(CodimTwoPoint(PointKind.K, ReducedParams(rho, kp.alpha_tilde),
                                     reduced_to_omega(cfg, rho, kp.alpha_tilde, side), side, rt,
                                     f"K{'+' if side > 0 else '-'}{'u' if sign > 0 else 'l'}"))
    return out


def z_points(cfg: SystemConfig) -> list[CodimTwoPoint]:
    """Ends of the rotational-loop lines on the boundary of the resonance region."""
    r0 = rho0(cfg)
    se = cfg.sqrt_eps
    k = rhc_constants(cfg, quadrature=False)
    out = []
    for side in (1, -1):
        for sign in (1, -1):
            for rho_b in (1.0, -1.0):
                rt = (rho_b - r0) / se
                al = float(rhc_line_alpha(cfg, rt, sign, k))
                out.append(CodimTwoPoint(
                    PointKind.Z, ReducedParams(rho_b, al), reduced_to_omega(cfg, rho_b, al, side),
                    side, rt, f"Z{'+' if side > 0 else '-'}{'u' if sign > 0 else 'l'}"
                              f"{'o' if rho_b > 0 else 'i'}"))
    return out


# -- sampled persistence curves -------------------------------------------------

class CurveKind(str, enum.Enum):
    RHC_PLUS = "RhcPlus"
    RHC_MINUS = "RhcMinus"
    CHC = "Chc"
    NS = "Ns"
    CPO = "Cpo"
    SNP = "Snp"


@dataclass(frozen=True)
class PersistCurve:
    kind: CurveKind
    abscissa: np.ndarray
    alpha_tilde: np.ndarray
    label: str = ""
    failures: tuple = ()  # (abscissa, reason) for samples that could not be computed

    def __post_init__(self):
        if not np.all(np.diff(self.abscissa) > 0):
            raise ValueError("abscissa must be strictly increasing")
        if not np.all(np.isfinite(self.alpha_tilde)):
            raise ValueError("non-finite alpha~")

    @property
    def samples(self):
        return list(zip(self.abscissa.tolist(), self.alpha_tilde.tolist()))


def rhc_curve(cfg: SystemConfig, sign: int, rho_tilde) -> PersistCurve:
    rt = np.asarray(rho_tilde, dtype=float)
    kind = CurveKind.RHC_PLUS if sign > 0 else CurveKind.RHC_MINUS
    return PersistCurve(kind, rt, np.asarray(rhc_line_alpha(cfg, rt, sign), dtype=float), kind.value)


def chc_curve(cfg: SystemConfig, rhos) -> PersistCurve:
    r = np.asarray(rhos, dtype=float)
    return PersistCurve(CurveKind.CHC, r, np.array([chc_alpha(cfg, v) for v in r]), "chc")


def ns_curve(cfg: SystemConfig, rhos) -> PersistCurve:
    r = np.asarray(rhos, dtype=float)
    return PersistCurve(CurveKind.NS, r, np.array([ns_alpha(cfg, v) for v in r]), "ns")


def cpo_curve(cfg: SystemConfig, rho: float, energies) -> PersistCurve:
    E = np.asarray(energies, dtype=float)
    return PersistCurve(CurveKind.CPO, E, np.asarray(cpo_alpha(cfg, E, rho)), f"cpo rho={rho:g}")


def rho_grid(cfg: SystemConfig, n: int, margin: float = 1e-3) -> np.ndarray:
    """Interior grid of ``(-1, 1)`` avoiding the necklace value."""
    r = np.linspace(-1 + margin, 1 - margin, n)
    r0 = rho0(cfg)
    return np.where(np.abs(r - r0) < margin, r0 + np.where(r >= r0, margin, -margin), r)


# -- chc versus neutral saddle: the positivity argument -------------------------

def _c_minus_s(cfg: SystemConfig) -> float:
    # exact zero at phi = 1/8
    return math.sqrt(2.0) * math.sin(TWO_PI * (0.125 - cfg.phi))


def rho_t(cfg: SystemConfig) -> float:
    d = _c_minus_s(cfg)
    return -d / math.sqrt(2 - 2 * cfg.C * cfg.S) + 0.0


def x_f(cfg: SystemConfig) -> float:
    """Maximiser of ``f``; its minimum sits at ``x_f + 1/2``."""
    return math.atan(_c_minus_s(cfg)) / TWO_PI


def f_prime(cfg: SystemConfig, x):
    return TWO_PI * (-np.sin(TWO_PI * x) + (cfg.C - cfg.S) * np.cos(TWO_PI * x))


def F_antiderivative(cfg: SystemConfig, x, f_sad: float):
    """Satisfies ``F' = -(f - f_sad) exp(-2 pi x / C)``."""
    C = cfg.C
    return (C * np.exp(-TWO_PI * x / C) / (TWO_PI * (1 + C * C))
            * (f_weight(cfg, x) + C / TWO_PI * f_prime(cfg, x) - (1 + C * C) * f_sad))


def l_bound(cfg: SystemConfig, rho: float) -> float:
    C = cfg.C
    q = math.exp(-TWO_PI / C)
    inner = (1 + q) * math.sqrt(1 - rho * rho) - (1 - q) * C * rho
    return math.sqrt(C) / (math.sqrt(2) * PI * math.sqrt(1 + C * C)) * math.sqrt(inner)


@dataclass
class PositivityReport:
    rho: float
    branch: str
    direct_integral: float
    chc_alpha: float
    ns_alpha: float
    eta_max: float
    rho_t: float
    x_f: float
    links: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.direct_integral > 0 and all(self.links.values())


def positivity_verify(cfg: SystemConfig, rho: float, n_sample: int = 4001,
                      raise_on_failure: bool = False) -> PositivityReport:
    """Check that the chc curve stays strictly above the neutral-saddle curve at ``rho``.

    The direct test is positivity of ``int (f - f(x_sad)) exp(-2pi x/C) eta dx``
    over the homoclinic loop.  For ``rho0 < rho`` every link of the bounding
    argument (symmetry about the minimum of ``f``, the split at ``x_mid``,
    the antiderivative ``F``, the bounds on ``eta``, and the final exponential
    inequality) is evaluated as well.
    """
    C, S = cfg.C, cfg.S
    orb = chc_orbit(cfg, rho)
    xs, xc = orb.x_saddle, orb.x_center
    f_s = float(f_weight(cfg, xs))
    I = chc_integrals(cfg, rho)
    direct = float((C / (4 * PI)) * (I.b[0] - (f_s + S * rho) * I.a[0]))
    xx = np.linspace(orb.x_min, orb.x_max, n_sample)
    eta = orb.eta(xx)
    rt, xf = rho_t(cfg), x_f(cfg)
    rep = PositivityReport(rho, "right" if rho > rho0(cfg) else "left", direct,
                           chc_alpha(cfg, rho), ns_alpha(cfg, rho), float(eta.max()), rt, xf)
    rep.links["eta_max_le_1_over_pi"] = rep.eta_max <= 1 / PI + 1e-12
    rep.links["chc_above_ns"] = rep.chc_alpha > rep.ns_alpha
    if rho > rho0(cfg):
        if rho >= rt:
            rep.links["f_above_f_sad"] = bool(np.all(f_weight(cfg, xx) >= f_s - 1e-12))
        else:
            x_mid = 2 * xf + 1 - xs
            rep.values["x_mid"] = x_mid
            rep.links["f_mid_eq_f_sad"] = abs(float(f_weight(cfg, x_mid)) - f_s) < 1e-12
            rep.links["x_cen_lt_x_mid_lt_x_sad"] = xc < x_mid < xs
            left = xx <= x_mid
            rep.links["f_above_left_of_mid"] = bool(np.all(f_weight(cfg, xx[left]) >= f_s - 1e-12))
            # eta has a single interior maximum, so its minimum on [x_cen, x_mid]
            # is at an endpoint; the maximum on [x_mid, x_sad] is refined
            eta_c, eta_mid = float(orb.eta(xc)), float(orb.eta(x_mid))
            eta_p = min(eta_c, eta_mid)
            res = minimize_scalar(lambda v: -float(orb.eta(v)), bounds=(x_mid, xs),
                                  method="bounded", options={"xatol": 1e-12})
            eta_m = max(eta_mid, -float(res.fun))
            rep.values.update(eta_plus_min=eta_p, eta_minus_max=eta_m)
            w = lambda a, b: quad(lambda x: (float(f_weight(cfg, x)) - f_s) * math.exp(-TWO_PI * x / C),
                                  a, b, epsabs=1e-14, epsrel=1e-12)[0]
            ip, im = w(xc, x_mid), -w(x_mid, xs)
            Fc, Fm, Fs = (float(F_antiderivative(cfg, v, f_s)) for v in (xc, x_mid, xs))
            rep.values.update(F_cen=Fc, F_mid=Fm, F_sad=Fs, int_pos=ip, int_neg=im)
            rep.links["F_is_antiderivative"] = (abs((Fc - Fm) - ip) <= 1e-10 * max(1.0, abs(ip))
                                                and abs((Fs - Fm) - im) <= 1e-10 * max(1.0, abs(im)))
            rep.links["split_inequality"] = eta_p * ip > eta_m * im
            rep.links["F_form"] = eta_p * Fc > eta_m * Fs - (eta_m - eta_p) * Fm
            e = lambda v: math.exp(-TWO_PI * v / C)
            rep.links["eta_plus_min_inequality"] = eta_p * e(xc) > eta_m * e(xs) + (eta_m - eta_p) * e(x_mid)
            lmin = min(l_bound(cfg, rho0(cfg)), l_bound(cfg, rt))
            rep.values["l_min"] = lmin
            if eta_c <= eta_mid:
                rep.values["eta_plus_min_at"] = "x_cen"
                q = math.exp(-TWO_PI * (xs - xc) / C)
                sq = math.sqrt(1 - rho * rho)
                closed = C / (2 * PI**2 * (1 + C * C)) * (sq - C * rho + q * (sq + C * rho))
                rep.links["eta_cen_closed_form"] = abs(eta_c**2 - closed) < 1e-10
                rep.links["eta_plus_min_ge_l"] = eta_p >= l_bound(cfg, rho) - 1e-12
                rep.links["l_ge_l_min"] = l_bound(cfg, rho) >= lmin - 1e-12
            else:
                rep.values["eta_plus_min_at"] = "x_mid"
                rep.links["mid_case_equal"] = abs(eta_m - eta_p) < 1e-9
                rep.links["mid_case_exponential"] = math.exp(-TWO_PI * (xc - xs) / C) > 1
            lhs = math.exp(-TWO_PI * (2 * xf - 0.5) / C)
            rep.values["final_lhs"], rep.values["final_rhs"] = lhs, 2 / (PI * lmin)
            rep.links["final_inequality"] = lhs > 2 / (PI * lmin)
    if raise_on_failure and not rep.ok:
        raise InequalityViolated(f"rho={rho}: {rep}")
    return rep
