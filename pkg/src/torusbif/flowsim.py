"""Direct integration of the torus flow and of the perturbed reduced system.

Accurate work goes through scipy's DOP853 (8th-order Dormand-Prince with
embedded error control).  Parameter sweeps that only need to bracket roots
use a fixed-step RK4 advancing many initial conditions at once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .family import TWO_PI, ParamPoint, StatePoint, SystemConfig, eval_field, trace_det
from .hamiltonian import ReducedParams, loop_geometry, rho0, x_g

PI = math.pi
DEFAULT_STRIP_K = 10.0


class StepUnderflow(RuntimeError):
    pass


class NoSection(RuntimeError):
    pass


class NoTransit(RuntimeError):
    pass


class NotFound(RuntimeError):
    pass


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (2, n), lifted to the universal cover
    omega: ParamPoint | None = None
    events: tuple = ()

    @property
    def end(self) -> StatePoint:
        return StatePoint(float(self.states[0, -1]), float(self.states[1, -1]))

    def max_jump(self) -> float:
        if self.states.shape[1] < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.states, axis=1))))


def _solve(rhs, s0, t_end, tol, events=None, dense=False, max_step=np.inf, t_eval=None):
    sol = solve_ivp(rhs, (0.0, t_end), np.asarray(s0, dtype=float), method="DOP853",
                    rtol=tol, atol=tol, events=events, dense_output=dense,
                    max_step=max_step, t_eval=t_eval)
    if sol.status < 0:
        raise StepUnderflow(sol.message)
    return sol


def integrate(cfg: SystemConfig, omega, s0, t_end: float, tol: float = 1e-9,
              events=None, max_step: float = 0.05) -> Trajectory:
    """Integrate the torus flow from ``s0``; negative ``t_end`` runs backwards."""
    if t_end == 0 or tol <= 0:
        raise ValueError("need t_end != 0 and tol > 0")
    om = (float(omega[0]), float(omega[1]))
    rhs = lambda t, s: eval_field(cfg, om, s)
    sol = _solve(rhs, s0, t_end, tol, events=events, max_step=max_step)
    ev = tuple(sol.t_events) if sol.t_events is not None else ()
    return Trajectory(sol.t, sol.y, ParamPoint(*om), ev)


def rk4_first_crossing(rhs, y0, event, dt: float, t_max: float, dead=None):
    """Advance every column of ``y0`` with RK4 until ``event`` turns positive.

    ``rhs(y)`` and ``event(y)`` act on arrays of shape (d, n).  Returns the
    linearly interpolated crossing states (NaN where none occurred within
    ``t_max``) and crossing times.  Columns for which ``dead(y)`` holds are
    dropped without a crossing.
    """
    y = np.array(y0, dtype=float)
    n = y.shape[1]
    out = np.full_like(y, np.nan)
    t_hit = np.full(n, np.nan)
    alive = np.ones(n, dtype=bool)
    g_old = event(y)
    t = 0.0
    h = abs(dt) * (1 if dt > 0 else -1)
    while t < t_max and alive.any():
        ya = y[:, alive]
        k1 = rhs(ya)
        k2 = rhs(ya + 0.5 * h * k1)
        k3 = rhs(ya + 0.5 * h * k2)
        k4 = rhs(ya + h * k3)
        yn = ya + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        gn = event(yn)
        go = g_old[alive]
        hit = (go <= 0) & (gn > 0)
        if hit.any():
            idx = np.flatnonzero(alive)[hit]
            lam = go[hit] / (go[hit] - gn[hit])
            out[:, idx] = ya[:, hit] + lam * (yn[:, hit] - ya[:, hit])
            t_hit[idx] = t + lam * abs(h)
        y[:, alive] = yn
        g_old[alive] = gn
        gone = hit if dead is None else hit | dead(yn) | ~np.isfinite(yn).all(axis=0)
        alive[np.flatnonzero(alive)[gone]] = False
        t += abs(h)
    return out, t_hit


# -- horizontal invariant circles ------------------------------------------------

class Stability(str, enum.Enum):
    ATTRACTING = "Attracting"
    REPELLING = "Repelling"


@dataclass(frozen=True)
class InvariantCircle:
    y0: float
    homotopy: tuple
    graph_samples: np.ndarray  # shape (2, n): x in [0, 1), y
    stability: Stability
    x_direction: int
    multiplier: float
    residual: float
    mean_x_speed: float


def _sweep_field(cfg, omega):
    ox, oy = omega
    eps, phi = cfg.epsilon, cfg.phi

    def rhs(s):
        x, y = s
        return np.stack([ox - np.cos(TWO_PI * (y - phi)) - eps * np.cos(TWO_PI * x),
                         oy - np.sin(TWO_PI * y) - eps * np.sin(TWO_PI * x)])
    return rhs


def return_map(cfg: SystemConfig, omega, y, x0: float = 0.0, backward: bool = False,
               tol: float = 1e-11, t_max: float = 400.0):
    """First return to ``x = x0 (mod 1)`` after one full turn; ``(y_return, side, time)``."""
    ev = lambda t, s: (s[0] - x0) ** 2 - 1.0
    ev.terminal, ev.direction = True, 1
    tr = integrate(cfg, omega, (x0, y), -t_max if backward else t_max, tol, events=[ev], max_step=0.5)
    if len(tr.events[0]) == 0:
        raise NoSection(f"no return from y={y} within t={t_max}")
    x, yr = tr.states[:, -1]
    return float(yr), int(np.sign(x - x0)), float(abs(tr.times[-1]))


def _sweep_brackets(cfg, omega, n, x0, backward, dt, t_max):
    ys = np.arange(n) / n
    rhs = _sweep_field(cfg, omega)
    f = (lambda s: -rhs(s)) if backward else rhs
    ev = lambda s: (s[0] - x0) ** 2 - 1.0
    end, _ = rk4_first_crossing(f, np.stack([np.full(n, x0), ys]), ev, dt, t_max)
    d = end[1] - ys
    side = np.sign(end[0] - x0)
    out = []
    for i in range(n):
        j = (i + 1) % n
        if not (np.isfinite(d[i]) and np.isfinite(d[j])) or side[i] != side[j]:
            continue
        # a jump by a whole turn is a lift discontinuity, not a root
        if np.sign(d[i]) != np.sign(d[j]) and abs(d[i] - d[j]) < 0.5:
            hi = ys[j] + (1.0 if j == 0 else 0.0)
            out.append((ys[i], hi, int(side[i])))
    return out


def _dedupe(vals, tol=1e-6):
    keep = []
    for v in sorted(vals, key=lambda c: c[0] % 1.0):
        if all(min(abs((v[0] - k[0]) % 1.0), 1 - abs((v[0] - k[0]) % 1.0)) > tol for k in keep):
            keep.append(v)
    return keep


def _refine_fixed_point(cfg, omega, lo, hi, side, x0, backward):
    def fn(y):
        yr, sd, _ = return_map(cfg, omega, y, x0, backward)
        if sd != side:
            raise NoSection("return side changed inside bracket")
        return yr - y
    return brentq(fn, lo, hi, xtol=1e-13, maxiter=200)


def _circle_graph(cfg, omega, y0, x0, direction, n=256):
    ev = lambda t, s: (s[0] - x0) ** 2 - 1.0
    ev.terminal, ev.direction = True, 1
    # third component accumulates the divergence, i.e. the log of the return multiplier
    rhs = lambda t, w: np.append(eval_field(cfg, omega, w[:2]), trace_det(cfg, w[:2])[0])
    sol = solve_ivp(rhs, (0.0, 400.0), [x0, y0, 0.0], method="DOP853",
                    rtol=1e-11, atol=1e-11, events=[ev], dense_output=True, max_step=0.05)
    T = sol.t_events[0][0]
    log_mult = float(sol.y_events[0][0][2])
    tt = np.linspace(0.0, T, 4 * n)
    xs, ys = sol.sol(tt)[:2]
    order = np.argsort(xs)
    xq = x0 + direction * np.arange(n) / n
    yq = np.interp(np.sort(xq), xs[order], ys[order])
    xw = np.sort(xq) % 1.0
    o = np.argsort(xw)
    return np.stack([xw[o], yq[o]]), T, log_mult


def invariant_circles(cfg: SystemConfig, omega, n_sweep: int = 128, x0: float = 0.0,
                      dt: float = 0.01, t_max: float = 200.0) -> list[InvariantCircle]:
    """Horizontal invariant circles as fixed points of the return map to ``x = x0``."""
    omega = (float(omega[0]), float(omega[1]))
    found = []
    for backward in (False, True):
        for lo, hi, side in _sweep_brackets(cfg, omega, n_sweep, x0, backward, dt, t_max):
            try:
                y = _refine_fixed_point(cfg, omega, lo, hi, side, x0, backward)
            except (NoSection, ValueError):
                continue
            found.append((y % 1.0, side))
    circles = []
    for y, _ in _dedupe(found):
        u = eval_field(cfg, omega, (x0, y))[0]
        if u == 0:
            raise NoSection("x-velocity vanishes on the section")
        direction = int(np.sign(u))
        # at a fixed point P'(y) = exp(int div G dt) over one turn
        graph, T1, log_mult = _circle_graph(cfg, omega, y, x0, direction)
        mult = math.exp(log_mult)
        stab = Stability.ATTRACTING if log_mult < 0 else Stability.REPELLING
        yr, _, _ = return_map(cfg, omega, y, x0, backward=(stab == Stability.REPELLING))
        circles.append(InvariantCircle(y, (1, 0), graph, stab, direction, float(mult),
                                       float(abs(yr - y)), direction / T1))
    return circles


@dataclass(frozen=True)
class ReebResult:
    count: int
    circles: list
    sweep_fixed_points: int


def reeb_count(cfg: SystemConfig, omega, certify_sweep: int = 1024, check_region: bool = True) -> ReebResult:
    """Number of Reeb annuli bounded by oppositely oriented horizontal circles."""
    if check_region:
        from .geometry import RegionTag, region_classify

        if region_classify(cfg, omega) != RegionTag.HOLE:
            raise ValueError("Omega is not in the hole")
    circles = invariant_circles(cfg, omega)
    n = len(circles)
    count = 0
    if n >= 2:
        dirs = [c.x_direction for c in sorted(circles, key=lambda c: c.y0)]
        count = sum(dirs[i] != dirs[(i + 1) % n] for i in range(n))
    brackets = set()
    for backward in (False, True):
        for lo, hi, _ in _sweep_brackets(cfg, tuple(omega), certify_sweep, 0.0, backward, 0.01, 200.0):
            brackets.add(round(lo % 1.0, 6))
    return ReebResult(count, circles, _count_clusters(sorted(brackets), 4.0 / certify_sweep))


def _count_clusters(vals, gap):
    if not vals:
        return 0
    n = 1
    for a, b in zip(vals, vals[1:]):
        if b - a > gap:
            n += 1
    if n > 1 and (vals[0] + 1 - vals[-1]) <= gap:
        n -= 1
    return n


# -- perturbed reduced system --------------------------------------------------

@dataclass(frozen=True)
class ReducedSystem:
    """``x' = 2pi C eta + sqrt(eps)(C a~ - cos 2pi x + 2pi^2 S eta^2)``, ``eta' = rho - sin 2pi x + 2pi^2 eta^2``.

    ``eps_terms=False`` drops the ``sqrt(eps)`` correction, leaving the
    reversible Hamiltonian system.
    """

    cfg: SystemConfig
    params: ReducedParams
    eps_terms: bool = True

    @property
    def _se(self) -> float:
        return self.cfg.sqrt_eps if self.eps_terms else 0.0

    def rhs(self, t, s):
        x, eta = s[0], s[1]
        C, S = self.cfg.C, self.cfg.S
        dx = TWO_PI * C * eta + self._se * (C * self.params.alpha_tilde - np.cos(TWO_PI * x)
                                            + 2 * PI**2 * S * eta**2)
        de = self.params.rho - np.sin(TWO_PI * x) + 2 * PI**2 * eta**2
        return np.array([dx, de]) if np.ndim(x) == 0 else np.stack([dx, de])

    def jac(self, s):
        x, eta = s
        C, S = self.cfg.C, self.cfg.S
        return np.array([
            [self._se * TWO_PI * math.sin(TWO_PI * x), TWO_PI * C + self._se * 4 * PI**2 * S * eta],
            [-TWO_PI * math.cos(TWO_PI * x), 4 * PI**2 * eta]])

    def rhs_variational(self, t, w):
        f = self.rhs(t, w[:2])
        Phi = w[2:].reshape(2, 2)
        return np.concatenate([f, (self.jac(w[:2]) @ Phi).ravel()])

    def equilibrium(self, guess) -> np.ndarray:
        z = np.array(guess, dtype=float)
        for _ in range(60):
            step = np.linalg.solve(self.jac(z), self.rhs(0.0, z))
            z -= step
            if np.max(np.abs(step)) < 1e-15:
                break
        if np.max(np.abs(self.rhs(0.0, z))) > 1e-12:
            raise NotFound(f"no equilibrium near {guess}")
        return z

    def saddle(self) -> np.ndarray:
        """Saddle between ``x_g`` and ``x_g + 1``."""
        return self.equilibrium((x_g(self.cfg) + 0.5, 0.0))

    def integrate(self, s0, t_end, tol=1e-12, events=None, dense=False, max_step=np.inf):
        return _solve(self.rhs, s0, t_end, tol, events, dense, max_step)


@dataclass(frozen=True)
class TransitMapSample:
    z: float
    Tz: float
    slope: float
    z_s: float
    z_u: float
    work: dict = field(default_factory=dict, compare=False)


def _runaway_level(sys_: ReducedSystem, branch: int) -> float:
    # below the loop the sqrt(eps)*eta^2 term eventually cancels 2*pi*C*eta (a spurious fold
    # of x' = 0 at |eta| = C / (pi*S*sqrt(eps))), so stop well short of it
    if branch > 0 or sys_.cfg.S <= 0 or not sys_.eps_terms:
        return 10.0
    return min(10.0, 0.5 * sys_.cfg.C / (PI * sys_.cfg.S * sys_._se))


def _escape_side(sys_: ReducedSystem, x_start, eta0, forward, x_sad, box=0.2, tol=1e-12,
                 t_max=200.0, branch: int = 1):
    """+1 if the orbit gets past the saddle, -1 if it turns back first.

    ``branch=+1`` follows the upper loop (moving right), ``-1`` the lower one.
    """
    way = branch * (1 if forward else -1)
    target = x_sad + way * box

    def passed(t, s):
        return way * (s[0] - target)
    passed.terminal, passed.direction = True, 1

    # turning back means x' changes sign
    def turned(t, s):
        return -branch * sys_.rhs(t, s)[0]
    turned.terminal, turned.direction = True, 1
    if turned(0.0, [x_start, eta0]) >= 0:
        return -1  # already heading back

    # large |eta| on the branch side moves x past the saddle almost at once (and blows up soon after)
    cap = _runaway_level(sys_, branch)

    def runaway(t, s):
        return branch * s[1] - cap
    runaway.terminal, runaway.direction = True, 1
    sol = sys_.integrate([x_start, eta0], (1 if forward else -1) * t_max, tol,
                         events=[passed, turned, runaway])
    if len(sol.t_events[0]) or len(sol.t_events[2]):
        return 1
    if len(sol.t_events[1]):
        return -1
    raise NotFound("orbit neither passed nor turned")


def manifold_values(sys_: ReducedSystem, tol: float = 1e-12, box: float = 0.2, branch: int = 1):
    """``(z_s, z_u)``: squared ``eta`` of the saddle's stable manifold at ``x_g`` and of its
    unstable manifold one period further along the loop (``x_g + 1`` for the upper branch).
    """
    xg = x_g(sys_.cfg)
    xs = float(sys_.equilibrium((xg + 0.5 * branch, 0.0))[0])

    def shoot(x_start, forward):
        side = lambda v: _escape_side(sys_, x_start, branch * v, forward, xs, box, branch=branch)
        lo, hi = 1e-6, 0.6
        cap = 0.9 * _runaway_level(sys_, branch)
        while side(hi) < 0:
            hi *= 1.5
            if hi > min(5.0, cap):
                raise NotFound("manifold not bracketed")
        if side(lo) > 0:
            raise NotFound("manifold not bracketed")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if side(mid) > 0:
                hi = mid
            else:
                lo = mid
        return hi  # passing side, so every z above it transits

    eta_s = shoot(xg, True)
    eta_u = shoot(xg + branch, False)
    return eta_s**2, eta_u**2


def _transit(sys_: ReducedSystem, z: float, tol: float):
    xg = x_g(sys_.cfg)
    eta0 = math.sqrt(z)

    def arrive(t, w):
        return w[0] - (xg + 1.0)
    arrive.terminal, arrive.direction = True, 1

    def turned(t, w):
        return -sys_.rhs(t, w[:2])[0]
    turned.terminal, turned.direction = True, 1
    w0 = np.concatenate([[xg, eta0], np.eye(2).ravel()])
    sol = _solve(sys_.rhs_variational, w0, 500.0, tol, events=[arrive, turned])
    if not len(sol.t_events[0]):
        raise NoTransit(f"z={z} does not reach x_g+1")
    w = sol.y_events[0][0]
    x1, eta1 = w[:2]
    Phi = w[2:].reshape(2, 2)
    f0 = sys_.rhs(0.0, [xg, eta0])
    f1 = sys_.rhs(0.0, [x1, eta1])
    # variation of the hitting point on the section x = x_g + 1, then on the initial section
    deta1 = Phi[1, 1] - f1[1] / f1[0] * Phi[0, 1]
    slope = (eta1 / eta0) * deta1
    return eta1**2, slope, float(sol.t_events[0][0])


def transit_map(cfg: SystemConfig, reduced: ReducedParams, z: float, eps_terms: bool = True,
                tol: float = 1e-12, manifolds: tuple | None = None) -> TransitMapSample:
    """Map ``z = eta^2`` on ``x = x_g`` to ``eta^2`` at the next crossing of ``x = x_g + 1``."""
    sys_ = ReducedSystem(cfg, reduced, eps_terms)
    z_s, z_u = manifolds if manifolds is not None else manifold_values(sys_)
    if z <= z_s:
        raise NoTransit(f"z={z} is not above z_s={z_s}")
    Tz, slope, T = _transit(sys_, z, tol)
    return TransitMapSample(z, Tz, slope, z_s, z_u, {"time": T})


def affine_transit(cfg: SystemConfig, z):
    """Transit map of the reversible system at ``rho = rho0``."""
    C = cfg.C
    K = (math.exp(-TWO_PI / C) - 1) * rho0(cfg) / PI**2
    return math.exp(TWO_PI / C) * (np.asarray(z) - K)


# -- saddle-node of periodic orbits next to the upper rotational loop -----------

def rhc_alpha_numeric(cfg: SystemConfig, rho_tilde: float, guess: float, step: float = 0.25,
                      tol: float = 1e-12, branch: int = 1) -> float:
    """``alpha~`` with ``z_u = z_s`` at fixed ``rho~``, by shooting (upper or lower loop)."""
    rho = rho0(cfg) + cfg.sqrt_eps * rho_tilde

    def D(a):
        zs, zu = manifold_values(ReducedSystem(cfg, ReducedParams(rho, a)), tol, branch=branch)
        return zu - zs
    a0, d0 = guess, D(guess)
    a1, d1 = guess + step, D(guess + step)
    if np.sign(d1) != np.sign(d0):
        return brentq(D, a0, a1, xtol=1e-13)
    # walk towards decreasing |D|
    if abs(d1) > abs(d0):
        a1, d1 = a0, d0
        step = -step
    for _ in range(80):
        a2 = a1 + step
        d2 = D(a2)
        if np.sign(d2) != np.sign(d1):
            return brentq(D, min(a1, a2), max(a1, a2), xtol=1e-13)
        a1, d1 = a2, d2
    raise NotFound("rotational loop not bracketed")


def _unit_slope_point(sys_: ReducedSystem, z_s: float, tol: float):
    """``z*`` with ``T'(z*) = 1``; the minimum of ``T(z) - z`` over ``z > z_s``."""
    def h(s):
        return _transit(sys_, z_s + math.exp(s), tol)[1] - 1.0
    lo, hi = math.log(1e-11), math.log(0.5)
    if h(lo) >= 0 or h(hi) <= 0:
        raise NotFound("unit slope not bracketed")
    s = brentq(h, lo, hi, xtol=1e-10)
    z = z_s + math.exp(s)
    Tz, _, _ = _transit(sys_, z, tol)
    return z, Tz


def snp_alpha(cfg: SystemConfig, rho_tilde: float, alpha_rhc: float, tol: float = 1e-12) -> dict:
    """``alpha~`` where a fixed point of the transit map has slope 1, at fixed ``rho~``.

    Below ``alpha_rhc`` the gap ``z_u - z_s`` opens; the saddle-node is where
    ``min_z (T(z) - z)`` first reaches zero.
    """
    rho = rho0(cfg) + cfg.sqrt_eps * rho_tilde

    def G(a):
        sys_ = ReducedSystem(cfg, ReducedParams(rho, a))
        zs, _ = manifold_values(sys_, tol)
        z, Tz = _unit_slope_point(sys_, zs, tol)
        return Tz - z
    g_hi = G(alpha_rhc)
    if g_hi >= 0:
        raise NotFound("T(z*) - z* not negative on the rotational loop")
    step = 1e-9
    lo = alpha_rhc - step
    while G(lo) < 0:
        step *= 4
        lo = alpha_rhc - step
        if step > 1.0:
            raise NotFound("no saddle-node below the rotational loop")
    a = brentq(G, lo, alpha_rhc - step / 4 if step > 1e-9 else alpha_rhc, xtol=1e-14)
    return {"alpha_snp": a, "alpha_rhc": alpha_rhc, "gap": alpha_rhc - a}


def nu_exponent(cfg: SystemConfig, alpha_tilde: float) -> float:
    """Ratio of the area-contraction rate at the saddle to its unstable eigenvalue, over sqrt(eps)."""
    C = cfg.C
    return (2 / math.sqrt(1 + C * C) + alpha_tilde) * (1 + C * C) ** 0.25 / C


# -- contractible periodic orbits of the perturbed reduced system ---------------

@dataclass(frozen=True)
class CpoCount:
    count: int
    radii: tuple
    centre: tuple
    sweep: int


def _winding_rhs(sys_: ReducedSystem, xc: float, ec: float):
    def rhs(w):
        f = sys_.rhs(0.0, w[:2])
        dx, de = w[0] - xc, w[1] - ec
        dth = (dx * f[1] - de * f[0]) / (dx * dx + de * de)
        return np.concatenate([f, dth[None]]) if np.ndim(dth) else np.array([f[0], f[1], dth])
    return rhs


def _cpo_return_accurate(sys_, xc, ec, r, tol=1e-11, t_max=200.0):
    rhs = _winding_rhs(sys_, xc, ec)

    def turn(t, w):
        return w[2] + TWO_PI
    turn.terminal, turn.direction = True, -1

    def blow(t, w):
        return abs(w[1] - ec) + abs(w[0] - xc) - 3.0
    blow.terminal = True
    sol = _solve(lambda t, w: rhs(w), [xc + r, ec, 0.0], t_max, tol, events=[turn, blow])
    if not len(sol.t_events[0]):
        return math.nan
    x1, e1 = sol.y_events[0][0][:2]
    # back onto the ray eta = ec along the flow direction is second order; use the radial coordinate
    return float(math.hypot(x1 - xc, e1 - ec))


def cpo_count(cfg: SystemConfig, reduced: ReducedParams, n_sweep: int = 512, dt: float = 2e-3,
              t_max: float = 60.0, refine: bool = True) -> CpoCount:
    """Count closed orbits around the perturbed centre via zeros of the return displacement."""
    from .hamiltonian import chc_orbit

    sys_ = ReducedSystem(cfg, reduced, True)
    xc0, _ = loop_geometry(cfg, reduced.rho)
    C = cfg.C
    guess_eta = -cfg.sqrt_eps * (C * reduced.alpha_tilde - math.cos(TWO_PI * xc0)) / (TWO_PI * C)
    xc, ec = sys_.equilibrium((xc0, guess_eta))
    orb = chc_orbit(cfg, reduced.rho)
    R = 0.98 * (orb.x_max - xc)
    r = R * (np.arange(n_sweep) + 1.0) / n_sweep
    rhs = _winding_rhs(sys_, xc, ec)
    w0 = np.stack([xc + r, np.full_like(r, ec), np.zeros_like(r)])

    event = lambda w: -(w[2] + TWO_PI)
    dead = lambda w: (np.abs(w[1] - ec) + np.abs(w[0] - xc)) > 3.0
    end, _ = rk4_first_crossing(rhs, w0, event, dt, t_max, dead)
    # a "return" from the sweep is accepted only where the orbit stayed bounded
    ret = np.hypot(end[0] - xc, end[1] - ec)
    d = ret - r
    roots = []
    for i in range(n_sweep - 1):
        if np.isfinite(d[i]) and np.isfinite(d[i + 1]) and np.sign(d[i]) != np.sign(d[i + 1]):
            if not refine:
                roots.append(0.5 * (r[i] + r[i + 1]))
                continue
            fn = lambda v: _cpo_return_accurate(sys_, xc, ec, v) - v
            a, b = fn(r[i]), fn(r[i + 1])
            if np.isfinite(a) and np.isfinite(b) and np.sign(a) != np.sign(b):
                roots.append(brentq(fn, r[i], r[i + 1], xtol=1e-12))
    return CpoCount(len(roots), tuple(roots), (float(xc), float(ec)), n_sweep)


# -- snp locus and its crossing with the lower rotational loop ------------------

def snp_locus(cfg: SystemConfig, rho_tilde_range, tol: float = 1e-12) -> "PersistCurve":
    """snp curve beside the upper rotational loop; failed samples are kept in ``failures``."""
    from .melnikov import CurveKind, PersistCurve, rhc_line_alpha

    rts, als, bad = [], [], []
    for rt in np.asarray(rho_tilde_range, dtype=float):
        try:
            a_rhc = rhc_alpha_numeric(cfg, float(rt), float(rhc_line_alpha(cfg, rt, 1)), tol=tol)
            with np.errstate(over="ignore", invalid="ignore"):
                res = snp_alpha(cfg, float(rt), a_rhc, tol)
        except (NotFound, NoTransit, StepUnderflow) as exc:
            bad.append((float(rt), str(exc)))
            continue
        rts.append(float(rt))
        als.append(res["alpha_snp"])
    return PersistCurve(CurveKind.SNP, np.array(rts), np.array(als), "snp+", tuple(bad))


@dataclass(frozen=True)
class HCrossing:
    rho_tilde: float
    alpha_tilde: float
    samples: tuple  # (rho~, alpha_rhc+, alpha_rhc-) used for the sign count


def _rhc_pair(cfg, rt, tol, guesses=None):
    from .melnikov import rhc_line_alpha
    gp, gm = guesses or (float(rhc_line_alpha(cfg, rt, 1)), float(rhc_line_alpha(cfg, rt, -1)))
    ap = rhc_alpha_numeric(cfg, rt, gp, step=0.05, tol=tol, branch=1)
    am = rhc_alpha_numeric(cfg, rt, gm, step=0.05, tol=tol, branch=-1)
    return ap, am


def h_crossings(cfg: SystemConfig, rho_tilde=(-0.5, 0.0, 0.5), tol: float = 1e-9,
                xtol: float = 1e-5) -> list[HCrossing]:
    """Crossings of the shot upper and lower rotational loops in ``(rho~, alpha~)``.

    The snp curve hugs the upper loop to within ``exp(-c/sqrt(eps))``, far
    below these tolerances, so its crossings with the lower loop are these.
    """
    rts = [float(v) for v in rho_tilde]
    pairs = [_rhc_pair(cfg, rt, tol) for rt in rts]
    samples = tuple((rt, p, m) for rt, (p, m) in zip(rts, pairs))
    out = []
    for (r0_, p0, m0), (r1_, p1, m1) in zip(samples, samples[1:]):
        d0, d1 = p0 - m0, p1 - m1
        if np.sign(d0) == np.sign(d1):
            continue
        cache = {}

        def diff(rt):
            # guesses interpolated from the bracket ends keep each solve short
            w = (rt - r0_) / (r1_ - r0_)
            g = (p0 + w * (p1 - p0), m0 + w * (m1 - m0))
            cache[rt] = _rhc_pair(cfg, rt, tol, g)
            return cache[rt][0] - cache[rt][1]
        rt = brentq(diff, r0_, r1_, xtol=xtol)
        ap, am = cache.get(rt) or _rhc_pair(cfg, rt, tol)
        out.append(HCrossing(rt, 0.5 * (ap + am), samples))
    return out


def h_points(cfg: SystemConfig, **kw) -> list:
    """H points at both extremities (the bottom one by ``Omega -> -Omega``)."""
    from .melnikov import CodimTwoPoint, PointKind, reduced_to_omega

    se = cfg.sqrt_eps
    out = []
    for hc in h_crossings(cfg, **kw):
        rho = rho0(cfg) + se * hc.rho_tilde
        for side in (1, -1):
            out.append(CodimTwoPoint(PointKind.H, ReducedParams(rho, hc.alpha_tilde),
                                     reduced_to_omega(cfg, rho, hc.alpha_tilde, side), side,
                                     hc.rho_tilde, "H" + ("+" if side > 0 else "-")))
    return out


def dump_trajectory_csv(tr: Trajectory, path) -> None:
    import csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y"])
        for t, (x, y) in zip(tr.times, tr.states.T):
            w.writerow([f"{t:.17e}", f"{x:.17e}", f"{y:.17e}"])


def dump_curve_csv(curve, path) -> None:
    import csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "abscissa", "alpha_tilde"])
        for a, b in curve.samples:
            w.writerow([curve.label, f"{a:.17e}", f"{b:.17e}"])
