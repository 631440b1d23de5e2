"""Equilibria of the torus family and their local bifurcation coefficients."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .family import (
    PHI_MAX,
    PHI_MIN,
    TWO_PI,
    ParamPoint,
    StatePoint,
    SystemConfig,
    eval_field,
    jacobian,
    second_derivative,
    third_derivative,
    trace_det,
)
from .geometry import psi, psi_normal

DEGENERATE_BAND = 1e-8


class NotFound(RuntimeError):
    pass


class NotSaddleNode(ValueError):
    pass


class NotCenter(ValueError):
    pass


class EqClass(enum.Enum):
    SINK = "Sink"
    SOURCE = "Source"
    SADDLE = "Saddle"
    CENTER = "Center"
    NEUTRAL_SADDLE = "NeutralSaddle"
    SADDLE_NODE = "SaddleNode"
    BOGDANOV_TAKENS = "BogdanovTakens"


def classify(tr: float, det: float, band: float = DEGENERATE_BAND,
             tr_band: float | None = None) -> EqClass:
    tr_band = band if tr_band is None else tr_band
    if abs(det) < band:
        return EqClass.BOGDANOV_TAKENS if abs(tr) < tr_band else EqClass.SADDLE_NODE
    if abs(tr) < tr_band:
        return EqClass.CENTER if det > 0 else EqClass.NEUTRAL_SADDLE
    if det < 0:
        return EqClass.SADDLE
    return EqClass.SINK if tr < 0 else EqClass.SOURCE


@dataclass(frozen=True)
class Equilibrium:
    state: StatePoint
    omega: ParamPoint
    det: float
    tr: float
    eig: tuple
    cls: EqClass

    @classmethod
    def at(cls, cfg: SystemConfig, s, omega=None, band: float = DEGENERATE_BAND,
           tr_band: float | None = None):
        s = StatePoint(float(s[0]), float(s[1]))
        if omega is None:
            omega = omega_of_state(cfg, s)
        tr, det = trace_det(cfg, s)
        eig = tuple(np.linalg.eigvals(jacobian(cfg, s)))
        return cls(s.wrapped(), ParamPoint(*map(float, omega)), float(det), float(tr), eig,
                   classify(tr, det, band, tr_band))


def omega_of_state(cfg: SystemConfig, s) -> ParamPoint:
    """The unique ``Omega`` for which ``s`` is an equilibrium."""
    x, y = s
    eps = cfg.epsilon
    return ParamPoint(
        math.cos(TWO_PI * (y - cfg.phi)) + eps * math.cos(TWO_PI * x),
        math.sin(TWO_PI * y) + eps * math.sin(TWO_PI * x),
    )


def _torus_dist(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    d = np.minimum(d, 1.0 - d)
    return float(np.hypot(d[0], d[1]))


def find_equilibria(cfg: SystemConfig, omega, n_seed: int = 64, dedup: float = 1e-6,
                    tol: float = 1e-12, maxiter: int = 50) -> list[Equilibrium]:
    """All equilibria for ``omega``: vectorised Newton from an ``n_seed`` square grid."""
    g = (np.arange(n_seed) + 0.5) / n_seed
    X, Y = np.meshgrid(g, g, indexing="ij")
    x, y = X.ravel(), Y.ravel()
    eps = cfg.epsilon
    for _ in range(maxiter):
        F = eval_field(cfg, omega, (x, y))
        a = TWO_PI * eps * np.sin(TWO_PI * x)
        b = TWO_PI * np.sin(TWO_PI * (y - cfg.phi))
        c = -TWO_PI * eps * np.cos(TWO_PI * x)
        d = -TWO_PI * np.cos(TWO_PI * y)
        det = a * d - b * c
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        dx = (d * F[0] - b * F[1]) / det
        dy = (-c * F[0] + a * F[1]) / det
        # damp wild steps; the torus has period 1
        scale = np.minimum(1.0, 0.25 / np.maximum(np.hypot(dx, dy), 1e-300))
        x = x - scale * dx
        y = y - scale * dy
    F = eval_field(cfg, omega, (x, y))
    ok = np.hypot(F[0], F[1]) < max(tol, 1e-10)
    pts = np.column_stack([x[ok] % 1.0, y[ok] % 1.0])
    reps: list[np.ndarray] = []
    for p in pts:
        if all(_torus_dist(p, q) > dedup for q in reps):
            reps.append(p)
    return [Equilibrium.at(cfg, p, omega) for p in reps]


def equilibrium_count(cfg: SystemConfig, omega, n_grid: int = 2048, rel_tol: float = 1e-9) -> int:
    """Number of equilibria, counted on the circle of ``y`` values.

    ``s`` is an equilibrium iff ``|Omega - psi(y)| = eps``, with ``x`` then
    fixed, so roots of ``h(y) = |Omega - psi(y)|^2 - eps^2`` are counted.
    Between two local maxima ``h`` has a single minimum; a minimum below zero
    carries two roots, one at zero (within ``rel_tol eps^2``) a double root.
    """
    om = np.asarray(omega, dtype=float)
    eps2 = cfg.epsilon**2

    def h(y):
        p = psi(cfg, y)
        return (om[0] - p[0]) ** 2 + (om[1] - p[1]) ** 2 - eps2
    y = np.arange(n_grid) / n_grid
    v = h(y)
    prev, nxt = np.roll(v, 1), np.roll(v, -1)
    count = 0
    for i in np.flatnonzero((v <= prev) & (v < nxt)):
        dy = 1.0 / n_grid
        res = minimize_scalar(h, bounds=(y[i] - dy, y[i] + dy), method="bounded",
                              options={"xatol": 1e-14})
        m = min(float(res.fun), float(v[i]))
        if m < -rel_tol * eps2:
            count += 2
        elif m <= rel_tol * eps2:
            count += 1
    return count


# -- trace-zero curves -------------------------------------------------------

def trace_zero_state(cfg: SystemConfig, x, side: str):
    """State on the trace-zero curve over abscissa ``x``; ``side`` is 'top' or 'bottom'."""
    y = np.arccos(cfg.epsilon * np.sin(TWO_PI * np.asarray(x))) / TWO_PI
    return np.asarray(x), (y if side == "top" else -y)


def _det_on_trace_zero(cfg, x, side):
    return trace_det(cfg, trace_zero_state(cfg, x, side))[1]


def _trace_zero_b_abscissae(cfg, side):
    """Abscissae (in [0,1)) where det changes sign along a trace-zero curve."""
    xs = np.linspace(0.0, 1.0, 4097)
    dv = _det_on_trace_zero(cfg, xs, side)
    roots = []
    for i in range(len(xs) - 1):
        if dv[i] == 0 or dv[i] * dv[i + 1] < 0:
            roots.append(brentq(lambda t: _det_on_trace_zero(cfg, t, side), xs[i], xs[i + 1],
                                xtol=1e-15, rtol=1e-15))
    return roots


@dataclass
class TraceZeroArc:
    samples: list
    arc_kind: EqClass
    side: str
    endpoints: tuple = ()

    def omegas(self) -> np.ndarray:
        return np.array([e.omega for e in self.samples])


def trace_zero_arc(cfg: SystemConfig, side: str, arc_kind: EqClass, n: int = 512) -> TraceZeroArc:
    """Centre or neutral-saddle arc of the trace-zero curve on ``side``.

    The curve ``cos 2pi y = eps sin 2pi x`` is a graph over ``x`` so it is
    parametrised explicitly; the arc runs between its two B abscissae.
    """
    roots = _trace_zero_b_abscissae(cfg, side)
    if len(roots) != 2:
        raise NotFound(f"expected 2 B abscissae on {side} trace-zero curve, got {len(roots)}")
    r0, r1 = roots
    mid_a = 0.5 * (r0 + r1)
    want_pos = arc_kind is EqClass.CENTER
    if (_det_on_trace_zero(cfg, mid_a, side) > 0) == want_pos:
        lo, hi = r0, r1
    else:
        lo, hi = r1, r0 + 1.0
    xs = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    X, Y = trace_zero_state(cfg, xs, side)
    samples = [Equilibrium.at(cfg, (a, b), band=0.0, tr_band=DEGENERATE_BAND) for a, b in zip(X, Y)]
    for e in samples:
        if e.cls is not arc_kind:
            raise RuntimeError("arc kind changed along arc")
    ends = tuple(StatePoint(*(float(v) % 1 for v in trace_zero_state(cfg, t, side))) for t in (lo, hi))
    return TraceZeroArc(samples, arc_kind, side, ends)


def trace_zero_ellipse(cfg: SystemConfig, side: str, n: int = 4096) -> np.ndarray:
    """Leading-order ellipse approximating the projected trace-zero curve, shape (2, n)."""
    sgn = 1.0 if side == "top" else -1.0
    beta = TWO_PI * np.arange(n) / n
    eps, C, S = cfg.epsilon, cfg.C, cfg.S
    oy = sgn + eps * np.sin(beta)
    ox = eps * np.cos(beta) + C * oy - sgn * (C - S)
    return np.array([ox, oy])


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between two point clouds of shape (2, n)."""
    d = np.hypot(a[0][:, None] - b[0][None, :], a[1][:, None] - b[1][None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# -- B points ----------------------------------------------------------------

@dataclass
class BPoint:
    equilibrium: Equilibrium
    boundary: str  # "Inner" | "Outer"
    quadrant: str  # "Top" | "Bottom"
    coeff_a: float
    coeff_b: float


def _bt_vectors(cfg: SystemConfig, s):
    """Generalised eigenvectors at a double-zero point, scaled as q0 = (d, -eps)."""
    x, y = s
    J = jacobian(cfg, s)
    sx, cx = math.sin(TWO_PI * x), math.cos(TWO_PI * x)
    if abs(sx) >= abs(cx):
        d = math.sin(TWO_PI * (y - cfg.phi)) / sx
    else:
        d = math.cos(TWO_PI * y) / cx
    q0 = np.array([d, -cfg.epsilon])
    q1 = np.linalg.lstsq(J, q0, rcond=None)[0]
    # left kernel of J
    p1 = np.array([-J[1, 0], J[0, 0]]) if abs(J[0, 0]) + abs(J[1, 0]) > abs(J[0, 1]) + abs(J[1, 1]) \
        else np.array([-J[1, 1], J[0, 1]])
    p1 = p1 / (p1 @ q1)
    p0 = np.linalg.lstsq(J.T, p1, rcond=None)[0]
    p0 = p0 - (p0 @ q1) * p1
    return q0, q1, p0, p1


def bt_coefficients(cfg: SystemConfig, s) -> tuple[float, float]:
    """Normal-form coefficients ``(a, b)`` of a Bogdanov-Takens point."""
    q0, q1, p0, p1 = _bt_vectors(cfg, s)
    B00 = second_derivative(cfg, s, q0, q0)
    B01 = second_derivative(cfg, s, q0, q1)
    a = 0.5 * p1 @ B00
    b = p0 @ B00 + p1 @ B01
    return float(a), float(b)


def _bt_residual(cfg, s):
    tr, det = trace_det(cfg, s)
    return np.array([tr, det / (TWO_PI * cfg.epsilon)])


def locate_B_points(cfg: SystemConfig) -> list[BPoint]:
    """The four Bogdanov-Takens points, by Newton on (tr, det) = 0."""
    out = []
    for sx in (0.25, -0.25):
        for sy in (0.25, -0.25):
            s = np.array([sx, sy])
            for _ in range(50):
                F = _bt_residual(cfg, s)
                h = 1e-7
                Jn = np.column_stack([
                    (_bt_residual(cfg, s + [h, 0]) - _bt_residual(cfg, s - [h, 0])) / (2 * h),
                    (_bt_residual(cfg, s + [0, h]) - _bt_residual(cfg, s - [0, h])) / (2 * h),
                ])
                step = np.linalg.solve(Jn, F)
                s = s - step
                if np.max(np.abs(step)) < 1e-15:
                    break
            F = _bt_residual(cfg, s)
            if np.max(np.abs(F)) > 1e-10:
                raise NotFound(f"B point Newton from ({sx}, {sy}) did not converge")
            eq = Equilibrium.at(cfg, s)
            n = psi_normal(cfg, s[1])
            unit = np.array([math.cos(TWO_PI * s[0]), math.sin(TWO_PI * s[0])])
            boundary = "Outer" if unit @ n > 0 else "Inner"
            quadrant = "Top" if math.cos(TWO_PI * (s[1] - 0.25)) > 0 else "Bottom"
            a, b = bt_coefficients(cfg, s)
            out.append(BPoint(eq, boundary, quadrant, a, b))
    return out


# -- saddle-node and Hopf coefficients --------------------------------------

def saddle_node_coefficient(cfg: SystemConfig, eq: Equilibrium) -> float:
    """``p D^2G(q, q)`` with ``p``, ``q`` the left/right null vectors at a saddle-node."""
    if abs(eq.det) > 1e-8 or abs(eq.tr) <= 1e-4:
        raise NotSaddleNode(f"det={eq.det:.3g}, tr={eq.tr:.3g}")
    x, y = eq.state
    sx, cx = math.sin(TWO_PI * x), math.cos(TWO_PI * x)
    p = np.array([cx, sx])
    if abs(sx) >= abs(cx):
        d = math.sin(TWO_PI * (y - cfg.phi)) / sx
    else:
        d = math.cos(TWO_PI * y) / cx
    q = np.array([d, -cfg.epsilon])
    return float(p @ second_derivative(cfg, eq.state, q, q))


def saddle_node_coefficient_closed_form(cfg: SystemConfig, s) -> float:
    x, y = s
    eps = cfg.epsilon
    sx, cx = math.sin(TWO_PI * x), math.cos(TWO_PI * x)
    d = math.sin(TWO_PI * (y - cfg.phi)) / sx if abs(sx) >= abs(cx) else math.cos(TWO_PI * y) / cx
    return TWO_PI**2 * eps * (
        d * d + eps * (cx * math.cos(TWO_PI * (y - cfg.phi)) + sx * math.sin(TWO_PI * y))
    )


@dataclass
class LyapunovResult:
    l1: float
    l1_first_order: float  # leading-order expression as usually quoted, prefactor 1/(2 C C0 f0^3)
    l1_leading: float  # same bilinear form with the collected prefactor 1/(2 C^2 C0 f0^3)
    omega: float
    transform: np.ndarray = field(repr=False)


def _l1_from_transform(cfg, s, J, M, omega):
    Minv = np.linalg.inv(M)
    e1, e2 = Minv[:, 0], Minv[:, 1]

    def B(u, v):
        return M @ second_derivative(cfg, s, u, v)

    def T(u, v, w):
        return M @ third_derivative(cfg, s, u, v, w)

    Bxx, Bxy, Byy = B(e1, e1), B(e1, e2), B(e2, e2)
    Txxx, Txyy, Txxy, Tyyy = T(e1, e1, e1), T(e1, e2, e2), T(e1, e1, e2), T(e2, e2, e2)
    Pxx, Pxy, Pyy = Bxx[0], Bxy[0], Byy[0]
    Qxx, Qxy, Qyy = Bxx[1], Bxy[1], Byy[1]
    cubic = Txxx[0] + Txyy[0] + Txxy[1] + Tyyy[1]
    quad = Pxy * (Pxx + Pyy) - Qxy * (Qxx + Qyy) - Pxx * Qxx + Pyy * Qyy
    return cubic / (8 * omega) + quad / (8 * omega**2)


def hopf_transform(J: np.ndarray, first_row) -> np.ndarray:
    """Matrix M with M J M^-1 = [[0, -w], [w, 0]] and given first row."""
    omega = math.sqrt(np.linalg.det(J))
    m1 = np.asarray(first_row, dtype=float)
    m2 = -(m1 @ J) / omega
    return np.vstack([m1, m2])


def lyapunov_l1(cfg: SystemConfig, eq: Equilibrium, first_row=None) -> LyapunovResult:
    """First Lyapunov coefficient at a centre, plus its leading-order estimate.

    The default normalisation uses first row ``(f0, f0)`` with
    ``f0 = omega / 2pi``; ``first_row`` overrides it (the sign of ``l1`` does
    not depend on this choice).
    """
    if not (eq.det > 0 and abs(eq.tr) < 1e-8):
        raise NotCenter(f"tr={eq.tr:.3g}, det={eq.det:.3g}")
    s = np.array(eq.state, dtype=float)
    J = jacobian(cfg, s)
    omega = math.sqrt(np.linalg.det(J))
    f0 = omega / TWO_PI
    M = hopf_transform(J, (f0, f0) if first_row is None else first_row)
    l1 = _l1_from_transform(cfg, s, J, M, omega)
    S0, C0 = math.sin(TWO_PI * s[0]), math.cos(TWO_PI * s[0])
    C, S = cfg.C, cfg.S
    form = C * S0**2 + S0 * C0 + S * C0**2
    approx = -(math.pi**2 * cfg.epsilon) / (2 * C * C0 * f0**3) * form
    return LyapunovResult(float(l1), float(approx), float(approx / C), omega, M)


def hopf_range_condition(phi: float) -> bool:
    """``cos 2pi phi sin 2pi phi > 1/4`` for ``phi`` in (-1/4, 1/4)."""
    if not -0.25 < phi < 0.25:
        raise ValueError("phi must lie in (-1/4, 1/4)")
    # sin(4 pi phi) > 1/2 exactly on (1/24, 5/24); compare phi to avoid rounding at the ends
    return PHI_MIN < phi < PHI_MAX
