"""Bifurcation-diagram bundle, the assumption checklist and file export.

Everything here is assembly: the numbers come from the geometry,
equilibria, melnikov and flowsim modules.  Exports are deterministic so
two runs with the same configuration give byte-identical files.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .equilibria import (
    EqClass,
    equilibrium_count,
    find_equilibria,
    locate_B_points,
    lyapunov_l1,
    trace_zero_arc,
)
from .family import SystemConfig
from .geometry import (
    RegionTag,
    boundary_curve,
    cross_section_functional,
    sample_region,
    signed_distance,
)
from .hamiltonian import ReducedParams, rho0
from .melnikov import (
    CodimTwoPoint,
    PointKind,
    chc_alpha,
    density_grid,
    k_point,
    k_points,
    n_points,
    ns_alpha,
    omega_to_reduced,
    reduced_to_omega,
    rhc_line_alpha,
    rho_grid,
    trace_zero_residual,
    z_points,
)

SCHEMA_VERSION = 1


class IoError(OSError):
    pass


# -- bundle ---------------------------------------------------------------------

@dataclass
class LabelledCurve:
    """A curve with its native parametrisation ``(param1, param2)`` and its image in Omega."""

    label: str
    kind: str
    param1: np.ndarray
    param2: np.ndarray
    omega: np.ndarray  # shape (2, n)
    anchor: str = ""

    def __len__(self):
        return len(self.param1)


@dataclass
class DiagramBundle:
    config: SystemConfig
    curves: list
    points: list
    metadata: dict = field(default_factory=dict)

    def counts(self) -> dict:
        out = {k.value: 0 for k in PointKind}
        for p in self.points:
            out[p.kind.value] += 1
        return out


def _reduced_curve(cfg, label, kind, rho, alpha, side, anchor):
    om = np.array([reduced_to_omega(cfg, r, a, side) for r, a in zip(rho, alpha)]).T
    return LabelledCurve(label, kind, np.asarray(rho, float), np.asarray(alpha, float), om, anchor)


def _b_as_point(cfg, bp) -> CodimTwoPoint:
    om = bp.equilibrium.omega
    red, side = omega_to_reduced(cfg, om)
    return CodimTwoPoint(PointKind.B, red, om, side, label=f"B{bp.quadrant[0]}{bp.boundary[0]}",
                         extra={"coeff_a": bp.coeff_a, "coeff_b": bp.coeff_b,
                                "state": tuple(bp.equilibrium.state)})


def assemble(cfg: SystemConfig, n_curve: int = 64, snp_rho_tilde=(1.0, 1.5, 2.0),
             with_h: bool = True) -> DiagramBundle:
    """Curves and codimension-two points at both extremities, mapped into the Omega plane."""
    from .flowsim import h_points, snp_locus

    t0 = time.perf_counter()
    se = cfg.sqrt_eps
    r0 = rho0(cfg)
    curves = []
    th = np.arange(4 * n_curve) / (4 * n_curve)
    for sign, name in ((-1, "sn inner"), (1, "sn outer")):
        g = boundary_curve(cfg, sign, 4 * n_curve)
        curves.append(LabelledCurve(name, "sn", th, np.full_like(th, sign * cfg.epsilon), g,
                                    "saddle-node boundary of the resonance region"))
    for side in ("top", "bottom"):
        for cls, name in ((EqClass.CENTER, "hopf"), (EqClass.NEUTRAL_SADDLE, "ns")):
            arc = trace_zero_arc(cfg, side, cls, n_curve)
            st = np.array([e.state for e in arc.samples]).T
            curves.append(LabelledCurve(f"{name} {side}", name, st[0], st[1], arc.omegas().T,
                                        "trace-zero curve of the equilibria"))
    rho_line = np.linspace(-1.0, 1.0, n_curve)
    rhos = rho_grid(cfg, n_curve)
    chc = np.array([chc_alpha(cfg, r) for r in rhos])
    for side in (1, -1):
        tag = "top" if side > 0 else "bottom"
        for sign in (1, -1):
            al = rhc_line_alpha(cfg, (rho_line - r0) / se, sign)
            curves.append(_reduced_curve(cfg, f"rhc{'+' if sign > 0 else '-'} {tag}", "rhc",
                                         rho_line, al, side, "rotational loop persistence line"))
        curves.append(_reduced_curve(cfg, f"chc {tag}", "chc", rhos, chc, side,
                                     "contractible loop energy balance"))
    snp_failures = ()
    if snp_rho_tilde:
        snp = snp_locus(cfg, snp_rho_tilde)
        snp_failures = snp.failures
        if len(snp.abscissa):
            rho = r0 + se * snp.abscissa
            for side in (1, -1):
                curves.append(_reduced_curve(cfg, f"snp {'top' if side > 0 else 'bottom'}", "snp",
                                             rho, snp.alpha_tilde, side,
                                             "unit-slope fixed points of the transit map"))
    points = [_b_as_point(cfg, b) for b in locate_B_points(cfg)]
    points += z_points(cfg) + n_points(cfg) + k_points(cfg)
    if with_h:
        points += h_points(cfg)
    meta = {
        "tool_version": __version__,
        "epsilon": cfg.epsilon,
        "phi": cfg.phi,
        "tolerances": {"transit": 1e-12, "integration": 1e-9, "quadrature_rel": 1e-10},
        "snp_failures": [list(f) for f in snp_failures],
        "elapsed_s": round(time.perf_counter() - t0, 1),
    }
    return DiagramBundle(cfg, curves, points, meta)


def point_residuals(bundle: DiagramBundle) -> dict:
    """Round-trip and on-curve residuals of the bundled points."""
    cfg = bundle.config
    eps = cfg.epsilon
    chain, on_sn = 0.0, 0.0
    for p in bundle.points:
        if p.kind in (PointKind.B, PointKind.Z):
            on_sn = max(on_sn, abs(abs(signed_distance(cfg, p.omega)) - eps))
        if p.kind is PointKind.B:
            continue
        red, side = omega_to_reduced(cfg, p.omega)
        chain = max(chain, abs(red.rho - p.reduced.rho), abs(red.alpha_tilde - p.reduced.alpha_tilde))
    return {"scaling_chain": chain, "sn_boundary": on_sn}


# -- checklist ------------------------------------------------------------------

class Status(str, enum.Enum):
    VERIFIED = "Verified"
    NUMERIC_EVIDENCE = "NumericEvidence"
    SKIPPED = "Skipped"


CHECK_IDS = ("1", "2", "3a", "3b", "4a", "4b", "4c", "5a", "5b", "5c", "6", "7a", "7b", "8", "9")


@dataclass
class CheckEntry:
    id: str
    status: Status
    passed: bool
    evidence: dict


@dataclass
class ChecklistReport:
    config: dict
    entries: list

    @property
    def ok(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, id_: str) -> CheckEntry:
        return next(e for e in self.entries if e.id == id_)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "config": self.config, "ok": self.ok,
                "entries": [{"id": e.id, "status": e.status.value, "passed": e.passed,
                             "evidence": e.evidence} for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "ChecklistReport":
        return cls(d["config"], [CheckEntry(e["id"], Status(e["status"]), e["passed"], e["evidence"])
                                 for e in d["entries"]])


def _check_equilibria(cfg, rng, n):
    counts = {}
    bad = 0
    want = {RegionTag.INTERIOR: 2, RegionTag.HOLE: 0, RegionTag.OUTSIDE: 0,
            RegionTag.INNER_BOUNDARY: 1, RegionTag.OUTER_BOUNDARY: 1}
    for tag, k in want.items():
        got = [equilibrium_count(cfg, p) for p in sample_region(cfg, tag, n, rng)]
        counts[tag.value] = sorted(set(got))
        bad += sum(g != k for g in got)
    return bad == 0, {"per_region": counts, "violations": bad, "samples_per_region": n}


def _check_b(cfg):
    bs = locate_B_points(cfg)
    return len(bs) == 4, {"count": len(bs),
                          "labels": [f"{b.quadrant}/{b.boundary}" for b in bs]}


def _check_arcs(cfg):
    bstates = [b.equilibrium.state for b in locate_B_points(cfg)]
    ends_ok, n_arcs = True, 0
    for side in ("top", "bottom"):
        for cls in (EqClass.CENTER, EqClass.NEUTRAL_SADDLE):
            arc = trace_zero_arc(cfg, side, cls, 128)
            n_arcs += 1
            for e in arc.endpoints:
                d = min(math.dist(e, b) for b in bstates)
                ends_ok &= d < 1e-8
    return ends_ok, {"arcs": n_arcs, "every_arc_ends_at_B_points": bool(ends_ok)}


def _check_coexistence(cfg):
    worst = math.inf
    for side in ("top", "bottom"):
        arc = trace_zero_arc(cfg, side, EqClass.CENTER, 24)
        for e in arc.samples:
            for other in find_equilibria(cfg, e.omega, n_seed=24):
                if math.dist(other.state, e.state) > 1e-6:
                    if other.det < 0:
                        worst = min(worst, abs(other.tr))
    return worst > 1e-6, {"min_partner_trace_on_centre_arcs": worst}


def _check_reeb(cfg, rng, n, strip_k):
    strip = 1 - strip_k * cfg.epsilon
    from .flowsim import reeb_count

    counts, certs = [], []
    for p in sample_region(cfg, RegionTag.HOLE, n, rng, strip=strip):
        r = reeb_count(cfg, p)
        counts.append(r.count)
        certs.append(r.sweep_fixed_points)
    a = {"reeb_counts": sorted(set(counts)), "points": n}
    b = {"fixed_points_on_1024_sweep": sorted(set(certs)), "points": n}
    return (all(c == 2 for c in counts), a), (all(c == 2 for c in certs), b)


def _check_outside(cfg, rng, n, strip_k):
    from .flowsim import invariant_circles

    strip = 1 - strip_k * cfg.epsilon
    same, mins = True, []
    for p in sample_region(cfg, RegionTag.OUTSIDE, n, rng, strip=strip):
        circ = invariant_circles(cfg, p)
        same &= len(circ) == 2 and len({c.x_direction for c in circ}) == 1
        mins.append(cross_section_functional(cfg, p).certified_min)
    return same and min(mins) > 0, {"same_direction_pairs": bool(same),
                                    "min_cross_section": min(mins), "points": n}


def _check_z(cfg):
    zs = z_points(cfg)
    eps = cfg.epsilon
    inner = [z for z in zs if abs(signed_distance(cfg, z.omega) + eps) < 1e-6 * eps + 1e-12]
    outer = [z for z in zs if abs(signed_distance(cfg, z.omega) - eps) < 1e-6 * eps + 1e-12]
    a = (len(inner) == 4, {"inner": len(inner), "labels": [z.label for z in inner]})
    b = (len(outer) == 4, {"outer": len(outer), "labels": [z.label for z in outer]})
    return a, b


def _check_n(cfg):
    ns = n_points(cfg)
    inside = [trace_zero_residual(cfg, p.reduced.rho, p.reduced.alpha_tilde) for p in ns]
    return len(ns) == 2 and max(inside) < 0, {"count": len(ns), "alpha_tilde": ns[0].reduced.alpha_tilde,
                                              "trace_zero_residual": max(inside)}


def _check_no_j(cfg, n):
    gap = min(chc_alpha(cfg, r) - ns_alpha(cfg, r) for r in rho_grid(cfg, n, 1e-2))
    return gap > 0, {"min_chc_minus_ns": gap, "samples": n}


def _check_cpo(cfg, grid):
    from .flowsim import cpo_count

    # the Hopf arcs must be supercritical on top (and sub- on the bottom) first
    l1 = []
    for side in ("top", "bottom"):
        arc = trace_zero_arc(cfg, side, EqClass.CENTER, 32)
        vals = [lyapunov_l1(cfg, e).l1 for e in arc.samples]
        l1.append(max(vals) if side == "top" else min(vals))
    ev = {"l1_top_max": l1[0], "l1_bottom_min": l1[1]}
    if not l1[0] < 0 < l1[1]:
        ev["violation"] = "l1 sign on the centre arcs"
        return False, ev
    eps_cpo = 0.005
    c5 = SystemConfig(eps_cpo, cfg.phi, validate=False)
    inside, outside = [], []
    for rho in (-0.5, 0.0, 0.5):
        lo, hi = chc_alpha(c5, rho), rho + math.sqrt(1 - rho * rho) / c5.C
        inside.append(cpo_count(c5, ReducedParams(rho, 0.5 * (lo + hi))).count)
    outside.append(cpo_count(c5, ReducedParams(0.0, 1.0 / c5.C + 0.3)).count)
    outside.append(cpo_count(c5, ReducedParams(0.0, chc_alpha(c5, 0.0) - 0.3)).count)
    dg = density_grid(cfg, grid, grid)
    mx, mr, mu = dg.max_alpha_prime()
    ok = all(c == 1 for c in inside) and all(c == 0 for c in outside) and mx < 0
    ev.update({"cpo_inside": inside, "cpo_outside": outside, "cpo_epsilon": eps_cpo,
               "density_grid": grid, "max_alpha_prime": mx, "argmax_rho": mr, "argmax_u": mu})
    return ok, ev


def _check_k(cfg):
    ks = k_points(cfg)
    kp = k_point(cfg)
    slope_ok = kp.ns_slope < 0 and abs(kp.ns_slope - kp.ns_slope_closed_form) < 1e-6
    return len(ks) == 4 and slope_ok, {"count": len(ks), "alpha_tilde": kp.alpha_tilde,
                                       "rho_tilde": kp.rho_tilde, "ns_slope": kp.ns_slope}


def _check_h(cfg):
    from .flowsim import h_crossings

    hs = h_crossings(cfg)
    samples = hs[0].samples if hs else ()
    distinct = all(abs(p - m) > 1e-6 for rt, p, m in samples if abs(rt) > 0.1)
    ev = {"per_extremity": len(hs), "total": 2 * len(hs),
          "rho_tilde": [h.rho_tilde for h in hs], "alpha_tilde": [h.alpha_tilde for h in hs],
          "rhc_samples": [list(s) for s in samples]}
    return (len(hs) == 1, ev), (distinct and len(samples) == 3, {
        "curves": 4, "shot_pairs": [list(s) for s in samples]})


def checklist(cfg: SystemConfig, seed: int = 0, n_monte_carlo: int = 100, n_flow: int = 5,
              density: int = 40, strip_k: float = 10.0) -> ChecklistReport:
    """Run every assumption check; failures and exceptions are recorded, never raised."""
    rng = np.random.default_rng(seed)
    results: dict[str, tuple] = {}

    def run(ids, fn, *args):
        try:
            out = fn(*args)
        except Exception as exc:  # recorded, the report must stay complete
            out = [(False, {"error": f"{type(exc).__name__}: {exc}"})] * len(ids)
        if len(ids) == 1:
            out = [out]
        for i, r in zip(ids, out):
            results[i] = r

    run(["1"], _check_equilibria, cfg, rng, n_monte_carlo)
    run(["2"], _check_b, cfg)
    run(["3a"], _check_arcs, cfg)
    run(["3b"], _check_coexistence, cfg)
    run(["4a", "4b"], _check_reeb, cfg, rng, n_flow, strip_k)
    run(["4c"], _check_outside, cfg, rng, n_flow, strip_k)
    run(["5a", "5b"], _check_z, cfg)
    run(["9", "5c"], _check_h, cfg)
    run(["6"], _check_n, cfg)
    run(["7a"], _check_no_j, cfg, 60)
    run(["7b"], _check_cpo, cfg, density)
    run(["8"], _check_k, cfg)
    entries = []
    for i in CHECK_IDS:
        ok, ev = results[i]
        st = Status.NUMERIC_EVIDENCE if i == "7b" else Status.VERIFIED
        entries.append(CheckEntry(i, st, bool(ok), _jsonable(ev)))
    conf = {"epsilon": cfg.epsilon, "phi": cfg.phi, "seed": seed, "strip_k": strip_k,
            "monte_carlo_per_region": n_monte_carlo, "flow_points": n_flow, "density_grid": density}
    return ChecklistReport(conf, entries)


# -- export ---------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, enum.Enum):
        return v.value
    return v


def _point_dict(p: CodimTwoPoint) -> dict:
    return {"kind": p.kind.value, "label": p.label, "side": p.side,
            "rho": p.reduced.rho, "alpha_tilde": p.reduced.alpha_tilde,
            "rho_tilde": p.rho_tilde, "omega_x": p.omega[0], "omega_y": p.omega[1],
            "anchor": _POINT_ANCHORS[p.kind], "extra": p.extra}


_POINT_ANCHORS = {
    PointKind.B: "double zero eigenvalue on the saddle-node boundary",
    PointKind.Z: "rotational loop line meets the saddle-node boundary",
    PointKind.N: "crossing of the two rotational loop lines",
    PointKind.K: "rotational loop line meets the neutral-saddle curve",
    PointKind.H: "snp curve meets the lower rotational loop",
}


def bundle_to_dict(bundle: DiagramBundle) -> dict:
    return _jsonable({
        "schema_version": SCHEMA_VERSION,
        "config": {"epsilon": bundle.config.epsilon, "phi": bundle.config.phi},
        "metadata": {k: v for k, v in bundle.metadata.items() if k != "elapsed_s"},
        "counts": bundle.counts(),
        "curves": [{"label": c.label, "kind": c.kind, "anchor": c.anchor,
                    "param1": c.param1, "param2": c.param2,
                    "omega_x": c.omega[0], "omega_y": c.omega[1]} for c in bundle.curves],
        "points": [_point_dict(p) for p in bundle.points],
    })


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _slug(label: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in label.replace("+", "p").replace("-", "m"))


def _fmt(v: float) -> str:
    return f"{float(v):.16e}"


def write_curve_csv(curve: LabelledCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["label", "param1", "param2", "omega_x", "omega_y"])
        for a, b, ox, oy in zip(curve.param1, curve.param2, curve.omega[0], curve.omega[1]):
            w.writerow([curve.label, _fmt(a), _fmt(b), _fmt(ox), _fmt(oy)])


def export(bundle: DiagramBundle, fmt: str, path) -> list[Path]:
    """Write ``bundle`` as CSV files (one per curve), JSON or SVG under ``path``.

    ``path`` is a directory for CSV and a file otherwise.
    """
    path = Path(path)
    try:
        if fmt == "csv":
            path.mkdir(parents=True, exist_ok=True)
            out = []
            for c in bundle.curves:
                p = path / f"{_slug(c.label)}.csv"
                write_curve_csv(c, p)
                out.append(p)
            return out
        if fmt == "json":
            path.write_text(dumps_json(bundle_to_dict(bundle)), encoding="utf-8")
            return [path]
        if fmt == "svg":
            from .svg import diagram_svg

            path.write_text(diagram_svg(bundle), encoding="utf-8")
            return [path]
    except OSError as exc:
        raise IoError(str(exc)) from exc
    raise ValueError(f"unknown format {fmt!r}")
