"""Command line: ``python -m torusbif {verify,diagram,cpo-density,transit-map,constants}``.

Exit codes: 0 when every check passes, 1 on a failed check, 2 on bad usage
or configuration.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("torusbif")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--phi", type=float, default=0.125)
    p.add_argument("--grid", type=int, default=None, help="grid size (meaning depends on command)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=("csv", "json", "svg"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="torusbif", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (
        ("verify", "run the assumption checklist"),
        ("diagram", "assemble the bifurcation diagram and export it"),
        ("cpo-density", "alpha~ derivative over the cpo region"),
        ("transit-map", "sample the transit map between x_g and x_g + 1"),
        ("constants", "closed forms against quadrature"),
    ):
        _common(sub.add_parser(name, help=text))
    return ap


def _config(args):
    from .family import SystemConfig

    return SystemConfig(args.epsilon, args.phi)


def _write(path: Path | None, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        log.info("wrote %s", path)


def cmd_verify(args, cfg) -> int:
    from .diagram import checklist, dumps_json

    rep = checklist(cfg, seed=args.seed, density=args.grid or 40)
    for e in rep.entries:
        mark = "PASS" if e.passed else "FAIL"
        print(f"{e.id:>3}  {mark}  {e.status.value}")
    if args.out is not None:
        _write(args.out, dumps_json(rep.to_dict()))
    print("all assumptions pass" if rep.ok else "checklist failed")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_diagram(args, cfg) -> int:
    from .diagram import assemble, export

    bundle = assemble(cfg, n_curve=args.grid or 64)
    out = args.out or Path(f"diagram.{args.format}" if args.format != "csv" else "diagram_csv")
    for p in export(bundle, args.format, out):
        print(p)
    print(" ".join(f"{k}={v}" for k, v in sorted(bundle.counts().items())))
    return EXIT_OK


def cmd_cpo_density(args, cfg) -> int:
    from .diagram import dumps_json
    from .melnikov import density_grid
    from .svg import density_svg

    n = args.grid or 200
    g = density_grid(cfg, n, n)
    mx, r, u = g.max_alpha_prime()
    print(f"max alpha~' = {mx:.6g} at rho = {r:.6g}, u = {u:.6g}")
    if args.out is not None:
        if args.format == "csv":
            g.to_csv(args.out)
        elif args.format == "svg":
            _write(args.out, density_svg(g))
        else:
            _write(args.out, dumps_json({"schema_version": 1, "rho": g.rho, "u": g.u,
                                         "alpha_prime": g.alpha_prime, "max": [mx, r, u]}))
    return EXIT_OK if mx < 0 else EXIT_FAIL


def cmd_transit_map(args, cfg) -> int:
    from .diagram import dumps_json
    from .flowsim import ReducedSystem, affine_transit, manifold_values, transit_map
    from .hamiltonian import ReducedParams, rho0
    from .melnikov import n_alpha

    red = ReducedParams(rho0(cfg), n_alpha(cfg))
    off = manifold_values(ReducedSystem(cfg, red, eps_terms=False), args.tol)
    on = manifold_values(ReducedSystem(cfg, red, eps_terms=True), args.tol)
    n = args.grid or 11
    rows = []
    for dz in np.linspace(0.01, 0.5, n):
        a = transit_map(cfg, red, off[0] + dz, False, args.tol, off)
        b = transit_map(cfg, red, on[0] + dz, True, args.tol, on)
        rows.append({"dz": dz, "T_off": a.Tz, "affine": float(affine_transit(cfg, a.z)),
                     "T_on": b.Tz, "slope_on": b.slope})
    print(f"z_s, z_u (eps terms off) = {off[0]:.12g}, {off[1]:.12g}; -rho0/pi^2 = {-rho0(cfg) / math.pi**2:.12g}")
    print(f"z_s, z_u (eps terms on)  = {on[0]:.12g}, {on[1]:.12g}")
    print(f"{'dz':>8} {'T off':>16} {'affine':>16} {'T on':>16} {'slope on':>12}")
    for r in rows:
        print(f"{r['dz']:8.4f} {r['T_off']:16.9g} {r['affine']:16.9g} {r['T_on']:16.9g} {r['slope_on']:12.6g}")
    if args.out is not None:
        _write(args.out, dumps_json({"schema_version": 1, "z_off": list(off), "z_on": list(on), "rows": rows}))
    return EXIT_OK


def cmd_constants(args, cfg) -> int:
    from .diagram import dumps_json
    from .hamiltonian import rho0, x_g
    from .melnikov import k_point, n_alpha, rhc_constants

    k = rhc_constants(cfg, quadrature=True)
    kp = k_point(cfg)
    rows = [("a", k.a, k.a_quad), ("b", k.b, k.b_quad), ("c", k.c, k.c_quad)]
    print(f"{'name':>6} {'closed form':>22} {'quadrature':>22} {'rel err':>10}")
    worst = 0.0
    for name, f, q in rows:
        err = abs(q - f) / abs(f)
        worst = max(worst, err)
        print(f"{name:>6} {f:22.15g} {q:22.15g} {err:10.2e}")
    extra = {"k": k.k, "x_g": x_g(cfg), "rho0": rho0(cfg), "alpha_N": n_alpha(cfg),
             "alpha_K": kp.alpha_tilde, "rho_tilde_K": kp.rho_tilde}
    for name, v in extra.items():
        print(f"{name:>12} {v:22.15g}")
    if args.out is not None:
        _write(args.out, dumps_json({"schema_version": 1, "rhc": {n: [f, q] for n, f, q in rows}, **extra}))
    return EXIT_OK if worst < 1e-8 else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "diagram": cmd_diagram, "cpo-density": cmd_cpo_density,
            "transit-map": cmd_transit_map, "constants": cmd_constants}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
    except ValueError as exc:
        print(f"torusbif: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.grid is not None and args.grid < 2:
        print("torusbif: --grid must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    return COMMANDS[args.command](args, cfg)


if __name__ == "__main__":
    sys.exit(main())
