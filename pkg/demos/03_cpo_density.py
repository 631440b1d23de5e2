"""d alpha~/dE over the closed-orbit region; writes cpo_density.svg next to this script."""

from pathlib import Path

from torusbif.family import SystemConfig
from torusbif.flowsim import cpo_count
from torusbif.hamiltonian import ReducedParams
from torusbif.melnikov import centre_alpha, chc_alpha, density_grid
from torusbif.svg import density_svg

cfg = SystemConfig(0.01, 0.125)
g = density_grid(cfg, 48, 48)
mx, rho, u = g.max_alpha_prime()
print(f"48 x 48 grid: max alpha~' = {mx:.5g} at rho = {rho:.3f}, u = {u:.3g}")
out = Path(__file__).with_name("cpo_density.svg")
out.write_text(density_svg(g), encoding="utf-8")
print("wrote", out)

# strictly negative derivative means one closed orbit per parameter; count them directly
c5 = SystemConfig(0.005, 0.125, validate=False)
for rho in (-0.5, 0.0, 0.5):
    lo, hi = chc_alpha(c5, rho), centre_alpha(c5, rho)
    for label, a in (("between", 0.5 * (lo + hi)), ("above", hi + 0.3), ("below", lo - 0.3)):
        print(f"  rho = {rho:+.1f}, alpha~ {label:<7} ({a:+.3f}): {cpo_count(c5, ReducedParams(rho, a)).count} cpo")
