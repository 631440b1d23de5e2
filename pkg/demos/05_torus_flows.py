"""Horizontal invariant circles in the hole and outside the resonance region."""

from torusbif.family import SystemConfig
from torusbif.flowsim import invariant_circles, reeb_count
from torusbif.geometry import cross_section_functional

cfg = SystemConfig(0.05, 0.125)
for om in ((0.0, 0.0), (0.2, -0.3), (2.0, 0.3), (-1.8, 0.1)):
    cs = invariant_circles(cfg, om)
    print(f"Omega = {om}")
    for c in cs:
        print(f"  y0 = {c.y0:.6f}  direction {c.x_direction:+d}  {c.stability.value:<10} multiplier {c.multiplier:.3e}")
    if len({c.x_direction for c in cs}) == 2:
        print(f"  Reeb components: {reeb_count(cfg, om).count}")
    else:
        xs = cross_section_functional(cfg, om)
        print(f"  same direction; <N, G> >= {xs.certified_min:.4f} on the whole torus")
