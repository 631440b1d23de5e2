"""Walk through the resonance region at eps = 0.05: regions, equilibria, B points, Hopf arcs."""

import numpy as np

from torusbif.equilibria import EqClass, equilibrium_count, find_equilibria, locate_B_points, lyapunov_l1, trace_zero_arc
from torusbif.family import SystemConfig
from torusbif.geometry import region_classify, signed_distance

cfg = SystemConfig(0.05, 0.125)
print(f"eps = {cfg.epsilon}, phi = {cfg.phi}, C = S = {cfg.C:.6f}\n")

# a horizontal cut through the annulus, from the hole to the outside
for ox in (0.0, 0.62, 0.707, 0.75, 1.2):
    om = (ox, 0.0)
    tag = region_classify(cfg, om)
    n = equilibrium_count(cfg, om)
    print(f"Omega = {om}: {tag.value:<14} signed distance {signed_distance(cfg, om):+.4f}, {n} equilibria")

om = (0.707, 0.0)
print("\nequilibria at", om)
for e in find_equilibria(cfg, om):
    print(f"  s = ({e.state[0]:.5f}, {e.state[1]:.5f})  tr = {e.tr:+.4f}  det = {e.det:+.4f}  {e.cls.value}")

print("\nBogdanov-Takens points")
for b in locate_B_points(cfg):
    print(f"  {b.quadrant:<6} {b.boundary:<5} Omega = ({b.equilibrium.omega[0]:+.5f}, {b.equilibrium.omega[1]:+.5f})"
          f"  a = {b.coeff_a:+.4f}  b = {b.coeff_b:+.4f}")

print("\nfirst Lyapunov coefficient along the Hopf arcs")
for side in ("top", "bottom"):
    arc = trace_zero_arc(cfg, side, EqClass.CENTER, 64)
    l1 = np.array([lyapunov_l1(cfg, e).l1 for e in arc.samples])
    print(f"  {side:<6} l1 in [{l1.min():+.3f}, {l1.max():+.3f}]")
