"""Energy balance near the upper extremity: rotational and contractible loops, N and K points."""

import numpy as np

from torusbif.family import SystemConfig
from torusbif.hamiltonian import rho0, x_g
from torusbif.melnikov import (chc_alpha, chc_limit_edge, chc_limit_necklace, k_point, n_point, ns_alpha,
                               rhc_constants, rhc_line_alpha)

cfg = SystemConfig(0.01, 0.125)
r0 = rho0(cfg)
print(f"x_g = {x_g(cfg):.10f}, rho0 = {r0:.10f}")

k = rhc_constants(cfg)
print("\nrotational loop integrals: closed form vs quadrature")
for name in ("a", "b", "c"):
    print(f"  {name} = {getattr(k, name):+.15f}   rel err {k.rel_errors[name]:.1e}")

n = n_point(cfg)
print(f"\nN: alpha~ = {n.reduced.alpha_tilde:.14f}, Omega = ({n.omega[0]:.8f}, {n.omega[1]:.8f})")
print("rhc lines through N, alpha~ at a few rho~:")
for rt in (-1.0, 0.0, 1.0):
    print(f"  rho~ = {rt:+.1f}: rhc+ {rhc_line_alpha(cfg, rt, 1):+.5f}   rhc- {rhc_line_alpha(cfg, rt, -1):+.5f}")

print("\ncontractible loop curve against the neutral saddles")
for rho in np.linspace(-0.9, 0.9, 7):
    print(f"  rho = {rho:+.2f}: chc {chc_alpha(cfg, rho):+.6f}   ns {ns_alpha(cfg, rho):+.6f}")
print(f"limits: rho -> +1: {chc_limit_edge(cfg, 1):+.6f}, rho -> -1: {chc_limit_edge(cfg, -1):+.6f}, "
      f"rho -> rho0: {chc_limit_necklace(cfg, 1):+.8f} / {chc_limit_necklace(cfg, -1):+.8f}")

kp = k_point(cfg)
print(f"\nK: alpha~ = {kp.alpha_tilde:.6f}, rho~ = {kp.rho_tilde:.10f}, ns slope {kp.ns_slope:+.6f}")
