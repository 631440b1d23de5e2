"""Transit map across one period of the necklace, with and without the sqrt(eps) terms."""

import math

import numpy as np

from torusbif.family import SystemConfig
from torusbif.flowsim import ReducedSystem, affine_transit, manifold_values, rhc_alpha_numeric, snp_alpha, transit_map
from torusbif.hamiltonian import ReducedParams, rho0
from torusbif.melnikov import n_alpha, rhc_line_alpha, rhc_line_rho_tilde

cfg = SystemConfig(0.01, 0.125)
red = ReducedParams(rho0(cfg), n_alpha(cfg))
off = manifold_values(ReducedSystem(cfg, red, eps_terms=False))
on = manifold_values(ReducedSystem(cfg, red, eps_terms=True))
print(f"z_s, z_u without eps terms: {off[0]:.12f}, {off[1]:.12f}  (-rho0/pi^2 = {-rho0(cfg) / math.pi**2:.12f})")
print(f"z_s, z_u with eps terms:    {on[0]:.12f}, {on[1]:.12f}")
print(f"\n{'z - z_s':>8} {'T (off)':>14} {'affine':>14} {'T (on)':>14} {'slope (on)':>11}")
for dz in np.linspace(0.02, 0.4, 5):
    a = transit_map(cfg, red, off[0] + dz, False, manifolds=off)
    b = transit_map(cfg, red, on[0] + dz, True, manifolds=on)
    print(f"{dz:8.3f} {a.Tz:14.9f} {float(affine_transit(cfg, a.z)):14.9f} {b.Tz:14.9f} {b.slope:11.4f}")
print(f"unperturbed slope e^(2pi/C) = {math.exp(2 * math.pi / cfg.C):.4f}")

# the saddle-node of periodic orbits hugs the upper rotational loop
rt = float(rhc_line_rho_tilde(cfg, 3.0, 1))
a_rhc = rhc_alpha_numeric(cfg, rt, float(rhc_line_alpha(cfg, rt, 1)))
with np.errstate(over="ignore", invalid="ignore"):
    res = snp_alpha(cfg, rt, a_rhc)
print(f"\nrho~ = {rt:.4f}: rhc+ at alpha~ = {a_rhc:.10f}, snp at {res['alpha_snp']:.10f}, gap {res['gap']:.3e}")
