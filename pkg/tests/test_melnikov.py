import math

import mpmath as mp
import numpy as np
import pytest

from torusbif.family import SystemConfig
from torusbif.geometry import signed_distance
from torusbif.hamiltonian import energy_range, rho0, x_g
from torusbif.melnikov import (
    CurveKind,
    PersistCurve,
    PointKind,
    alpha_from_integrals,
    positivity_verify,
    centre_alpha,
    chc_alpha,
    chc_alpha_area,
    chc_curve,
    chc_limit_edge,
    chc_limit_necklace,
    cpo_alpha,
    cpo_alpha_prime,
    cpo_centre_limit,
    cpo_integrals,
    cpo_saddle_limit,
    density_grid,
    extrapolate,
    k_point,
    k_points,
    ladder,
    n_alpha,
    n_point,
    n_points,
    ns_alpha,
    omega_to_reduced,
    ratio_derivative_from_integrals,
    reduced_to_omega,
    rhc_constants,
    rhc_curve,
    rhc_line_alpha,
    rhc_line_rho_tilde,
    rho_grid,
    rho_t,
    trace_zero_residual,
    x_f,
    z_points,
)

# high-precision evaluations of the closed forms at phi = 1/8 (mpmath, 50 digits)
ALPHA_N = -0.28817526385684448
RHO_TILDE_K = -0.7639999138902769


def _mp_constants():
    mp.mp.dps = 50
    C = S = mp.sqrt(2) / 2
    alpha_n = -2 * C * (C + 2 * S) / ((4 + 9 * C**2) * mp.sqrt(1 + C**2))
    rt = -16 * C * (2 - S * C + 4 * C**2) / ((1 + C**2) ** mp.mpf(0.75) * (4 + C**2) * (4 + 9 * C**2) * mp.tanh(mp.pi / C))
    return float(alpha_n), float(rt)


def test_frozen_constants_match_high_precision():
    a, rt = _mp_constants()
    assert a == pytest.approx(ALPHA_N, abs=1e-16)
    assert rt == pytest.approx(RHO_TILDE_K, abs=1e-15)


@pytest.mark.parametrize("phi", [0.06, 0.125, 0.18])
def test_rhc_constants(phi):
    k = rhc_constants(SystemConfig(0.01, phi))
    assert max(k.rel_errors.values()) < 1e-8
    assert k.a > 0 and k.c > 0 and k.b < 0
    assert k.a == pytest.approx(k.k * math.sqrt(1 + SystemConfig(0.01, phi).C ** 2), rel=1e-15)


def test_n_point(cfg01):
    p = n_point(cfg01)
    assert p.kind is PointKind.N
    assert p.reduced.alpha_tilde == pytest.approx(ALPHA_N, abs=1e-15)
    assert trace_zero_residual(cfg01, rho0(cfg01), p.reduced.alpha_tilde) < 0
    for sign in (1, -1):
        assert rhc_line_rho_tilde(cfg01, p.reduced.alpha_tilde, sign) == pytest.approx(0, abs=1e-15)
    assert len(n_points(cfg01)) == 2


def test_chc_line_vs_area(cfg01):
    for rho in (-0.5, 0.5):
        assert chc_alpha(cfg01, rho) == pytest.approx(chc_alpha_area(cfg01, rho), rel=1e-6)


def test_chc_limits(cfg01):
    assert chc_limit_edge(cfg01, 1) == pytest.approx(1.0, abs=1e-3)
    assert chc_limit_edge(cfg01, -1) == pytest.approx(-1.0, abs=1e-3)
    for side in (1, -1):
        assert chc_limit_necklace(cfg01, side) == pytest.approx(n_alpha(cfg01), abs=1e-4)


def test_chc_direct_near_necklace_is_log_slow(cfg01):
    # d log d convergence: direct evaluation is only ~1e-3 off at d = 1e-4
    d = 1e-4
    err = abs(chc_alpha(cfg01, rho0(cfg01) + d) - n_alpha(cfg01))
    assert 1e-4 < err < 5 * d * abs(math.log(d))


def test_ns_alpha(cfg01):
    assert ns_alpha(cfg01, 0.0) == pytest.approx(-math.sqrt(2), abs=1e-14)
    for rho in np.linspace(-0.99, 0.99, 50):
        assert abs(trace_zero_residual(cfg01, rho, ns_alpha(cfg01, rho))) < 1e-12
    rhos = rho_grid(cfg01, 200, 1e-2)
    assert all(chc_alpha(cfg01, r) > ns_alpha(cfg01, r) for r in rhos)


def test_cpo_limits(cfg01):
    for rho in (-0.5, 0.0, 0.5):
        assert cpo_centre_limit(cfg01, rho) == pytest.approx(centre_alpha(cfg01, rho), abs=1e-6)
        assert cpo_saddle_limit(cfg01, rho) == pytest.approx(chc_alpha(cfg01, rho), abs=1e-5)


def test_cpo_alpha_decreases(cfg01):
    ec, es = energy_range(cfg01, 0.0)
    E = ec + (es - ec) * np.linspace(1e-4, 1 - 1e-4, 40)
    a = np.asarray(cpo_alpha(cfg01, E, 0.0))
    assert np.all(np.diff(a) < 0)
    assert a[0] == pytest.approx(1 / cfg01.C, abs=1e-3)
    assert a[-1] > chc_alpha(cfg01, 0.0)


def _f(v):
    return float(np.asarray(v).ravel()[0])


def _fd_spots():
    return [(r, u) for r in (-0.9, -0.4, 0.3, 0.8) for u in (0.1, 0.5, 0.9)]


def test_derivatives_against_finite_differences(cfg01):
    for rho, u in _fd_spots():
        ec, es = energy_range(cfg01, rho)
        E = ec + u * (es - ec)
        h = (es - ec) * 1e-5
        I = cpo_integrals(cfg01, E, rho)
        Ip = cpo_integrals(cfg01, E + h, rho, derivatives=False)
        Im = cpo_integrals(cfg01, E - h, rho, derivatives=False)
        assert _f(I.a_prime) == pytest.approx(_f((Ip.a - Im.a) / (2 * h)), rel=1e-4)
        assert _f(I.b_prime) == pytest.approx(_f((Ip.b - Im.b) / (2 * h)), rel=1e-4)


def test_alpha_prime_negative_and_sign_relation(cfg01):
    for rho, u in _fd_spots() + [(0.0, 0.02)]:
        ec, es = energy_range(cfg01, rho)
        E = ec + u * (es - ec)
        ap = _f(cpo_alpha_prime(cfg01, E, rho))
        assert ap < 0
        I = cpo_integrals(cfg01, E, rho)
        ratio = _f(I.a / I.b)
        # d(a/b)/dE carries the opposite sign
        assert _f(ratio_derivative_from_integrals(I)) == pytest.approx(-cfg01.C * ap * ratio**2, rel=1e-9)


def test_density_grid_small(cfg01, tmp_path):
    g = density_grid(cfg01, 12, 9, u_margin=1e-6)
    assert g.alpha_prime.shape == (12, 9)
    mx, r, u = g.max_alpha_prime()
    assert mx < 0
    # boundary columns reproduce the centre and chc curves
    for i, rho in enumerate(g.rho):
        if abs(rho - rho0(cfg01)) < 0.05:
            continue
        assert g.alpha_tilde[i, 0] == pytest.approx(centre_alpha(cfg01, rho), abs=1e-3)
        assert g.alpha_tilde[i, -1] == pytest.approx(chc_alpha(cfg01, rho), abs=1e-3)
    # |alpha~'| blows up towards the rho = +-1 edges
    i = np.unravel_index(np.argmax(np.abs(g.alpha_prime)), g.alpha_prime.shape)[0]
    assert i in (0, len(g.rho) - 1)
    p = tmp_path / "g.csv"
    g.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "rho,u,E,alpha_tilde,alpha_prime"
    assert len(lines) == 1 + 12 * 9


def test_k_point(cfg01):
    kp = k_point(cfg01)
    assert kp.alpha_tilde == pytest.approx(2 * rho0(cfg01), abs=1e-15)
    assert kp.alpha_tilde == pytest.approx(-1.632993, abs=1e-6)
    assert kp.rho_tilde == pytest.approx(RHO_TILDE_K, abs=1e-14)
    assert kp.rho_tilde == pytest.approx(kp.rho_tilde_from_lines, abs=1e-12)
    assert kp.ns_slope == pytest.approx(-1.0, abs=1e-6)
    assert len(k_points(cfg01)) == 4


def test_z_points(cfg01):
    zs = z_points(cfg01)
    assert len(zs) == 8
    for z in zs:
        d = signed_distance(cfg01, z.omega)
        assert abs(abs(d) - cfg01.epsilon) < 1e-8
    # Omega -> -Omega carries the top points onto the bottom ones
    top = {z.label[2:]: z.omega for z in zs if z.side > 0}
    bot = {z.label[2:]: z.omega for z in zs if z.side < 0}
    for k in top:
        assert np.allclose(top[k], -np.asarray(bot[k]), atol=1e-15)


def test_scaling_chain_round_trip(cfg01):
    rng = np.random.default_rng(0)
    for rho, al, side in zip(rng.uniform(-1, 1, 50), rng.uniform(-3, 3, 50), rng.choice([-1, 1], 50)):
        red, s = omega_to_reduced(cfg01, reduced_to_omega(cfg01, rho, al, side))
        assert s == side
        assert (red.rho, red.alpha_tilde) == pytest.approx((rho, al), abs=1e-10)


def test_curves(cfg01):
    rt = np.linspace(-1, 1, 5)
    for sign, kind in ((1, CurveKind.RHC_PLUS), (-1, CurveKind.RHC_MINUS)):
        c = rhc_curve(cfg01, sign, rt)
        assert c.kind is kind and len(c.samples) == 5
    assert np.allclose(rhc_line_alpha(cfg01, 0.0, 1), n_alpha(cfg01))
    c = chc_curve(cfg01, [-0.5, 0.5])
    assert c.samples[0][1] == pytest.approx(chc_alpha(cfg01, -0.5))
    with pytest.raises(ValueError):
        PersistCurve(CurveKind.CHC, np.array([1.0, 0.0]), np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        PersistCurve(CurveKind.CHC, np.array([0.0, 1.0]), np.array([0.0, np.nan]))


def test_extrapolation_ladder():
    ts = ladder(1e-2, 6)
    assert ts[1] / ts[0] == pytest.approx(0.25)
    vals = 2.0 + 3 * ts + ts**2
    assert extrapolate(ts, vals, [lambda t: t, lambda t: t**2]) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("phi", [0.06, 0.125, 0.18])
def test_positivity_chain(phi):
    cfg = SystemConfig(0.01, phi)
    r0 = rho0(cfg)
    for rho in list(np.linspace(r0 + 0.02, 0.98, 6)) + list(np.linspace(-0.98, r0 - 0.02, 4)):
        rep = positivity_verify(cfg, rho)
        assert rep.ok, {k: v for k, v in rep.links.items() if not v}
        assert rep.direct_integral > 0
        assert rep.eta_max <= 1 / math.pi


def test_positivity_exact_zeros():
    cfg = SystemConfig(0.01, 0.125)
    assert rho_t(cfg) == 0.0
    assert x_f(cfg) == 0.0
