import math

import numpy as np
import pytest

from torusbif.family import SystemConfig, eval_field, jacobian, second_derivative, third_derivative, trace_det
from torusbif.equilibria import (
    EqClass,
    NotCenter,
    NotSaddleNode,
    equilibrium_count,
    find_equilibria,
    hausdorff,
    hopf_range_condition,
    locate_B_points,
    lyapunov_l1,
    omega_of_state,
    saddle_node_coefficient,
    saddle_node_coefficient_closed_form,
    trace_zero_arc,
    trace_zero_ellipse,
)
from torusbif.geometry import RegionTag, TubularCoord, region_classify, sample_region, tubular_to_param

TP = 2 * math.pi


def test_omega_of_state(cfg05):
    assert omega_of_state(cfg05, (0, cfg05.phi)) == pytest.approx((1.05, cfg05.S))
    rng = np.random.default_rng(0)
    for s in rng.random((1000, 2)):
        assert np.abs(eval_field(cfg05, omega_of_state(cfg05, s), s)).max() < 1e-15


def test_equilibrium_set_lies_in_R(cfg05):
    g = np.linspace(0, 1, 24, endpoint=False)
    tags = {region_classify(cfg05, omega_of_state(cfg05, (x, y)), tol=1e-7) for x in g for y in g}
    assert tags <= {RegionTag.INTERIOR, RegionTag.INNER_BOUNDARY, RegionTag.OUTER_BOUNDARY}


def test_find_equilibria_outside_and_interior(cfg05):
    assert find_equilibria(cfg05, (3, 0)) == []
    rng = np.random.default_rng(1)
    for om in sample_region(cfg05, RegionTag.INTERIOR, 25, rng):
        eqs = find_equilibria(cfg05, om)
        assert len(eqs) == 2
        # one index +1 and one index -1 sheet
        assert sorted(np.sign([e.det for e in eqs])) == [-1, 1]
        for e in eqs:
            assert np.linalg.norm(eval_field(cfg05, om, e.state)) < 1e-10
            assert (e.tr, e.det) == pytest.approx(trace_det(cfg05, e.state), abs=1e-12)


def test_boundary_point_single_equilibrium(cfg05):
    om = tubular_to_param(cfg05, TubularCoord(0.3, cfg05.epsilon))
    assert equilibrium_count(cfg05, om) == 1
    eqs = find_equilibria(cfg05, om, dedup=1e-3)
    assert len(eqs) == 1 and abs(eqs[0].det) < 1e-6


def test_count_by_region(cfg05):
    rng = np.random.default_rng(2)
    want = {RegionTag.INTERIOR: 2, RegionTag.HOLE: 0, RegionTag.OUTSIDE: 0,
            RegionTag.INNER_BOUNDARY: 1, RegionTag.OUTER_BOUNDARY: 1}
    for tag, k in want.items():
        assert {equilibrium_count(cfg05, p) for p in sample_region(cfg05, tag, 100, rng)} == {k}


@pytest.mark.parametrize("side", ["top", "bottom"])
def test_trace_zero_arcs(cfg01, side):
    arcs = [trace_zero_arc(cfg01, side, k) for k in (EqClass.CENTER, EqClass.NEUTRAL_SADDLE)]
    for a in arcs:
        assert len(a.samples) >= 512
        assert max(abs(e.tr) for e in a.samples) < 1e-10
    # both arcs share their two endpoints, the B points of this side
    ends = [sorted(map(tuple, np.round(a.endpoints, 9))) for a in arcs]
    assert ends[0] == ends[1]
    bs = [b.equilibrium.state for b in locate_B_points(cfg01)]
    for e in arcs[0].endpoints:
        assert min(math.dist(e, b) for b in bs) < 1e-9
    om = np.concatenate([a.omegas().T for a in arcs], axis=1)
    assert hausdorff(om, trace_zero_ellipse(cfg01, side, 2048)) < 10 * cfg01.epsilon**2


def test_trace_transversal(cfg01):
    arc = trace_zero_arc(cfg01, "top", EqClass.CENTER, 64)
    h = 1e-6
    for e in arc.samples:
        x, y = e.state
        d = (trace_det(cfg01, (x, y + h))[0] - trace_det(cfg01, (x, y - h))[0]) / (2 * h)
        assert abs(d) > math.pi**2


def test_B_points(cfg01):
    bs = locate_B_points(cfg01)
    assert len(bs) == 4
    assert {(b.boundary, b.quadrant) for b in bs} == {(i, j) for i in ("Inner", "Outer") for j in ("Top", "Bottom")}
    for b in bs:
        assert abs(b.equilibrium.det) < 1e-10 and abs(b.equilibrium.tr) < 1e-10
        assert b.coeff_a != 0 and b.coeff_b != 0
        x, y = b.equilibrium.state
        assert min(abs((y - c) % 1) for c in (0.25, 0.75)) < 5 * cfg01.epsilon or \
            min(abs((y - c) % 1 - 1) for c in (0.25, 0.75)) < 5 * cfg01.epsilon


def test_B_coefficients_scaling():
    # a scales like eps and b = -+4 pi^2 eps; a is compared with 4 pi^3 C^2 eps (see the companion literal check in the acceptance suite)
    for eps, tol in ((0.01, 0.2), (0.001, 0.05)):
        cfg = SystemConfig(eps)
        for b in locate_B_points(cfg):
            assert abs(b.coeff_a) == pytest.approx(4 * math.pi**3 * cfg.C**2 * eps, rel=tol)
            want_b = -4 * math.pi**2 * eps if b.quadrant == "Top" else 4 * math.pi**2 * eps
            assert b.coeff_b == pytest.approx(want_b, rel=tol)


def test_saddle_node_coefficient(cfg01):
    signs = {}
    for sign in (1, -1):
        for th in np.linspace(0, 1, 40, endpoint=False):
            om = tubular_to_param(cfg01, TubularCoord(th, sign * cfg01.epsilon))
            eqs = [e for e in find_equilibria(cfg01, om, dedup=1e-3) if abs(e.tr) > 1e-4]
            if not eqs:
                continue
            e = min(eqs, key=lambda q: abs(q.det))
            if abs(e.det) > 1e-8:
                e = type(e).at(cfg01, e.state)
                if abs(e.det) > 1e-8:
                    continue
            v = saddle_node_coefficient(cfg01, e)
            assert v == pytest.approx(saddle_node_coefficient_closed_form(cfg01, e.state), rel=1e-8)
            assert v != 0
            signs.setdefault(sign, set()).add(np.sign(v))
    assert all(len(s) == 1 for s in signs.values())


def test_saddle_node_coefficient_rejects(cfg01):
    eq = find_equilibria(cfg01, tubular_to_param(cfg01, TubularCoord(0.3, 0.0)))[0]
    with pytest.raises(NotSaddleNode):
        saddle_node_coefficient(cfg01, eq)
    with pytest.raises(NotCenter):
        lyapunov_l1(cfg01, eq)


def _kuznetsov_l1(cfg, s, M):
    """Complex-vector formula for l1, with q, p built from the same normalisation M."""
    A = jacobian(cfg, s)
    om = math.sqrt(np.linalg.det(A))
    q = np.linalg.solve(M, np.array([1, -1j]) / math.sqrt(2))
    p = M.T @ (np.array([1, -1j]) / math.sqrt(2))

    def split(u):
        return ((u.real, 1), (u.imag, 1j))

    def B(u, v):
        return sum(cu * cv * second_derivative(cfg, s, a, b) for a, cu in split(u) for b, cv in split(v))

    def C3(u, v, w):
        return sum(cu * cv * cw * third_derivative(cfg, s, a, b, c)
                   for a, cu in split(u) for b, cv in split(v) for c, cw in split(w))
    qb = q.conj()
    t = (p.conj() @ C3(q, q, qb) - 2 * p.conj() @ B(q, np.linalg.solve(A, B(q, qb)))
         + p.conj() @ B(qb, np.linalg.solve(2j * om * np.eye(2) - A, B(q, q))))
    return t.real / (2 * om)


def test_l1_against_complex_formula(cfg005):
    for side in ("top", "bottom"):
        for e in trace_zero_arc(cfg005, side, EqClass.CENTER, 16).samples[::3]:
            r = lyapunov_l1(cfg005, e)
            assert r.l1 == pytest.approx(_kuznetsov_l1(cfg005, np.array(e.state), r.transform), rel=1e-9)


def test_l1_signs_and_normalisation(cfg005):
    top = trace_zero_arc(cfg005, "top", EqClass.CENTER, 64).samples
    bot = trace_zero_arc(cfg005, "bottom", EqClass.CENTER, 64).samples
    assert all(lyapunov_l1(cfg005, e).l1 < 0 for e in top)
    assert all(lyapunov_l1(cfg005, e).l1 > 0 for e in bot)
    # another admissible normalisation keeps the sign
    assert all(lyapunov_l1(cfg005, e, first_row=(1.0, 0.3)).l1 < 0 for e in top[::8])


def test_l1_leading_order():
    for eps, tol in ((0.005, 0.1), (0.001, 0.03)):
        cfg = SystemConfig(eps)
        res = [lyapunov_l1(cfg, e) for e in trace_zero_arc(cfg, "top", EqClass.CENTER, 64).samples]
        wmax = max(r.omega for r in res)
        # the expansion assumes an O(1) Hopf frequency, so it is compared away from the B ends
        for r in res:
            if r.omega >= 0.5 * wmax:
                assert r.l1 == pytest.approx(r.l1_leading, rel=tol)


def test_hopf_range_condition():
    assert hopf_range_condition(0.125)
    assert not hopf_range_condition(1 / 24)
    assert not hopf_range_condition(0.02)
    with pytest.raises(ValueError):
        hopf_range_condition(0.3)
