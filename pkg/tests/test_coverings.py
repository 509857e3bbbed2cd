import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarsesmith import scenarios as S
from coarsesmith.complexes import nerve
from coarsesmith.coverings import (Covering, DecompositionWitness, ball_covering, build_coarsening_system,
                                   degree, interval_witness, lebesgue_number, saturate_G,
                                   system_from_levels, verify_r_disconnected)
from coarsesmith.errors import CannotSatisfyLebesgue, NotAPartition, RadiusNotPositive
from coarsesmith.metric import FiniteMetricSpace, IsometricAction, WindowedSpace, integer_grid


def line(lo, hi, collar=1):
    C = np.arange(lo, hi + 1)[:, None]
    m = FiniteMetricSpace(coords=C, metric="l1")
    edge = np.minimum(C[:, 0] - lo, hi - C[:, 0])
    return WindowedSpace(m, np.flatnonzero(edge < collar), (hi - lo) / 2, collar)


def one_point():
    return WindowedSpace(FiniteMetricSpace(dist=[[0.0]]), [], 0.0, 0.0, bounded=True)


def test_one_point_ball_covering():
    c = ball_covering(one_point(), 1.0)
    assert [list(s) for s in c.sets] == [[0]]


def test_path_unit_balls():
    ws = line(0, 10)
    c = ball_covering(ws, 1.0, centers=list(range(11)))
    assert len(c) == 11
    assert sorted(len(s) for s in c.sets) == [2, 2] + [3] * 9
    assert degree(c) == 3
    assert nerve(c, ws.n).complex.dim == 2


def test_grid_radius_two_balls():
    C = integer_grid(8, 2)
    ws = WindowedSpace(FiniteMetricSpace(coords=C, metric="l2"), [], 8.0, 0.0, bounded=True)
    c = ball_covering(ws, 2.0)
    c.check(ws.n)
    assert max(c.diameters(ws)) <= 4 * np.sqrt(2) + 1e-9


def test_radius_must_be_positive():
    with pytest.raises(RadiusNotPositive):
        ball_covering(line(0, 3), 0.0)


def test_saturation_trivial_group_reindexes():
    ws = line(0, 6)
    c = ball_covering(ws, 1.0)
    s = saturate_G(c, IsometricAction.trivial(ws.n))
    assert [list(x) for x in s.sets] == [list(x) for x in c.sets]


def test_saturation_of_right_half_covers_left():
    sc = S.plane_reflection(4)
    C = sc.ws.space.coords
    right = [i for i in range(sc.ws.n) if C[i, 0] >= 0]
    centers = [i for i in right if C[i, 0] % 2 == 0 and C[i, 1] % 2 == 0]
    balls = [np.asarray(sc.ws.space.ball(i, 1.0)) for i in centers]
    half = Covering([b[C[b, 0] >= 0] for b in balls], 2.0)
    s = saturate_G(half, sc.action)
    assert len(s) == 2 * len(half)
    s.check(sc.ws.n)


def test_saturation_of_invariant_covering_keeps_duplicates():
    sc = S.plane_reflection(4)
    c = sc.levels[0]
    s = saturate_G(c, sc.action)
    assert len(s) == 2 * len(c)
    assert {tuple(x) for x in s.sets} == {tuple(x) for x in c.sets}
    assert degree(s) <= 2 * degree(c)


def test_lebesgue_whole_space():
    ws = line(0, 10)
    assert lebesgue_number(Covering([np.arange(11)], 10.0), ws) == ws.space.diameter()


def test_lebesgue_two_halves():
    ws = line(0, 10)
    c = Covering([np.arange(0, 6), np.arange(5, 11)], 5.0)
    assert lebesgue_number(c, ws) == 1.0


def test_lebesgue_grid_balls_vs_brute_force():
    C = integer_grid(5, 2)
    ws = WindowedSpace(FiniteMetricSpace(coords=C, metric="linf"), [], 5.0, 0.0, bounded=True)
    c = ball_covering(ws, 2.0)
    D = ws.space.full_matrix()
    diam = D.max()
    best = np.zeros(ws.n)
    for s in c.sets:
        out = np.setdiff1d(np.arange(ws.n), s)
        for x in s:
            best[x] = max(best[x], D[x, out].min() if len(out) else diam)
    assert lebesgue_number(c, ws) == best.min()


def test_one_point_system():
    sysm = build_coarsening_system(one_point(), num_levels=3)
    assert all(len(c) == 1 for c in sysm.levels)


def test_path_system_certificates():
    ws = line(-32, 32)
    sysm = build_coarsening_system(ws, num_levels=4, growth=2.0, r0=1.0)
    assert sysm.radii[0] == 1.0
    for i in range(3):
        assert sysm.leb[i + 1] > sysm.R[i]
        for u, s in enumerate(sysm.levels[i].sets):
            assert set(s) <= set(sysm.levels[i + 1].sets[sysm.projections[i].map[u]])


def test_reflection_system_equivariant():
    sc = S.plane_reflection(8)
    sysm = build_coarsening_system(sc.ws, sc.action, num_levels=2, r0=1.0)
    assert all(c.index_perm is not None for c in sysm.levels)
    assert all(p.equivariant for p in sysm.projections)


def test_lebesgue_failure_raises():
    ws = line(0, 10)
    a = ball_covering(ws, 2.0, centers=[0, 4, 8])
    with pytest.raises(CannotSatisfyLebesgue):
        system_from_levels(ws, [a, a])


def test_disjoint_degree_is_one():
    assert degree(Covering([np.array([0, 1]), np.array([2])], 1.0)) == 1


def test_singleton_classes_pass():
    ws = line(0, 4)
    w = DecompositionWitness(10.0, [[i] for i in range(5)], 0.0)
    assert verify_r_disconnected(w, ws).ok


def test_line_two_class_witness():
    ws = line(-20, 20)
    for r in (1.0, 2.0, 3.0):
        w = interval_witness(ws.space.coords, r)
        assert verify_r_disconnected(w, ws).ok


def test_connected_class_fails():
    C = integer_grid(4, 2)
    ws = WindowedSpace(FiniteMetricSpace(coords=C, metric="l1"), [], 4.0, 0.0, bounded=True)
    assert not verify_r_disconnected(DecompositionWitness(1.5, [np.arange(ws.n)], 2.0), ws).ok
    with pytest.raises(NotAPartition):
        verify_r_disconnected(DecompositionWitness(1.5, [np.arange(5)], 2.0), ws)


@given(st.integers(1, 4), st.integers(6, 14))
def test_ball_covering_posts(r, N):
    ws = line(0, N)
    c = ball_covering(ws, float(r))
    c.check(ws.n)
    assert max(c.diameters(ws)) <= 2 * r
