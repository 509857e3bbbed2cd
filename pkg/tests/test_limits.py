import json

import numpy as np
import pytest

from coarsesmith import scenarios as S
from coarsesmith.coverings import system_from_levels
from coarsesmith.errors import BoundedFixedSetAbsent, NotStabilized, PreconditionFailed
from coarsesmith.fixed_sets import BoundedFixedSet, bounded_fixed_set
from coarsesmith.homology import HomologyRanks
from coarsesmith.limits import (FULL, REL_FRONTIER, CoarseHomologyEstimate, LevelTower, RunOptions, Selector,
                                bounded_fixed_homology, classify_sphere, direct_system, normal_series,
                                report_json, run_scenario, stabilized_ranks, sphere_series_check)
from coarsesmith.metric import FiniteMetricSpace, WindowedSpace, cyclic_group, klein_group


def tower_of(sc, **kw):
    return LevelTower(system_from_levels(sc.ws, sc.levels, sc.action), sc.max_dim, **kw)


def line_four_levels(N=128):
    C = np.arange(-N, N + 1)[:, None]
    sp = FiniteMetricSpace(coords=C, metric="linf")
    edge = N - np.abs(C[:, 0])
    ws = WindowedSpace(sp, np.flatnonzero(edge < 1), float(N), 1.0)
    levels = [S._lattice_cover(C, ws, N, r, r + 1, 1, None, "") for r in (1, 5, 21, N - 2)]
    return S.Scenario("line4", ws, None, levels, 1)


def test_one_level_system_is_rejected():
    sc = S.euclidean(1, 8, num_levels=1)
    ds = direct_system(tower_of(sc), REL_FRONTIER, 2)
    assert len(ds.levels) == 1 and ds.maps == []
    with pytest.raises(PreconditionFailed):
        stabilized_ranks(ds)


def test_line_with_four_levels():
    sc = line_four_levels()
    tw = tower_of(sc)
    assert len(tw) == 4
    est = stabilized_ranks(direct_system(tw, REL_FRONTIER, 3))
    assert est.certificate == "StableWindow" and est.table() == {1: 1} and est.stable_from == 0
    full = stabilized_ranks(direct_system(tw, FULL, 3))
    assert full.table() == {0: 1}


def test_reflection_fixed_system():
    sc = S.plane_reflection(8)
    est = stabilized_ranks(direct_system(tower_of(sc), Selector("FixedG"), 2))
    # the axis is a line, taken rel its two frontier ends
    assert est.certificate == "StableWindow" and est.table() == {1: 1}


def test_constant_system_stable_from_zero():
    sc = S.euclidean(2, 8)
    est = stabilized_ranks(direct_system(tower_of(sc), REL_FRONTIER, 2))
    assert est.stable_from == 0 and est.table() == {2: 1}


def test_bounded_fixed_homology_reflection():
    sc = S.plane_reflection(8)
    b = bounded_fixed_homology(tower_of(sc), sc.scales, 2)
    assert b.rho_check and b.estimate.table() == {1: 1}
    assert {k: v.table() for k, v in b.paths.items()} == {k: {1: 1} for k in b.paths}


def test_bounded_fixed_homology_rotation():
    sc = S.plane_rotation(16)
    b = bounded_fixed_homology(tower_of(sc), sc.scales, 3, density_cap=sc.density_cap)
    assert b.rho_check and b.estimate.table() == {0: 1}


def test_bounded_fixed_homology_needs_a_bounded_fixed_set():
    gp = S.goalposts(n_posts=6, ray=32.0)
    scan = bounded_fixed_set(gp.ws, gp.action, (0, 1), gp.scales)
    assert not isinstance(scan, BoundedFixedSet)
    with pytest.raises(BoundedFixedSetAbsent):
        bounded_fixed_homology(tower_of(S.plane_reflection(4)), gp.scales, 2, bfs=scan)


def test_classify_sphere():
    est = lambda t, c="StableWindow": CoarseHomologyEstimate(HomologyRanks(t, 2), 0, c)
    assert classify_sphere(est({2: 1})).dimension == 2
    # two disjoint half-planes rel frontier: rank 2 in degree 1, not a sphere
    v = classify_sphere(est({1: 2}))
    assert not v.is_coarse_sphere and v.dimension is None
    assert not classify_sphere(est({0: 1, 2: 1})).is_coarse_sphere
    with pytest.raises(NotStabilized):
        classify_sphere(est({2: 1}, "NotStabilized"))


def test_normal_series():
    assert normal_series(cyclic_group(2), 2) == [(0,), (0, 1)]
    assert [len(H) for H in normal_series(klein_group(), 2)] == [1, 2, 4]
    with pytest.raises(PreconditionFailed):
        normal_series(cyclic_group(6), 2)


def test_sphere_series_reflection_and_klein():
    sc = S.plane_reflection(8)
    r = sphere_series_check(tower_of(sc), 2, sc.scales, sc.density_cap)
    assert r.ok and [s[1] for s in r.stages] == [2, 1]
    sc = S.plane_double_reflection(8)
    r = sphere_series_check(tower_of(sc), 2, sc.scales, sc.density_cap)
    assert r.ok and [s[1] for s in r.stages] == [2, 1, 0]


def test_run_euclidean_line():
    rep = run_scenario(S.euclidean(1, 8))
    assert rep["exit_code"] == 0
    assert rep["sections"]["homology"]["table"] == {"1": 1}
    assert rep["sections"]["homology"]["sphere"]["dimension"] == 1


def test_run_goalposts_is_honest_negative():
    rep = run_scenario(S.goalposts())
    assert rep["exit_code"] == 3 and "NoneExists" in rep["honest_negatives"]
    assert rep["sections"]["fixed_sets"]["0,1"]["verdict"] == "NotStableInWindow"


def test_run_semidirect():
    rep = run_scenario(S.semidirect_swap(8))
    s = rep["sections"]
    assert rep["exit_code"] == 0
    assert s["homology"]["table"] == {"2": 1}
    assert s["bounded_fixed_homology"]["estimate"]["table"] == {"1": 1}
    assert s["euler"]["residual"] == 0


def test_report_is_deterministic():
    a = report_json(run_scenario(S.plane_reflection(8)))
    b = report_json(run_scenario(S.plane_reflection(8)))
    assert a == b
    assert json.loads(a)["schema"] == "coarsesmith-report/1"


def test_projection_rule_does_not_change_homology():
    sc = S.plane_reflection(8)
    t = [run_scenario(sc, RunOptions(rule=r))["sections"]["homology"]["table"] for r in ("first", "last")]
    assert t[0] == t[1] == {"2": 1}


def test_window_doubling_keeps_ranks():
    t = [run_scenario(S.euclidean(2, N))["sections"]["homology"]["table"] for N in (8, 16)]
    assert t[0] == t[1] == {"2": 1}
