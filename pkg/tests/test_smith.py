import pytest
from hypothesis import given, settings

from helpers import regular_pair, zp_complexes
from coarsesmith import scenarios as S
from coarsesmith.complexes import GComplex, SimplicialComplex, fixed_subcomplex, quotient_complex, regularize
from coarsesmith.errors import NotCyclicOfOrderP, NotRegular
from coarsesmith.homology import chain_complex, homology_ranks
from coarsesmith.metric import cyclic_group
from coarsesmith.smith import (_ring_mul, euler_congruence_check, exact_triangle_check, orbit_iso_check,
                               second_sequence_check, sigma, smith_inequalities_check,
                               smith_inequality_from_ranks, smith_operators, special_homology,
                               special_subcomplex, tau_power, transfer_maps)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_operator_identities(p):
    ops = smith_operators(cyclic_group(p), p, 1)
    assert set(ops) == {"sigma"} | {f"tau^{j}" for j in range(1, p)}
    assert ops["sigma"].coeffs == [1] * p
    assert ops["tau^1"].coeffs == [1, p - 1] + [0] * (p - 2)
    for j in range(1, p):
        t = tau_power(p, j, 1)
        assert _ring_mul(t.coeffs, t.complement().coeffs, p) == [0] * p


def test_operator_needs_order_p():
    with pytest.raises(NotCyclicOfOrderP):
        smith_operators(cyclic_group(4), 2, 1)


def discrete_orbit(p):
    K = SimplicialComplex.from_generators([(i,) for i in range(p)], p)
    return GComplex(K, cyclic_group(p), [[(v + k) % p for v in range(p)] for k in range(p)])


@pytest.mark.parametrize("p", [2, 3, 5])
def test_free_orbit_special_ranks(p):
    K = discrete_orbit(p)
    assert special_homology(special_subcomplex(K, None, sigma(p, 1))).table() == {0: 1}
    assert special_homology(special_subcomplex(K, None, tau_power(p, 1, 1))).table() == {0: p - 1}


def free_triangle():
    R, _ = regularize(S.free_circle(3))
    return R


def test_free_circle_triangle():
    K = free_triangle()
    rep = exact_triangle_check(K, None, sigma(3, 1))
    assert rep.ok
    assert {d: v for d, v in rep.ranks_total.items() if v} == {0: 1, 1: 1}
    assert not any(rep.ranks_fixed.values())
    assert {d: v for d, v in rep.ranks_rho.items() if v} == {0: 1, 1: 1}
    assert all(m >= 0 for *_, m in smith_inequalities_check(K, None, sigma(3, 1), report=rep))


def test_free_circle_orbit_iso_and_sequences():
    K = free_triangle()
    o = orbit_iso_check(K, None, 3)
    assert o.ok and {d: v for d, v in o.sigma_ranks.items() if v} == {0: 1, 1: 1}
    sec = second_sequence_check(K, None, 3, 1)
    assert sec["ok"]
    t = transfer_maps(K, None, 5)
    assert t.iso_checked and t.iso_ok and t.ok


def test_transfer_in_characteristic_p_skips_iso():
    t = transfer_maps(free_triangle(), None, 3)
    assert not t.iso_checked and t.iso_ok is None and t.ok


def test_edge_swap():
    K = GComplex(SimplicialComplex.from_generators([(0, 1)], 2), cyclic_group(2), [[0, 1], [1, 0]])
    with pytest.raises(NotRegular):
        exact_triangle_check(K, None, sigma(2, 1))
    R, _ = regularize(K)
    rep = exact_triangle_check(R, None, sigma(2, 1))
    assert rep.ok and {d: v for d, v in rep.ranks_fixed.items() if v} == {0: 1}
    assert transfer_maps(R, None, 3).iso_ok


def reflection_level(n=0):
    from coarsesmith.complexes import nerve
    sc = S.plane_reflection(4)
    nv = nerve(sc.levels[n], sc.ws.n, group=sc.action.group)
    R, _ = regularize(nv.gcomplex)
    return R


@pytest.mark.parametrize("q", [2, 3])
def test_reflection_level(q):
    K = reflection_level()
    if q == 2:
        assert exact_triangle_check(K, None, sigma(2, 1)).ok
        assert orbit_iso_check(K, None, 2).ok
    else:
        assert transfer_maps(K, None, 3).ok


def test_inequality_from_ranks_margins():
    rows = smith_inequality_from_ranks({0: 1}, {0: 1}, {0: 1, 1: 1})
    assert rows == [(0, 2, 2, 0), (1, 0, 1, 1)]


def euler_of(K, L, p):
    hX = homology_ranks(chain_complex(K.complex, L, p))
    KG = fixed_subcomplex(K)
    LG = L.subcomplex(lambda s: s in KG) if L is not None else None
    hF = homology_ranks(chain_complex(KG, LG, p)) if KG.count() else homology_ranks(
        chain_complex(SimplicialComplex.from_generators([], 0), None, p))
    Q, proj, _ = quotient_complex(K)
    img = {tuple(sorted({int(proj.vertex_map[v]) for v in s})) for s in L.all_simplices()} if L else set()
    hQ = homology_ranks(chain_complex(Q, Q.subcomplex(lambda t: t in img) if L else None, p))
    return euler_congruence_check(hX, hF, hQ, p)


def test_euler_examples():
    assert euler_of(free_triangle(), None, 3).ok
    e = euler_of(reflection_level(), None, 2)
    assert e.ok and e.residual == 0


@settings(max_examples=50)
@given(zp_complexes())
def test_random_regular_complexes(data):
    p, K0, rel = data
    K, L = regular_pair(K0, rel)
    g = 1
    for op in smith_operators(K.group, p, g).values():
        rep = exact_triangle_check(K, L, op)
        assert rep.ok
        assert all(m >= 0 for *_, m in smith_inequalities_check(K, L, op, report=rep))
    assert orbit_iso_check(K, L, p).ok
    assert second_sequence_check(K, L, p, g)["ok"]
    q = 2 if p != 2 else 3
    assert transfer_maps(K, L, q).ok
    assert euler_of(K, L, p).ok
