"""Shared generators for randomized equivariant complexes."""
from itertools import combinations

from hypothesis import strategies as st

from coarsesmith.complexes import GComplex, SimplicialComplex, regularize
from coarsesmith.metric import cyclic_group


def orbit_closed_complex(p, n_free, n_fixed, gens, max_simplices=40):
    """Z/p acting on n_free free orbits (vertices o*p+k) and n_fixed fixed vertices."""
    nv = n_free * p + n_fixed

    def act(k, v):
        if v >= n_free * p:
            return v
        o, i = divmod(v, p)
        return o * p + (i + k) % p
    faces = set()
    for g in gens:
        for k in range(p):
            img = tuple(sorted({act(k, v) for v in g}))
            for r in range(1, len(img) + 1):
                faces.update(combinations(img, r))
    if len(faces) > max_simplices:
        return None
    K = SimplicialComplex.from_generators(faces, nv, None)
    perm = [[act(k, v) for v in range(nv)] for k in range(p)]
    return GComplex(K, cyclic_group(p), perm)


@st.composite
def zp_complexes(draw, primes=(2, 3, 5), max_simplices=40):
    p = draw(st.sampled_from(primes))
    n_free = draw(st.integers(1, 3 if p < 5 else 2))
    n_fixed = draw(st.integers(0, 2))
    nv = n_free * p + n_fixed
    gens = draw(st.lists(st.lists(st.integers(0, nv - 1), min_size=1, max_size=3, unique=True),
                         min_size=1, max_size=4))
    K = orbit_closed_complex(p, n_free, n_fixed, gens, max_simplices)
    if K is None:
        K = orbit_closed_complex(p, n_free, n_fixed, [[0]], max_simplices)
    rel = draw(st.sets(st.integers(0, nv - 1), max_size=2))
    return p, K, rel


def regular_pair(K, rel_vertices):
    """Regularize K and return (K', L') with L' the invariant subcomplex spanned by rel orbits."""
    R, _ = regularize(K)
    orb = {int(w) for v in rel_vertices for w in K.vperm[:, v]}
    base = K.complex.full_subcomplex(sorted(orb))
    L = R.from_base(base) if base.count() else None
    return R, L
