"""Simplicial complexes, nerves, group actions on them, subdivision and regularity."""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np

from .coverings import Covering, lebesgue_number  # noqa: F401  (re-export convenience)
from .errors import (NotRegular, NotSimplicial, PointCoveredByNoSet,
                     RegularityNotReachedAfterTwo)
from .metric import GroupSpec, IsometricAction, WindowedSpace

DEFAULT_MAX_DIM = 6


class SimplicialComplex:
    """Finite abstract simplicial complex on vertices 0..nverts-1.

    ``simplices[d]`` is a sorted list of sorted vertex tuples of size d+1 and
    ``index[d]`` maps each tuple to its position.  ``truncated`` records that
    simplices above ``max_dim`` were dropped.
    """

    def __init__(self, simplices_by_dim, nverts: int, truncated: bool = False,
                 max_dim: int | None = None):
        sims = [sorted(set(level)) for level in simplices_by_dim]
        while sims and not sims[-1]:
            sims.pop()
        self.simplices = sims
        self.index = [{s: i for i, s in enumerate(level)} for level in sims]
        self.nverts = nverts
        self.truncated = truncated
        self.max_dim = max_dim

    @classmethod
    def from_generators(cls, gens, nverts: int | None = None, max_dim: int | None = DEFAULT_MAX_DIM):
        gens = {tuple(sorted(g)) for g in gens if len(g)}
        top = max((len(g) for g in gens), default=0)
        cap = top if max_dim is None else min(top, max_dim + 1)
        truncated = max_dim is not None and top > max_dim + 1
        levels = [set() for _ in range(cap)]
        for g in gens:
            for k in range(1, min(len(g), cap) + 1):
                levels[k - 1].update(combinations(g, k))
        if nverts is None:
            nverts = (max(v for (v,) in levels[0]) + 1) if levels and levels[0] else 0
        return cls(levels, nverts, truncated, max_dim)

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    def __contains__(self, s) -> bool:
        s = tuple(s)
        d = len(s) - 1
        return 0 <= d < len(self.index) and s in self.index[d]

    def count(self, d: int | None = None) -> int:
        if d is None:
            return sum(len(x) for x in self.simplices)
        return len(self.simplices[d]) if 0 <= d < len(self.simplices) else 0

    def f_vector(self) -> list:
        return [len(x) for x in self.simplices]

    def all_simplices(self):
        for level in self.simplices:
            yield from level

    def vertices(self) -> list:
        return [v for (v,) in self.simplices[0]] if self.simplices else []

    def subcomplex(self, keep) -> "SimplicialComplex":
        """Simplices satisfying the predicate ``keep`` (caller guarantees closure)."""
        return SimplicialComplex([[s for s in level if keep(s)] for level in self.simplices],
                                 self.nverts, self.truncated, self.max_dim)

    def full_subcomplex(self, verts) -> "SimplicialComplex":
        vs = set(int(v) for v in verts)
        return self.subcomplex(lambda s: all(v in vs for v in s))

    def is_subcomplex_of(self, other: "SimplicialComplex") -> bool:
        return all(s in other for s in self.all_simplices())

    def check_closed(self):
        for level in self.simplices[1:]:
            for s in level:
                for i in range(len(s)):
                    if s[:i] + s[i + 1:] not in self:
                        raise NotSimplicial(f"face of {s} missing")

    def chain_euler(self) -> int:
        return sum((-1) ** d * len(x) for d, x in enumerate(self.simplices))

    def to_json(self) -> list:
        return [list(s) for s in self.all_simplices()]


def empty_complex(nverts: int = 0) -> SimplicialComplex:
    return SimplicialComplex([], nverts)


class GComplex:
    """Simplicial complex with a group acting through vertex permutations.

    ``carrier[v]`` is the vertex set of the base complex carrying v (after
    subdivisions), and ``parent[v]`` the simplex of the previous complex
    that v subdivides.
    """

    def __init__(self, complex: SimplicialComplex, group: GroupSpec, vperm,
                 carrier=None, parent=None, subdivisions: int = 0, base=None):
        self.complex = complex
        self.group = group
        self.vperm = np.asarray(vperm, dtype=int).reshape(group.order, complex.nverts)
        self.regularity = None
        self.carrier = carrier if carrier is not None else [frozenset([v]) for v in range(complex.nverts)]
        self.parent = parent
        self.subdivisions = subdivisions
        self.base = base if base is not None else complex
        self._sperm = {}
        for g in range(group.order):
            for s in complex.all_simplices():
                if self.act(g, s) not in complex:
                    raise NotSimplicial(f"element {group.names[g]} maps {s} outside the complex")

    @property
    def K(self) -> SimplicialComplex:
        return self.complex

    def act(self, g: int, s) -> tuple:
        P = self.vperm[g]
        return tuple(sorted(int(P[v]) for v in s))

    def simplex_perm(self, d: int) -> np.ndarray:
        """perm[g][i] = index of g * simplices[d][i]."""
        if d not in self._sperm:
            K = self.complex
            out = np.empty((self.group.order, K.count(d)), dtype=int)
            idx = K.index[d]
            for g in range(self.group.order):
                for i, s in enumerate(K.simplices[d]):
                    out[g, i] = idx[self.act(g, s)]
            self._sperm[d] = out
        return self._sperm[d]

    def fixed_vertices(self, sub=None) -> list:
        els = range(self.group.order) if sub is None else sub
        return [v for v in range(self.complex.nverts)
                if all(self.vperm[g, v] == v for g in els)]

    def is_invariant(self, L: SimplicialComplex) -> bool:
        return all(self.act(g, s) in L for g in range(self.group.order) for s in L.all_simplices())

    def from_base(self, S: SimplicialComplex) -> SimplicialComplex:
        """The subdivision of a base subcomplex S, as a subcomplex of this complex."""
        if self.subdivisions == 0:
            return SimplicialComplex(S.simplices, self.complex.nverts, S.truncated, S.max_dim)
        car = self.carrier

        def keep(s):
            u = frozenset().union(*(car[v] for v in s))
            return tuple(sorted(u)) in S
        return self.complex.subcomplex(keep)

    def restricted_to(self, elements) -> "GComplex":
        els = sorted(elements)
        pos = {g: i for i, g in enumerate(els)}
        M = [[pos[int(self.group.mult[a, b])] for b in els] for a in els]
        G = GroupSpec(M, pos[self.group.identity], [self.group.names[g] for g in els])
        out = GComplex(self.complex, G, self.vperm[els], self.carrier, self.parent,
                       self.subdivisions, self.base)
        return out


def trivial_gcomplex(K: SimplicialComplex) -> GComplex:
    return GComplex(K, GroupSpec([[0]], 0, ["e"]), [list(range(K.nverts))])


# nerves -----------------------------------------------------------------

class Nerve:
    """Nerve of a covering together with the per-point membership tuples."""

    def __init__(self, cov: Covering, npoints: int, max_dim: int | None = DEFAULT_MAX_DIM,
                 group: GroupSpec | None = None):
        self.covering = cov
        self.membership = cov.membership(npoints)
        self.max_dim = max_dim
        self.complex = SimplicialComplex.from_generators(self.membership, len(cov), max_dim)
        self.gcomplex = None
        if group is not None and cov.index_perm is not None:
            self.gcomplex = GComplex(self.complex, group, cov.index_perm)

    def restrict(self, A) -> SimplicialComplex:
        """K(U|A): simplices whose sets share a point of A."""
        gens = [self.membership[int(x)] for x in A]
        return SimplicialComplex.from_generators(gens, len(self.covering), self.max_dim)


def nerve(c: Covering, npoints: int, max_dim: int | None = DEFAULT_MAX_DIM,
          group: GroupSpec | None = None) -> Nerve:
    return Nerve(c, npoints, max_dim, group)


def restrict_nerve(c: Covering, npoints: int, A, max_dim: int | None = DEFAULT_MAX_DIM) -> SimplicialComplex:
    return Nerve(c, npoints, max_dim).restrict(A)


def fixed_subcomplex(K: GComplex, require_regular: bool = True, sub=None) -> SimplicialComplex:
    if require_regular and K.regularity != "Regular":
        if check_regularity(K)[0] != "Regular":
            raise NotRegular("fixed subcomplex requested on a non-regular complex")
    return K.complex.full_subcomplex(K.fixed_vertices(sub))


def fixed_r(K: GComplex, restricted: SimplicialComplex) -> SimplicialComplex:
    """K^G intersected with an already restricted nerve K(U|A_r)."""
    KG = fixed_subcomplex(K)
    return KG.subcomplex(lambda s: s in restricted)


# regularity ---------------------------------------------------------------

def _check_B(K: GComplex):
    edges = K.complex.index[1] if K.complex.dim >= 1 else {}
    for g in range(K.group.order):
        P = K.vperm[g]
        for v in range(K.complex.nverts):
            w = int(P[v])
            if w != v and (min(v, w), max(v, w)) in edges:
                return (K.group.names[g], v, w)
    return None


def _check_A(K: GComplex):
    C = K.complex
    G = K.group
    for H in G.subgroups():
        if len(H) == 1:
            continue
        H = sorted(H)
        Hperm = K.vperm[H]
        for level in C.simplices[1:]:
            for s in level:
                # images w_i in the H-orbit of v_i; w_0 = v_0 without loss
                def dfs(i, ws, consistent):
                    if not consistent:
                        return (s, tuple(ws))
                    if i == len(s):
                        return None
                    v = s[i]
                    for w in sorted(set(int(x) for x in Hperm[:, v])):
                        cand = tuple(sorted(ws + [w]))
                        if len(set(cand)) != len(cand) or cand not in C:
                            continue
                        cons = [h for h in consistent if Hperm[h, v] == w]
                        r = dfs(i + 1, ws + [w], cons)
                        if r is not None:
                            return r
                    return None
                start = [h for h in range(len(H)) if Hperm[h, s[0]] == s[0]]
                bad = dfs(1, [s[0]], start)
                if bad is not None:
                    return (tuple(G.names[h] for h in H), bad)
    return None


def check_regularity(K: GComplex):
    """Strongest of None / "B" / "Regular" satisfied, with a counterexample if any."""
    if K.group.order == 1:
        K.regularity = "Regular"
        return "Regular", None
    wb = _check_B(K)
    if wb is not None:
        K.regularity = None
        return None, ("B", wb)
    wa = _check_A(K)
    if wa is not None:
        K.regularity = "B"
        return "B", ("A", wa)
    K.regularity = "Regular"
    return "Regular", None


# subdivision ----------------------------------------------------------------

def _chains(C: SimplicialComplex):
    """All chains s_0 < s_1 < ... of faces, as tuples of (dim, index) pairs."""
    memo = {}

    def ending(s):
        if s in memo:
            return memo[s]
        d = len(s) - 1
        me = (d, C.index[d][s])
        out = [(me,)]
        for k in range(1, len(s)):
            for f in combinations(s, k):
                for ch in ending(f):
                    out.append(ch + (me,))
        memo[s] = out
        return out

    for level in C.simplices:
        for s in level:
            yield from ending(s)


def barycentric_subdivision(K):
    """First barycentric subdivision of a SimplicialComplex or GComplex."""
    G = K if isinstance(K, GComplex) else None
    C = K.complex if G else K
    offs, vid = [0], {}
    for d, level in enumerate(C.simplices):
        offs.append(offs[-1] + len(level))
    parent = [s for level in C.simplices for s in level]
    for d, level in enumerate(C.simplices):
        for i, s in enumerate(level):
            vid[(d, i)] = offs[d] + i
    nv = offs[-1]
    by_dim = [[] for _ in range(len(C.simplices))]
    for ch in _chains(C):
        by_dim[len(ch) - 1].append(tuple(sorted(vid[x] for x in ch)))
    SD = SimplicialComplex(by_dim, nv, C.truncated, C.max_dim)
    if G is None:
        return SD
    index = {s: offs[len(s) - 1] + C.index[len(s) - 1][s] for s in parent}
    vperm = np.empty((G.group.order, nv), dtype=int)
    for g in range(G.group.order):
        for v, s in enumerate(parent):
            vperm[g, v] = index[G.act(g, s)]
    carrier = [frozenset().union(*(G.carrier[u] for u in s)) for s in parent]
    return GComplex(SD, G.group, vperm, carrier, parent, G.subdivisions + 1, G.base)


def regularize(K: GComplex) -> tuple[GComplex, int]:
    """Subdivide until the action is regular; returns (complex, number of subdivisions)."""
    cur = K
    for n in range(3):
        if check_regularity(cur)[0] == "Regular":
            return cur, n
        if n == 2:
            break
        cur = barycentric_subdivision(cur)
    raise RegularityNotReachedAfterTwo("action still not regular after two subdivisions")


# quotients and maps ----------------------------------------------------------

class SimplicialMap:
    def __init__(self, vertex_map, source: SimplicialComplex, target: SimplicialComplex,
                 check: bool = True):
        self.vertex_map = np.asarray(vertex_map, dtype=int)
        self.source = source
        self.target = target
        if check:
            self.check()

    def image(self, s) -> tuple:
        return tuple(sorted(set(int(self.vertex_map[v]) for v in s)))

    def check(self):
        for s in self.source.all_simplices():
            if self.image(s) not in self.target:
                raise NotSimplicial(f"{s} maps to non-simplex {self.image(s)}")

    def compose(self, other: "SimplicialMap") -> "SimplicialMap":
        """self after other."""
        return SimplicialMap(self.vertex_map[other.vertex_map], other.source, self.target, False)


def quotient_complex(K: GComplex):
    """(K/G, projection map, vertex orbits); requires a regular action."""
    if K.regularity != "Regular" and check_regularity(K)[0] != "Regular":
        raise NotRegular("quotient requires a regular action")
    nv = K.complex.nverts
    orb = np.full(nv, -1, dtype=int)
    orbits = []
    for v in range(nv):
        if orb[v] < 0:
            o = sorted(set(int(x) for x in K.vperm[:, v]))
            orb[o] = len(orbits)
            orbits.append(o)
    gens = {tuple(sorted(set(int(orb[v]) for v in s))) for s in K.complex.all_simplices()}
    Q = SimplicialComplex.from_generators(gens, len(orbits), None)
    Q.truncated, Q.max_dim = K.complex.truncated, K.complex.max_dim
    return Q, SimplicialMap(orb, K.complex, Q), orbits


def quotient_nerve_check(cov: Covering, nrv: Nerve, orbit_proj, n_orbit_points: int) -> bool:
    """Compare K(U)/G with the nerve of the orbit covering {G(U)/G}."""
    Q, _, vorbits = quotient_complex(nrv.gcomplex)
    sets = [np.unique(orbit_proj[cov.sets[o[0]]]) for o in vorbits]
    orbit_cov = Covering(sets, cov.scale, "Ball")
    QN = SimplicialComplex.from_generators(orbit_cov.membership(n_orbit_points), len(sets), nrv.max_dim)
    return QN.simplices == Q.simplices


def subdivide_map(f: SimplicialMap, src: GComplex | SimplicialComplex, src_sd, tgt_sd) -> SimplicialMap:
    """sd(f): the vertex (simplex s) goes to the vertex (simplex f(s))."""
    tp = {s: v for v, s in enumerate(tgt_sd.parent)}
    vm = np.array([tp[f.image(s)] for s in src_sd.parent], dtype=int)
    return SimplicialMap(vm, src_sd.complex, tgt_sd.complex)


# partitions of unity and star pullbacks -------------------------------------

def _inner_radii(cov: Covering, ws: WindowedSpace, exact: bool):
    m = ws.space
    diam = m.diameter()
    out = []
    for s in cov.sets:
        s = np.asarray(s, dtype=int)
        inside = np.zeros(m.n, dtype=bool)
        inside[s] = True
        comp = np.flatnonzero(~inside)
        f = m.dist_to_subset(comp, s) if len(comp) else np.full(len(s), diam)
        out.append({int(x): (Fraction(round(v)) if exact else float(v)) for x, v in zip(s, f)})
    return out


def partition_of_unity(cov: Covering, ws: WindowedSpace, a: IsometricAction | None = None) -> list:
    """Phi(x) as a dict set-id -> coordinate, for every point x."""
    exact = ws.space.exact
    f = _inner_radii(cov, ws, exact)
    n = ws.n
    mem = cov.membership(n)
    P = cov.index_perm if a is not None else None
    order = a.group.order if P is not None else 1
    out = []
    for x in range(n):
        if not mem[x]:
            raise PointCoveredByNoSet(f"point {x} lies in no covering set")
        raw = {}
        for u in range(len(cov)) if P is not None else mem[x]:
            if P is None:
                val = f[u].get(x, 0)
            else:
                val = sum(f[P[g, u]].get(int(a.perm[g][x]), 0) for g in range(order))
                val = val / order if not exact else Fraction(val, order)
            if val:
                raw[u] = val
        tot = sum(raw.values())
        if exact:
            out.append({u: Fraction(v) / tot for u, v in raw.items()})
        else:
            out.append({u: v / tot for u, v in raw.items() if v / tot > 1e-9})
    if P is not None:
        for g in range(order):
            for x in range(n):
                gx = int(a.perm[g][x])
                img = {int(P[g, u]): c for u, c in out[x].items()}
                tgt = out[gx]
                if exact:
                    assert img == tgt, "partition of unity must be equivariant"
                else:
                    assert set(img) == set(tgt) and all(abs(img[k] - tgt[k]) < 1e-6 for k in img)
    return out


def subdivision_coords(coords: dict, K: SimplicialComplex, exact: bool) -> dict:
    """Barycentric coordinates on K -> coordinates on sd(K) (keyed by simplex tuples)."""
    items = sorted(coords.items(), key=lambda kv: (-kv[1], kv[0]))
    out = {}
    m = len(items)
    for k in range(1, m + 1):
        nxt = items[k][1] if k < m else 0
        mu = k * (items[k - 1][1] - nxt)
        if (mu > 0) if exact else (mu > 1e-9):
            out[tuple(sorted(v for v, _ in items[:k]))] = mu
    return out


def star_pullback_covering(cov: Covering, ws: WindowedSpace, a: IsometricAction | None = None,
                           subdivisions: int = 2, max_dim: int | None = DEFAULT_MAX_DIM):
    """Covering by preimages of open vertex stars of the iterated subdivision of the nerve.

    Returns (covering, gcomplex of the subdivision, list of subdivision vertex ids used).
    """
    exact = ws.space.exact
    phi = partition_of_unity(cov, ws, a)
    nrv = Nerve(cov, ws.n, max_dim, a.group if a is not None else None)
    G = nrv.gcomplex if nrv.gcomplex is not None else trivial_gcomplex(nrv.complex)
    chain = [G]
    for _ in range(subdivisions):
        chain.append(barycentric_subdivision(chain[-1]))
    L = chain[-1]
    members = {}
    vids = [{s: v for v, s in enumerate(chain[lvl + 1].parent)} for lvl in range(subdivisions)]
    for x in range(ws.n):
        c = phi[x]
        for lvl in range(subdivisions):
            vid = vids[lvl]
            c = {vid[s]: val for s, val in subdivision_coords(c, chain[lvl].complex, exact).items()}
        for v in c:
            members.setdefault(v, []).append(x)
    used = sorted(members)
    sets = [np.array(members[v], dtype=int) for v in used]
    pos = {v: i for i, v in enumerate(used)}
    index_perm = None
    if a is not None:
        index_perm = np.array([[pos[int(L.vperm[g, v])] for v in used]
                               for g in range(a.group.order)], dtype=int)
    out = Covering(sets, cov.scale, "StarPullback", index_perm, labels=used)
    return out, L, used
