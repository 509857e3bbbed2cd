"""Chain complexes over F_q, homology ranks, cycle representatives and induced maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexes import SimplicialComplex, SimplicialMap
from .errors import (FrontierEmptyForUnboundedModel, IdentityFailure, NotASubcomplex,
                     NotSimplicial, TruncationMasksTopDegree)
from .linalg import Echelon, axpy, check_prime, dense_rank, reduce_columns, to_dense

def sort_sign(vs) -> tuple[tuple, int]:
    """Sorted tuple and the parity sign of the sorting permutation (0 if repeated)."""
    vs = list(vs)
    if len(set(vs)) != len(vs):
        return tuple(sorted(vs)), 0
    sign = 1
    a = vs[:]
    for i in range(len(a)):
        for j in range(len(a) - 1 - i):
            if a[j] > a[j + 1]:
                a[j], a[j + 1] = a[j + 1], a[j]
                sign = -sign
    return tuple(a), sign


@dataclass
class HomologyRanks:
    ranks: dict
    field: int
    truncated_above: int | None = None

    def rank(self, d: int) -> int:
        return self.ranks.get(d, 0)

    def table(self) -> dict:
        """Nonzero ranks only."""
        return {d: r for d, r in sorted(self.ranks.items()) if r}

    def to_json(self) -> dict:
        out = {"field": self.field, "ranks": {str(d): r for d, r in sorted(self.ranks.items())}}
        if self.truncated_above is not None:
            out["truncated_above"] = self.truncated_above
        return out


class ChainComplex:
    """Finite chain complex: ``dims[d]`` and sparse boundary columns ``bd[d]`` (C_d -> C_{d-1}).

    ``basis[d]`` optionally names the basis elements (simplices for simplicial
    complexes).  ``reliable_top`` is the highest degree whose homology is
    trustworthy (below a truncation of the underlying complex).
    """

    def __init__(self, dims, bd, p: int, basis=None, reliable_top=None, check=True):
        self.dims = list(dims)
        self.bd = bd
        self.p = p
        self.basis = basis
        self.reliable_top = reliable_top
        self._H = None
        if check:
            self.check_d2()

    @property
    def top(self) -> int:
        return len(self.dims) - 1

    def column(self, d: int, j: int) -> dict:
        return self.bd[d][j] if 0 < d <= self.top else {}

    def boundary(self, d: int, v: dict) -> dict:
        out = {}
        if d <= 0 or d > self.top:
            return out
        for j, c in v.items():
            axpy(out, c, self.bd[d][j], self.p)
        return out

    def check_d2(self):
        for d in range(2, self.top + 1):
            for j, col in enumerate(self.bd[d]):
                if self.boundary(d - 1, col):
                    raise IdentityFailure(f"boundary squared nonzero at degree {d}, column {j}")

    def homology(self) -> "Homology":
        if self._H is None:
            self._H = Homology(self)
        return self._H

    def euler(self) -> int:
        return sum((-1) ** d * n for d, n in enumerate(self.dims))


def chain_complex(K: SimplicialComplex, L: SimplicialComplex | None, q: int,
                  check: bool = True) -> ChainComplex:
    """Relative simplicial chains C(K, L) over F_q with sorted-vertex orientation."""
    q = check_prime(q)
    if L is not None:
        for s in L.all_simplices():
            if s not in K:
                raise NotASubcomplex(f"{s} is in L but not in K")
    inL = (lambda s: s in L) if L is not None else (lambda s: False)
    basis, pos = [], []
    for level in K.simplices:
        b = [s for s in level if not inL(s)]
        basis.append(b)
        pos.append({s: i for i, s in enumerate(b)})
    bd = [[]]
    for d in range(1, len(basis)):
        cols = []
        P = pos[d - 1]
        for s in basis[d]:
            col = {}
            for i in range(len(s)):
                j = P.get(s[:i] + s[i + 1:])
                if j is not None:
                    col[j] = (-1) ** i % q
            cols.append(col)
        bd.append(cols)
    reliable = K.max_dim - 1 if (K.truncated and K.max_dim is not None) else None
    return ChainComplex([len(b) for b in basis], bd, q, basis, reliable, check)


class Homology:
    """Lazy per-degree reductions with cycle representatives and coordinates."""

    def __init__(self, cc: ChainComplex):
        self.cc = cc
        self.p = cc.p
        self._R = {}      # d -> (R, pivot_of_low, V), untracked
        self._RV = {}     # same with V tracked
        self._ess = {}    # d -> list of essential column indices
        self._basis = {}  # d -> dict low -> (normalized vector, essential position or -1)
        self._ranks = None

    def _reduce(self, d: int, track: bool):
        store = self._RV if track else self._R
        if d in store:
            return store[d]
        if not track and d in self._RV:
            return self._RV[d]
        cc = self.cc
        if d <= 0 or d > cc.top:
            n = cc.dims[d] if 0 <= d <= cc.top else 0
            res = ([{} for _ in range(n)], {}, [None] * n)
        else:
            clear = set(self._reduce(d + 1, False)[1]) if d + 1 <= cc.top else set()
            res = reduce_columns(cc.bd[d], self.p, clear, track)
        store[d] = res
        return res

    def ranks(self) -> HomologyRanks:
        if self._ranks is None:
            cc = self.cc
            r = {}
            for d in range(cc.top, -1, -1):
                rk_out = len(self._reduce(d, False)[1])
                rk_in = len(self._reduce(d + 1, False)[1]) if d + 1 <= cc.top else 0
                r[d] = cc.dims[d] - rk_out - rk_in
            top = cc.reliable_top
            if top is not None:
                r = {d: v for d, v in r.items() if d <= top}
            self._ranks = HomologyRanks(dict(sorted(r.items())), self.p, top)
        return self._ranks

    def essential(self, d: int) -> list:
        """Column indices j of degree-d basis giving homology generators."""
        if d not in self._ess:
            cc = self.cc
            if d < 0 or d > cc.top:
                self._ess[d] = []
                return []
            R, _, _ = self._reduce(d, False)
            lows_above = set(self._reduce(d + 1, False)[1].keys()) if d + 1 <= cc.top else set()
            self._ess[d] = [j for j in range(cc.dims[d]) if not R[j] and j not in lows_above]
        return self._ess[d]

    def cycle(self, d: int, k: int) -> dict:
        """The k-th generator as a chain (sparse vector over the degree-d basis)."""
        j = self.essential(d)[k]
        if d == 0:
            return {j: 1}
        return self._reduce(d, True)[2][j]

    def _zbasis(self, d: int) -> dict:
        if d not in self._basis:
            p = self.p
            B = {}
            if d + 1 <= self.cc.top:
                Rn, pivn, _ = self._reduce(d + 1, False)
                for low, k in pivn.items():
                    col = Rn[k]
                    inv = pow(col[low], -1, p)
                    B[low] = ({i: (c * inv) % p for i, c in col.items()}, -1, 0)
            for pos, j in enumerate(self.essential(d)):
                z = self.cycle(d, pos)
                inv = pow(z[j], -1, p)
                B[j] = ({i: (c * inv) % p for i, c in z.items()}, pos, inv)
            self._basis[d] = B
        return self._basis[d]

    def coordinates(self, d: int, z: dict) -> np.ndarray:
        """Homology class of the cycle z in the generator basis of degree d."""
        p = self.p
        out = np.zeros(len(self.essential(d)), dtype=np.int64)
        if d < 0 or d > self.cc.top:
            return out
        B = self._zbasis(d)
        r = dict(z)
        while r:
            low = max(r)
            e = B.get(low)
            if e is None:
                raise IdentityFailure(f"chain is not a cycle in degree {d}")
            c = r[low]
            axpy(r, -c, e[0], p)
            if e[1] >= 0:
                out[e[1]] = (out[e[1]] + c * e[2]) % p
        return out

    def is_boundary(self, d: int, z: dict) -> bool:
        return not np.any(self.coordinates(d, z))


def homology_ranks(cc: ChainComplex) -> HomologyRanks:
    return cc.homology().ranks()


def dense_homology_ranks(cc: ChainComplex) -> HomologyRanks:
    """Independent oracle: dense Gaussian elimination of every boundary matrix."""
    rk = [0] * (cc.top + 2)
    for d in range(1, cc.top + 1):
        rk[d] = dense_rank(to_dense(cc.bd[d], cc.dims[d - 1]), cc.p)
    r = {d: cc.dims[d] - rk[d] - rk[d + 1] for d in range(cc.top + 1)}
    if cc.reliable_top is not None:
        r = {d: v for d, v in r.items() if d <= cc.reliable_top}
    return HomologyRanks(r, cc.p, cc.reliable_top)


def lf_homology(K: SimplicialComplex, frontier_sub: SimplicialComplex | None, q: int,
                bounded: bool = False) -> HomologyRanks:
    """Window homology rel the frontier sub-nerve (stands in for locally finite homology)."""
    if not bounded and (frontier_sub is None or frontier_sub.count() == 0):
        raise FrontierEmptyForUnboundedModel("unbounded model needs a nonempty frontier")
    return homology_ranks(chain_complex(K, frontier_sub, q))


def euler_characteristic(h: HomologyRanks) -> int:
    if h.truncated_above is not None and h.rank(h.truncated_above):
        raise TruncationMasksTopDegree(
            f"degree {h.truncated_above} has rank {h.rank(h.truncated_above)} at the truncation edge")
    return sum((-1) ** d * r for d, r in h.ranks.items())


# maps ---------------------------------------------------------------------

def simplicial_chain_map(f: SimplicialMap, src: ChainComplex, tgt: ChainComplex):
    """Per-degree function sending a source chain to a target chain."""
    p = src.p
    tpos = [{s: i for i, s in enumerate(b)} for b in tgt.basis]

    def apply(d: int, v: dict) -> dict:
        out = {}
        if d > tgt.top:
            return out
        for j, c in v.items():
            s = src.basis[d][j]
            img, sign = sort_sign(int(f.vertex_map[x]) for x in s)
            if sign == 0:
                continue
            if len(img) - 1 != d:
                continue
            i = tpos[d].get(img)
            if i is None:
                if img not in f.target:
                    raise NotSimplicial(f"{s} maps to non-simplex {img}")
                continue   # lands in the relative subcomplex
            nv = (out.get(i, 0) + sign * c) % p
            if nv:
                out[i] = nv
            else:
                out.pop(i, None)
        return out
    return apply


@dataclass
class InducedMap:
    source: HomologyRanks
    target: HomologyRanks
    matrices: dict     # d -> (target rank x source rank) int array

    def rank(self, d: int) -> int:
        M = self.matrices.get(d)
        if M is None or M.size == 0:
            return 0
        return dense_rank(M, self.source.field)

    def is_iso(self, d: int) -> bool:
        a, b = self.source.rank(d), self.target.rank(d)
        return a == b and self.rank(d) == a


def map_on_homology(apply, src: ChainComplex, tgt: ChainComplex, degrees=None) -> InducedMap:
    Hs, Ht = src.homology(), tgt.homology()
    rs, rt = Hs.ranks(), Ht.ranks()
    mats = {}
    for d in (degrees if degrees is not None else rs.ranks.keys()):
        ns, nt = rs.rank(d), rt.rank(d) if d in rt.ranks else 0
        M = np.zeros((nt, ns), dtype=np.int64)
        for k in range(ns):
            img = apply(d, Hs.cycle(d, k))
            if d in rt.ranks:
                M[:, k] = Ht.coordinates(d, img)
            else:
                M = np.zeros((0, ns), dtype=np.int64)
        mats[d] = M
    return InducedMap(rs, rt, mats)


def induced_map(f: SimplicialMap, src: ChainComplex, tgt: ChainComplex, degrees=None) -> InducedMap:
    return map_on_homology(simplicial_chain_map(f, src, tgt), src, tgt, degrees)


# embedded subcomplexes ------------------------------------------------------

class EmbeddedComplex:
    """A sub-chain-complex of an ambient complex, spanned by given vectors per degree."""

    def __init__(self, ambient: ChainComplex, spanning: list, check: bool = True):
        p = ambient.p
        self.ambient = ambient
        self.p = p
        self.ech = []
        for d, vecs in enumerate(spanning):
            E = Echelon(p)
            for v in vecs:
                E.add(v)
            self.ech.append(E)
        self.lows = [sorted(E.rows) for E in self.ech]
        self.local = [{low: i for i, low in enumerate(ls)} for ls in self.lows]
        bd = [[]]
        for d in range(1, len(self.ech)):
            cols = []
            for low in self.lows[d]:
                b = ambient.boundary(d, self.ech[d].rows[low])
                cols.append(self.to_local(d - 1, b))
            bd.append(cols)
        self.cc = ChainComplex([len(x) for x in self.lows], bd, p, None, ambient.reliable_top, check)

    def to_local(self, d: int, v: dict) -> dict:
        if d < 0 or d >= len(self.ech):
            if v:
                raise IdentityFailure("vector outside the embedded complex")
            return {}
        try:
            c = self.ech[d].coords(v)
        except ValueError:
            raise IdentityFailure(f"subspace not closed under the boundary in degree {d}")
        return {self.local[d][low]: x for low, x in c.items()}

    def to_ambient(self, d: int, v: dict) -> dict:
        out = {}
        for i, c in v.items():
            axpy(out, c, self.ech[d].rows[self.lows[d][i]], self.p)
        return out

    def contains(self, d: int, v: dict) -> bool:
        return d < len(self.ech) and self.ech[d].contains(v)
