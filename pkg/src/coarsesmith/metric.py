"""Finite metric models, finite groups acting by isometries, orbit spaces."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import (EmptySubsetOfNonemptySpace, GroupLawViolation, InvalidAction,
                     NegativeDistance, NonSquareMatrix, NonSymmetricGenerators,
                     NotAPermutation)

TOL_EXACT = 1e-9
TOL_FLOAT = 1e-6

_MINKOWSKI = {"l1": 1, "l2": 2, "linf": np.inf}


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)
    note: str = ""

    def __bool__(self):
        return self.ok


class FiniteMetricSpace:
    """A finite metric space.

    Either an explicit distance matrix (``dist``) or coordinates together
    with a Minkowski metric name (``metric`` in l1/l2/linf).  Coordinate
    spaces never materialise the full matrix; ball and distance-to-subset
    queries go through a KD-tree instead.
    """

    def __init__(self, points=None, dist=None, coords=None, metric="matrix",
                 label="", exact=None):
        if dist is None and coords is None:
            raise ValueError("need dist or coords")
        if dist is not None:
            D = np.asarray(dist, dtype=float)
            if D.ndim != 2 or D.shape[0] != D.shape[1]:
                raise NonSquareMatrix(f"distance matrix has shape {D.shape}")
            if not np.all(np.isfinite(D)):
                raise NonSquareMatrix("distance matrix has non-finite entries")
            if np.any(D < 0):
                i, j = np.argwhere(D < 0)[0]
                raise NegativeDistance(f"d({i},{j}) = {D[i, j]}")
            self.dist = D
            self.coords = None
            self.metric = "matrix"
            n = D.shape[0]
        else:
            C = np.asarray(coords, dtype=float)
            if C.ndim == 1:
                C = C[:, None]
            if metric not in _MINKOWSKI:
                raise ValueError(f"unknown metric {metric!r}")
            self.coords = C
            self.dist = None
            self.metric = metric
            n = C.shape[0]
        self.n = n
        self.points = list(points) if points is not None else list(range(n))
        self.label = label
        if exact is None:
            vals = self.dist if self.dist is not None else self.coords
            exact = bool(np.all(np.abs(vals - np.round(vals)) == 0)) and self.metric != "l2"
        self.exact = exact
        self._tree = None

    # basic queries -----------------------------------------------------
    @property
    def tol(self) -> float:
        return TOL_EXACT if self.exact else TOL_FLOAT

    @property
    def tree(self):
        if self._tree is None and self.coords is not None:
            self._tree = cKDTree(self.coords)
        return self._tree

    def d(self, i: int, j: int) -> float:
        if self.dist is not None:
            return float(self.dist[i, j])
        diff = np.abs(self.coords[i] - self.coords[j])
        return float(np.linalg.norm(diff, ord=_MINKOWSKI[self.metric]))

    def row(self, i: int, idx=None) -> np.ndarray:
        """Distances from point i to all points (or to ``idx``)."""
        if self.dist is not None:
            r = self.dist[i]
            return r if idx is None else r[np.asarray(idx, dtype=int)]
        C = self.coords if idx is None else self.coords[np.asarray(idx, dtype=int)]
        diff = np.abs(C - self.coords[i])
        return np.linalg.norm(diff, ord=_MINKOWSKI[self.metric], axis=1)

    def ball(self, i: int, r: float) -> np.ndarray:
        if self.dist is not None:
            return np.flatnonzero(self.dist[i] <= r + self.tol)
        idx = self.tree.query_ball_point(self.coords[i], r + self.tol,
                                         p=_MINKOWSKI[self.metric])
        return np.array(sorted(idx), dtype=int)

    def dist_to_subset(self, subset, targets=None) -> np.ndarray:
        """min over s in subset of d(x, s), for x in targets (default: all)."""
        subset = np.asarray(subset, dtype=int)
        tg = np.arange(self.n) if targets is None else np.asarray(targets, dtype=int)
        if len(subset) == 0:
            return np.full(len(tg), np.inf)
        if self.dist is not None:
            return self.dist[np.ix_(tg, subset)].min(axis=1)
        t = cKDTree(self.coords[subset])
        dd, _ = t.query(self.coords[tg], k=1, p=_MINKOWSKI[self.metric])
        return np.asarray(dd, dtype=float)

    def diameter(self, subset=None) -> float:
        idx = np.arange(self.n) if subset is None else np.asarray(subset, dtype=int)
        if len(idx) <= 1:
            return 0.0
        if self.dist is not None:
            return float(self.dist[np.ix_(idx, idx)].max())
        C = self.coords[idx]
        if self.metric == "linf":
            return float((C.max(axis=0) - C.min(axis=0)).max())
        if self.metric == "l1" and len(idx) > 4000:
            # exact via the four-corner trick generalised: max over sign vectors
            best = 0.0
            for signs in product((1, -1), repeat=C.shape[1]):
                s = C @ np.array(signs)
                best = max(best, float(s.max() - s.min()))
            return best
        return float(pdist(C, metric={"l1": "cityblock", "l2": "euclidean"}[self.metric]).max())

    def submatrix(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=int)
        if self.dist is not None:
            return self.dist[np.ix_(idx, idx)]
        C = self.coords[idx]
        return np.linalg.norm(np.abs(C[:, None, :] - C[None, :, :]),
                              ord=_MINKOWSKI[self.metric], axis=2)

    def full_matrix(self) -> np.ndarray:
        return self.dist if self.dist is not None else self.submatrix(np.arange(self.n))


@dataclass
class WindowedSpace:
    """A finite window of an unbounded space; ``frontier`` stands in for infinity."""
    space: FiniteMetricSpace
    frontier: np.ndarray
    window_radius: float
    collar: float = 0.0
    bounded: bool = False

    def __post_init__(self):
        self.frontier = np.asarray(sorted(set(int(i) for i in self.frontier)), dtype=int)

    @property
    def n(self):
        return self.space.n


def frontier_by_edge_distance(space: FiniteMetricSpace, edge_distance, collar: float) -> np.ndarray:
    """Points whose distance to the window edge is < collar."""
    e = np.asarray(edge_distance, dtype=float)
    return np.flatnonzero(e < collar - space.tol)


def check_frontier(ws: WindowedSpace, edge_distance) -> ValidationReport:
    expect = frontier_by_edge_distance(ws.space, edge_distance, ws.collar)
    ok = np.array_equal(expect, ws.frontier)
    if not ws.bounded and len(ws.frontier) == 0:
        return ValidationReport(False, ["empty frontier for an unbounded model"])
    return ValidationReport(ok, [] if ok else ["frontier differs from collar rule"])


def validate_metric(m: FiniteMetricSpace, tol: float | None = None) -> ValidationReport:
    tol = m.tol if tol is None else tol
    D = m.full_matrix()
    n = D.shape[0]
    bad = []
    if np.any(np.abs(np.diag(D)) > tol):
        bad += [("diagonal", int(i)) for i in np.flatnonzero(np.abs(np.diag(D)) > tol)]
    asym = np.argwhere(np.abs(D - D.T) > tol)
    bad += [("symmetry", int(i), int(j)) for i, j in asym if i < j]
    for j in range(n):
        # d(i,k) <= d(i,j) + d(j,k) for all i,k
        viol = np.argwhere(D > D[:, j][:, None] + D[j][None, :] + tol)
        bad += [("triangle", int(i), j, int(k)) for i, k in viol]
    return ValidationReport(not bad, bad)


class GroupSpec:
    """A finite group given by its multiplication table; laws checked on construction."""

    def __init__(self, mult, identity: int | None = None, names=None, check=True):
        M = np.asarray(mult, dtype=int)
        self.order = M.shape[0]
        if M.shape != (self.order, self.order):
            raise GroupLawViolation("multiplication table must be square")
        self.mult = M
        if identity is None:
            cand = [e for e in range(self.order)
                    if np.array_equal(M[e], np.arange(self.order))
                    and np.array_equal(M[:, e], np.arange(self.order))]
            if not cand:
                raise GroupLawViolation("no identity element")
            identity = cand[0]
        self.identity = int(identity)
        self.names = list(names) if names is not None else [str(i) for i in range(self.order)]
        if check:
            self.check()
        self.inv = np.array([int(np.flatnonzero(M[g] == self.identity)[0])
                             for g in range(self.order)])

    def check(self):
        M, n, e = self.mult, self.order, self.identity
        if M.min() < 0 or M.max() >= n:
            raise GroupLawViolation("table entries out of range")
        for g in range(n):
            if M[e, g] != g or M[g, e] != g:
                raise GroupLawViolation(f"identity law fails at {g}")
            if len(set(M[g])) != n or e not in M[g]:
                raise GroupLawViolation(f"element {g} has no inverse")
        assoc = M[M, :]  # assoc[a,b,c] = (ab)c
        rhs = M[:, M]    # rhs[a,b,c] = a(bc)
        bad = np.argwhere(assoc != rhs)
        if len(bad):
            raise GroupLawViolation(f"associativity fails at {tuple(bad[0])}")

    def mul(self, a, b):
        return int(self.mult[a, b])

    def element_order(self, g) -> int:
        k, x = 1, g
        while x != self.identity:
            x = self.mult[x, g]
            k += 1
        return k

    def cyclic(self, g) -> frozenset:
        out, x = {self.identity}, g
        while x != self.identity:
            out.add(int(x))
            x = self.mult[x, g]
        return frozenset(out)

    def closure(self, gens) -> frozenset:
        S = {self.identity} | set(int(g) for g in gens)
        frontier = list(S)
        while frontier:
            new = []
            for a in frontier:
                for b in list(S):
                    for c in (self.mult[a, b], self.mult[b, a]):
                        if int(c) not in S:
                            S.add(int(c))
                            new.append(int(c))
            frontier = new
        return frozenset(S)

    def subgroups(self) -> list:
        """All subgroups, as frozensets, sorted by size then content."""
        subs = {frozenset([self.identity])}
        cyc = {self.cyclic(g) for g in range(self.order)}
        subs |= cyc
        changed = True
        while changed:
            changed = False
            for A in list(subs):
                for C in cyc:
                    J = self.closure(A | C)
                    if J not in subs:
                        subs.add(J)
                        changed = True
        return sorted(subs, key=lambda s: (len(s), sorted(s)))

    def is_normal(self, H) -> bool:
        H = set(H)
        return all(int(self.mult[self.mult[g, h], self.inv[g]]) in H
                   for g in range(self.order) for h in H)


def cyclic_group(p: int, name="g") -> GroupSpec:
    M = (np.arange(p)[:, None] + np.arange(p)[None, :]) % p
    names = ["e"] + [f"{name}^{k}" if k > 1 else name for k in range(1, p)]
    return GroupSpec(M, 0, names)


def klein_group() -> GroupSpec:
    M = np.array([[a ^ b for b in range(4)] for a in range(4)])
    return GroupSpec(M, 0, ["e", "a", "b", "ab"])


class IsometricAction:
    """Group acting on point indices: ``perm[g][x]`` is g.x."""

    def __init__(self, group: GroupSpec, perm, tol: float | None = None):
        P = np.asarray(perm, dtype=int)
        if P.ndim != 2 or P.shape[0] != group.order:
            raise NotAPermutation("need one permutation per group element")
        n = P.shape[1]
        for g in range(group.order):
            if not np.array_equal(np.sort(P[g]), np.arange(n)):
                raise NotAPermutation(f"image of element {group.names[g]} is not a permutation")
        self.group = group
        self.perm = P
        self.n = n
        self.tol = tol

    def act(self, g, x):
        return self.perm[g][x]

    def orbits(self) -> list:
        seen = np.full(self.n, -1)
        out = []
        for x in range(self.n):
            if seen[x] >= 0:
                continue
            orb = sorted(set(int(v) for v in self.perm[:, x]))
            for y in orb:
                seen[y] = len(out)
            out.append(orb)
        return out

    def restricted(self, elements) -> "IsometricAction":
        """Action of a subgroup (given as element indices) with its own table."""
        els = sorted(elements)
        pos = {g: i for i, g in enumerate(els)}
        M = [[pos[self.group.mult[a, b]] for b in els] for a in els]
        G = GroupSpec(M, pos[self.group.identity], [self.group.names[g] for g in els])
        return IsometricAction(G, self.perm[els], self.tol)

    @staticmethod
    def trivial(n: int) -> "IsometricAction":
        return IsometricAction(GroupSpec([[0]], 0, ["e"]), [list(range(n))])


def validate_action(a: IsometricAction, m: FiniteMetricSpace, max_pairs: int = 25_000_000,
                    seed: int = 0) -> ValidationReport:
    if a.n != m.n:
        raise NotAPermutation(f"permutations act on {a.n} points, space has {m.n}")
    G = a.group
    G.check()
    bad = []
    e = G.identity
    if not np.array_equal(a.perm[e], np.arange(a.n)):
        bad.append(("identity", G.names[e]))
    for g in range(G.order):
        for h in range(G.order):
            if not np.array_equal(a.perm[g][a.perm[h]], a.perm[G.mult[g, h]]):
                bad.append(("homomorphism", G.names[g], G.names[h]))
    tol = m.tol if a.tol is None else a.tol
    note = ""
    n = m.n
    if n * n <= max_pairs:
        rows = np.arange(n)
        chunk = max(1, 4_000_000 // max(n, 1))
        for g in range(G.order):
            P = a.perm[g]
            for s in range(0, n, chunk):
                r = rows[s:s + chunk]
                if m.dist is not None:
                    D0 = m.dist[r]
                    D1 = m.dist[np.ix_(P[r], P)]
                else:
                    D0 = np.stack([m.row(i) for i in r])
                    D1 = np.stack([m.row(P[i], P) for i in r])
                w = np.argwhere(np.abs(D0 - D1) > tol)
                for i, j in w[:5]:
                    bad.append(("isometry", G.names[g], int(r[i]), int(j)))
                if len(w):
                    break
    else:
        rng = np.random.default_rng(seed)
        I = rng.integers(0, n, 200_000)
        J = rng.integers(0, n, 200_000)
        note = "isometry bound checked on 200000 random pairs"
        for g in range(G.order):
            P = a.perm[g]
            for i, j in zip(I, J):
                if abs(m.d(i, j) - m.d(P[i], P[j])) > tol:
                    bad.append(("isometry", G.names[g], int(i), int(j)))
                    break
    return ValidationReport(not bad, bad, note)


@dataclass
class OrbitSpace:
    base: FiniteMetricSpace
    proj: np.ndarray
    orbits: list
    lifted_from: tuple


def orbit_space(m: FiniteMetricSpace, a: IsometricAction, check: bool = True) -> OrbitSpace:
    rep = validate_action(a, m) if check else ValidationReport(True)
    if not rep.ok:
        raise InvalidAction(f"action invalid: {rep.violations[:3]}")
    orbs = a.orbits()
    proj = np.empty(m.n, dtype=int)
    for k, o in enumerate(orbs):
        proj[o] = k
    reps = np.array([o[0] for o in orbs])
    # d*(x,y) = min_g d(x, g y): over all members of y's orbit
    D = np.full((len(orbs), len(orbs)), np.inf)
    for k, x in enumerate(reps):
        r = m.row(int(x))
        D[k] = np.minimum.reduceat(r[np.concatenate(orbs)],
                                   np.cumsum([0] + [len(o) for o in orbs[:-1]]))
    D = np.minimum(D, D.T)
    base = FiniteMetricSpace(points=[tuple(o) for o in orbs], dist=D,
                             label=f"{m.label}/G", exact=m.exact)
    if check:
        v = validate_metric(base)
        if not v.ok:
            raise InvalidAction(f"orbit metric fails metric axioms: {v.violations[:3]}")
    return OrbitSpace(base, proj, orbs, (m, a))


def check_coarse_density(sub, whole: FiniteMetricSpace, c: float, within=None):
    """Is every point of ``within`` (default: all of ``whole``) within c of ``sub``?

    Returns (ok, required_c, worst_point).
    """
    sub = np.asarray(sub, dtype=int)
    tg = np.arange(whole.n) if within is None else np.asarray(within, dtype=int)
    if len(tg) == 0:
        return True, 0.0, None
    if len(sub) == 0:
        raise EmptySubsetOfNonemptySpace("empty subset cannot be dense in a nonempty set")
    dd = whole.dist_to_subset(sub, tg)
    k = int(np.argmax(dd))
    need = float(dd[k])
    ok = need <= c + whole.tol
    return ok, need, (None if ok else int(tg[k]))


@dataclass
class QuasiIsometryParams:
    lam: float = 1.0
    c: float = 0.0
    closeness: float = 0.0

    def __post_init__(self):
        if self.lam < 1 or self.c < 0 or self.closeness < 0:
            raise ValueError("need lambda >= 1 and c, closeness >= 0")

    def holds(self, d_src: float, d_tgt: float) -> bool:
        return d_src / self.lam - self.c <= d_tgt <= self.lam * d_src + self.c


# Cayley graphs ---------------------------------------------------------

@dataclass
class GroupPresentation:
    """Multiplication on hashable elements of a (possibly infinite) group."""
    mul: object
    inv: object
    identity: object
    name: str = ""


def word_lengths(pres: GroupPresentation, generators, radius: int) -> dict:
    gens = list(generators)
    for s in gens:
        if pres.inv(s) not in gens:
            raise NonSymmetricGenerators(f"inverse of generator {s!r} missing")
    L = {pres.identity: 0}
    q = deque([pres.identity])
    while q:
        x = q.popleft()
        if L[x] == radius:
            continue
        for s in gens:
            y = pres.mul(x, s)
            if y not in L:
                L[y] = L[x] + 1
                q.append(y)
    return L


@dataclass
class CayleyWindow:
    ws: WindowedSpace
    action: IsometricAction
    elements: list
    index: dict
    presentation: GroupPresentation
    lengths: dict
    subgroup: list


def cayley_ball(pres: GroupPresentation, generators, radius: int, collar: float = 2,
                subgroup=None, subgroup_names=None) -> CayleyWindow:
    """Word-metric window around a finite subgroup H (default trivial).

    Points are the elements within ``radius`` of H (for trivial H this is the
    ordinary ball).  H acts by left multiplication, which is an isometry of
    the word metric and preserves the window.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    H = list(subgroup) if subgroup else [pres.identity]
    if H[0] != pres.identity:
        H = [pres.identity] + [h for h in H if h != pres.identity]
    hmax = 0
    L = word_lengths(pres, generators, 2 * radius + 2 * 8)
    for h in H:
        if h not in L:
            raise ValueError(f"subgroup element {h!r} too long")
        hmax = max(hmax, L[h])
    if 2 * radius + 2 * hmax > 2 * radius + 16:
        L = word_lengths(pres, generators, 2 * radius + 2 * hmax)
    # elements within radius of H: h*w with |w| <= radius
    ball = [x for x, l in L.items() if l <= radius]
    elems = set()
    for h in H:
        for w in ball:
            elems.add(pres.mul(h, w))
    elems = sorted(elems, key=lambda x: (min(L[pres.mul(pres.inv(h), x)] for h in H), repr(x)))
    index = {x: i for i, x in enumerate(elems)}
    n = len(elems)
    inv = [pres.inv(x) for x in elems]
    D = np.empty((n, n))
    for i in range(n):
        xi = inv[i]
        for j in range(n):
            D[i, j] = L[pres.mul(xi, elems[j])]
    dH = np.array([min(L[pres.mul(pres.inv(h), x)] for h in H) for x in elems], dtype=float)
    space = FiniteMetricSpace(points=elems, dist=D, label=f"cayley:{pres.name}", exact=True)
    frontier = np.flatnonzero(dH > radius - collar)
    ws = WindowedSpace(space, frontier, float(radius), float(collar))
    # left multiplication table of H
    Hpos = {h: i for i, h in enumerate(H)}
    mult = [[Hpos[pres.mul(a, b)] for b in H] for a in H]
    names = subgroup_names or [repr(h) for h in H]
    G = GroupSpec(mult, 0, names)
    perm = [[index[pres.mul(h, x)] for x in elems] for h in H]
    act = IsometricAction(G, perm, TOL_EXACT)
    return CayleyWindow(ws, act, elems, index, pres, L, H)


def integer_grid(N: int, dim: int) -> np.ndarray:
    """Lattice points of the cube [-N, N]^dim in lexicographic order."""
    axes = [np.arange(-N, N + 1)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def coords_index(coords: np.ndarray) -> dict:
    return {tuple(int(v) for v in c): i for i, c in enumerate(coords)}


def perm_from_map(coords: np.ndarray, f) -> np.ndarray:
    idx = coords_index(coords)
    out = np.empty(len(coords), dtype=int)
    for i, c in enumerate(coords):
        img = tuple(int(v) for v in f(np.asarray(c)))
        if img not in idx:
            raise NotAPermutation(f"{tuple(c)} maps outside the point set")
        out[i] = idx[img]
    return out


def as_fraction(x) -> Fraction:
    return Fraction(x).limit_denominator(10**9)
