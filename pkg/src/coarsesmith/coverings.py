"""Uniform coverings, saturation, Lebesgue bounds and coarsening systems."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import CannotSatisfyLebesgue, NotAPartition, RadiusNotPositive
from .metric import IsometricAction, ValidationReport, WindowedSpace

_ORD = {"l1": 1, "l2": 2, "linf": np.inf}


@dataclass
class Covering:
    sets: list                       # list of sorted int arrays
    scale: float                     # declared diameter bound
    origin: str = "Ball"             # Ball | Saturated | StarPullback | Lattice
    index_perm: np.ndarray | None = None   # group element -> permutation of set ids
    labels: list | None = None

    def __len__(self):
        return len(self.sets)

    def membership(self, npoints: int) -> list:
        """For every point, the sorted tuple of set ids containing it."""
        mem = [[] for _ in range(npoints)]
        for i, s in enumerate(self.sets):
            for x in s:
                mem[x].append(i)
        return [tuple(m) for m in mem]

    def diameters(self, ws: WindowedSpace) -> list:
        return [ws.space.diameter(s) for s in self.sets]

    def to_json(self) -> dict:
        return {"sets": [[int(x) for x in s] for s in self.sets], "scale": repr(float(self.scale))}

    def check(self, npoints: int):
        if any(len(s) == 0 for s in self.sets):
            raise ValueError("covering has an empty set")
        cov = np.zeros(npoints, dtype=bool)
        for s in self.sets:
            cov[s] = True
        if not cov.all():
            raise ValueError(f"point {int(np.flatnonzero(~cov)[0])} is not covered")


@dataclass
class RefinementProjection:
    map: np.ndarray
    equivariant: bool


@dataclass
class CoarseningSystem:
    levels: list
    R: list                  # certified diameter bounds per level
    leb: list                # certified Lebesgue lower bounds per level
    projections: list
    ws: WindowedSpace
    action: IsometricAction | None = None
    radii: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"levels": [c.to_json() for c in self.levels],
                "R": [repr(float(r)) for r in self.R],
                "lebesgue": [repr(float(x)) for x in self.leb],
                "projections": [[int(v) for v in p.map] for p in self.projections]}


@dataclass
class DecompositionWitness:
    r: float
    classes: list
    bound: float


def induced_index_action(sets, a: IsometricAction | None):
    """Permutation of set ids induced by the point action, or None if not invariant."""
    if a is None:
        return None
    key = {}
    for i, s in enumerate(sets):
        key.setdefault(tuple(int(x) for x in s), i)
    if len(key) != len(sets):
        return None
    out = np.empty((a.group.order, len(sets)), dtype=int)
    for g in range(a.group.order):
        for i, s in enumerate(sets):
            img = tuple(sorted(int(x) for x in a.perm[g][s]))
            j = key.get(img)
            if j is None:
                return None
            out[g, i] = j
    return out


def _balls(ws, centers, radius):
    return [np.asarray(ws.space.ball(int(c), radius), dtype=int) for c in centers]


def greedy_net(ws: WindowedSpace, radius: float, a: IsometricAction | None = None,
               order=None) -> list:
    """Greedy radius-net; with an action the net is closed under the action."""
    m = ws.space
    covered = np.zeros(m.n, dtype=bool)
    centers = []
    for x in (range(m.n) if order is None else order):
        if covered[x]:
            continue
        orbit = [x] if a is None else sorted(set(int(v) for v in a.perm[:, x]))
        for c in orbit:
            centers.append(c)
            covered[m.ball(c, radius)] = True
    return centers


def ball_covering(ws: WindowedSpace, radius: float, centers="greedy",
                  a: IsometricAction | None = None) -> Covering:
    if not radius > 0:
        raise RadiusNotPositive(f"radius {radius} must be positive")
    if isinstance(centers, str):
        centers = greedy_net(ws, radius, a if centers == "equivariant" else None)
    sets, labels, seen = [], [], set()
    for c, s in zip(centers, _balls(ws, centers, radius)):
        key = tuple(int(x) for x in s)
        if key not in seen:      # balls that saturate the window coincide
            seen.add(key)
            sets.append(s)
            labels.append(int(c))
    cov = Covering(sets, 2.0 * radius, "Ball", labels=labels)
    cov.check(ws.n)
    cov.index_perm = induced_index_action(sets, a)
    return cov


def saturate_G(c: Covering, a: IsometricAction) -> Covering:
    """All translates gU, duplicates kept; set (g,U) has id g*len(c)+u."""
    G, m = a.group, len(c)
    sets, labels = [], []
    for g in range(G.order):
        for u, s in enumerate(c.sets):
            sets.append(np.sort(a.perm[g][s]))
            labels.append((g, u))
    perm = np.empty((G.order, G.order * m), dtype=int)
    for h in range(G.order):
        for g in range(G.order):
            for u in range(m):
                perm[h, g * m + u] = G.mult[h, g] * m + u
    return Covering(sets, c.scale, "Saturated", perm, labels)


def lebesgue_number(c: Covering, ws: WindowedSpace, cap: float | None = None) -> float:
    """Certified lower bound: min_x max_{U containing x} dist(x, X minus U).

    Inner radii are truncated at ``cap`` (default: window diameter), which
    keeps the bound certified while limiting the search.
    """
    m = ws.space
    diam = m.diameter()
    T = diam if cap is None else min(cap, diam)
    best = np.zeros(m.n)
    for s in c.sets:
        s = np.asarray(s, dtype=int)
        inside = np.zeros(m.n, dtype=bool)
        inside[s] = True
        if m.dist is not None:
            comp = np.flatnonzero(~inside)
            inner = m.dist[np.ix_(s, comp)].min(axis=1) if len(comp) else np.full(len(s), np.inf)
        else:
            C = m.coords
            lo = C[s].min(axis=0) - T - m.tol
            hi = C[s].max(axis=0) + T + m.tol
            near = np.all((C >= lo) & (C <= hi), axis=1) & ~inside
            comp = np.flatnonzero(near)
            if len(comp):
                dd, _ = cKDTree(C[comp]).query(C[s], k=1, p=_ORD[m.metric])
                inner = np.asarray(dd, dtype=float)
            else:
                inner = np.full(len(s), np.inf)
        inner = np.minimum(inner, T)
        best[s] = np.maximum(best[s], inner)
    return float(best.min()) if m.n else T


def degree(c: Covering, npoints: int | None = None, witness: DecompositionWitness | None = None,
           group_order: int | None = None):
    """Max number of sets through one point; with a witness also checks deg <= |G|(l+1)."""
    if not c.sets:
        return 0
    allp = np.concatenate([np.asarray(s, dtype=int) for s in c.sets])
    d = int(np.bincount(allp).max())
    if witness is not None and group_order is not None:
        return d, d <= group_order * len(witness.classes)
    return d


def _projection(src: Covering, dst: Covering, a, rule: str = "first") -> RefinementProjection:
    dst_sets = [set(int(x) for x in s) for s in dst.sets]
    owners = {}
    for j, s in enumerate(dst_sets):
        for x in s:
            owners.setdefault(x, []).append(j)

    def containing(U):
        U = [int(x) for x in U]
        cand = set(owners.get(U[0], []))
        for x in U[1:]:
            cand &= set(owners.get(x, []))
            if not cand:
                break
        return sorted(cand)

    n = len(src)
    beta = np.full(n, -1, dtype=int)
    equiv = a is not None and src.index_perm is not None and dst.index_perm is not None
    if equiv:
        P, Q = src.index_perm, dst.index_perm
        for u in range(n):
            if beta[u] >= 0:
                continue
            stab = [g for g in range(P.shape[0]) if P[g, u] == u]
            cand = [v for v in containing(src.sets[u]) if all(Q[g, v] == v for g in stab)]
            if not cand:
                equiv = False
                break
            v = cand[0] if rule == "first" else cand[-1]
            for g in range(P.shape[0]):
                beta[P[g, u]] = Q[g, v]
    if not equiv:
        for u in range(n):
            cand = containing(src.sets[u])
            if not cand:
                raise CannotSatisfyLebesgue(f"set {u} lies in no set of the next level")
            beta[u] = cand[0] if rule == "first" else cand[-1]
    for u in range(n):
        assert set(int(x) for x in src.sets[u]) <= dst_sets[beta[u]], "projection must contain"
    return RefinementProjection(beta, equiv)


def system_from_levels(ws: WindowedSpace, levels: list, a: IsometricAction | None = None,
                       rule: str = "first", radii=None) -> CoarseningSystem:
    """Assemble and certify a coarsening system from given coverings."""
    R = [max(cv.diameters(ws)) if len(cv) else 0.0 for cv in levels]
    leb = [lebesgue_number(cv, ws, cap=(R[i - 1] + 1 if i else R[0] + 1)) for i, cv in enumerate(levels)]
    for i in range(len(levels) - 1):
        if not leb[i + 1] > R[i]:
            raise CannotSatisfyLebesgue(
                f"level {i + 1} Lebesgue bound {leb[i + 1]} does not exceed diameter {R[i]}")
    projs = [_projection(levels[i], levels[i + 1], a, rule) for i in range(len(levels) - 1)]
    return CoarseningSystem(levels, R, leb, projs, ws, a, list(radii or []))


def build_coarsening_system(ws: WindowedSpace, a: IsometricAction | None = None,
                            num_levels: int = 2, growth: float = 2.0,
                            r0: float | None = None, rule: str = "first") -> CoarseningSystem:
    if not growth > 1:
        raise ValueError("growth must exceed 1")
    m = ws.space
    if m.n == 1:
        cov = Covering([np.array([0])], 0.0, "Ball", labels=[0])
        cov.index_perm = induced_index_action(cov.sets, a)
        return CoarseningSystem([cov] * num_levels, [0.0] * num_levels, [0.0] * num_levels,
                                [RefinementProjection(np.array([0]), a is not None)] * (num_levels - 1),
                                ws, a, [0.0] * num_levels)
    if r0 is None:
        D = m.submatrix(np.arange(min(m.n, 200)))
        r0 = float(D[D > 0].min())
    strategy = "equivariant" if a is not None else "greedy"
    diam = m.diameter()
    levels, radii = [ball_covering(ws, r0, strategy, a)], [r0]
    while len(levels) < num_levels:
        R_prev = max(levels[-1].diameters(ws))
        r = radii[-1] * growth
        while True:
            if r > 2 * diam:
                raise CannotSatisfyLebesgue(
                    f"window too small for {num_levels} levels (stopped at level {len(levels)})")
            cov = ball_covering(ws, r, strategy, a)
            if lebesgue_number(cov, ws, cap=R_prev + 1) > R_prev:
                break
            r *= growth
        levels.append(cov)
        radii.append(r)
    return system_from_levels(ws, levels, a, rule, radii)


def verify_r_disconnected(w: DecompositionWitness, ws: WindowedSpace) -> ValidationReport:
    n = ws.n
    seen = np.zeros(n, dtype=int)
    for cl in w.classes:
        seen[np.asarray(cl, dtype=int)] += 1
    if not np.all(seen == 1):
        raise NotAPartition("classes must partition the points")
    bad, comps_all = [], []
    m = ws.space
    for ci, cl in enumerate(w.classes):
        cl = np.asarray(cl, dtype=int)
        if len(cl) == 0:
            continue
        if m.dist is not None:
            sub = m.dist[np.ix_(cl, cl)]
            i, j = np.nonzero(sub < w.r - m.tol)
        else:
            pairs = cKDTree(m.coords[cl]).query_pairs(w.r - m.tol, p=_ORD[m.metric],
                                                      output_type="ndarray")
            pairs = pairs[[m.d(cl[a_], cl[b_]) < w.r - m.tol for a_, b_ in pairs]] if len(pairs) else pairs
            i, j = (pairs[:, 0], pairs[:, 1]) if len(pairs) else (np.array([], int), np.array([], int))
        g = coo_matrix((np.ones(len(i)), (i, j)), shape=(len(cl), len(cl)))
        k, lab = connected_components(g, directed=False)
        for c in range(k):
            comp = cl[lab == c]
            dm = m.diameter(comp)
            comps_all.append((ci, dm))
            if dm > w.bound + m.tol:
                bad.append(("diameter", ci, float(dm)))
    return ValidationReport(not bad, bad, f"{len(comps_all)} components")


def interval_witness(coords_1d, r: float) -> DecompositionWitness:
    """Two-class witness on a line: alternate blocks of length 2r."""
    x = np.asarray(coords_1d, dtype=float).ravel()
    L = 2.0 * r
    block = np.floor((x - x.min()) / L).astype(int)
    classes = [np.flatnonzero(block % 2 == 0), np.flatnonzero(block % 2 == 1)]
    return DecompositionWitness(r, classes, L)
