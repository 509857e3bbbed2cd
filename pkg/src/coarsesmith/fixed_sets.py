"""Approximate fixed sets, stabilization scans, bounded fixed sets and tameness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ActionNotLeftMultiplication, EmptyScaleList
from .metric import (CayleyWindow, IsometricAction, WindowedSpace, orbit_space)


@dataclass
class FixedApprox:
    k: float
    points: np.ndarray
    subgroup: frozenset


@dataclass
class StabilizationReport:
    scales: list
    density_matrix: list          # density_matrix[i][j]: c for X_{k_i} dense in X_{k_j}, j > i
    verdict: str                  # "Stable" | "NotStableInWindow" | "AllEmpty"
    k0: float | None = None
    c0: float | None = None
    density_cap: float = 0.0
    sizes: list = field(default_factory=list)
    frontier_driven: list = field(default_factory=list)

    @property
    def requirements(self) -> list:
        """Density needed by the smallest scale's set inside each larger one."""
        return [self.density_matrix[0][j] for j in range(1, len(self.scales))]

    def to_json(self) -> dict:
        def enc(x):
            if x is None:
                return None
            return "inf" if x == np.inf else repr(float(x))
        return {
            "scales": [repr(float(k)) for k in self.scales],
            "density_matrix": [[enc(c) if j > i else None for j, c in enumerate(row)]
                               for i, row in enumerate(self.density_matrix)],
            "verdict": self.verdict,
            "k0": enc(self.k0),
            "c0": enc(self.c0),
            "density_cap": enc(self.density_cap),
            "sizes": self.sizes,
        }


@dataclass
class BoundedFixedSet:
    representative: FixedApprox
    k0: float
    density_bound: float
    report: StabilizationReport


@dataclass
class NoneExists:
    report: StabilizationReport


def displacement(ws: WindowedSpace, a: IsometricAction, sub) -> np.ndarray:
    """max over g in sub of d(x, g x), for every point x."""
    m = ws.space
    out = np.zeros(m.n)
    idx = np.arange(m.n)
    for g in sub:
        P = a.perm[g]
        if m.dist is not None:
            dg = m.dist[idx, P]
        else:
            dg = np.linalg.norm(np.abs(m.coords - m.coords[P]),
                                ord={"l1": 1, "l2": 2, "linf": np.inf}[m.metric], axis=1)
        out = np.maximum(out, dg)
    return out


def fixed_approx(ws: WindowedSpace, a: IsometricAction, sub, k: float,
                 disp: np.ndarray | None = None) -> FixedApprox:
    sub = frozenset(range(a.group.order)) if sub is None else frozenset(sub)
    if disp is None:
        disp = displacement(ws, a, sub)
    pts = np.flatnonzero(disp <= k + ws.space.tol)
    return FixedApprox(float(k), pts, sub)


def default_scales(window_radius: float) -> list:
    out, k = [0.0], 1.0
    while k <= window_radius / 2 + 1e-12:
        out.append(k)
        k *= 2
    return out


def _density(ws, src, dst) -> tuple[float, bool]:
    """(c, frontier_driven) for src dense in dst."""
    if len(dst) == 0:
        return 0.0, False
    if len(src) == 0:
        return np.inf, False
    dd = ws.space.dist_to_subset(src, dst)
    c = float(dd.max())
    interior = ~np.isin(dst, ws.frontier)
    c_in = float(dd[interior].max()) if interior.any() else 0.0
    return c, c_in + ws.space.tol < c


def stabilization_scan(ws: WindowedSpace, a: IsometricAction, sub, scales,
                       density_cap: float | None = None) -> StabilizationReport:
    scales = [float(k) for k in scales]
    if not scales:
        raise EmptyScaleList("scale list is empty")
    if any(b <= x for x, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly increasing")
    cap = ws.window_radius / 4 if density_cap is None else float(density_cap)
    sub = frozenset(range(a.group.order)) if sub is None else frozenset(sub)
    disp = displacement(ws, a, sub)
    sets = [fixed_approx(ws, a, sub, k, disp).points for k in scales]
    for s0, s1 in zip(sets, sets[1:]):
        assert np.all(np.isin(s0, s1)), "fixed sets must grow with k"
    for s in sets:
        for g in sub:
            assert np.all(np.isin(a.perm[g][s], s)), "fixed sets must be G-invariant"
    m = len(scales)
    D = [[0.0] * m for _ in range(m)]
    F = [[False] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            D[i][j], F[i][j] = _density(ws, sets[i], sets[j])
    rep = StabilizationReport(scales, D, "NotStableInWindow", density_cap=cap,
                              sizes=[int(len(s)) for s in sets], frontier_driven=F)
    if all(len(s) == 0 for s in sets):
        rep.verdict = "AllEmpty"
        return rep
    for i in range(m - 1):
        if len(sets[i]) == 0:
            continue
        row = [D[i][j] for j in range(i + 1, m)]
        if max(row) <= cap + ws.space.tol and not any(F[i][i + 1:]):
            rep.verdict, rep.k0, rep.c0 = "Stable", scales[i], max(row)
            return rep
    return rep


def bounded_fixed_set(ws, a, sub, scales, density_cap=None):
    """BoundedFixedSet at the smallest stable scale, or NoneExists with the scan."""
    rep = stabilization_scan(ws, a, sub, scales, density_cap)
    if rep.verdict != "Stable":
        return NoneExists(rep)
    sub = frozenset(range(a.group.order)) if sub is None else frozenset(sub)
    fa = fixed_approx(ws, a, sub, rep.k0)
    return BoundedFixedSet(fa, rep.k0, rep.c0, rep)


def tameness_scan(ws, a, scales, density_cap=None) -> dict:
    """Per-subgroup bounded fixed set outcome, keyed by sorted element tuples."""
    out = {}
    for H in a.group.subgroups():
        out[tuple(sorted(H))] = bounded_fixed_set(ws, a, H, scales, density_cap)
    return out


def is_tame(scan: dict) -> bool:
    return all(isinstance(v, BoundedFixedSet) for v in scan.values())


def semifree_flags(ws, a, scales, compact_cap: float, density_cap=None) -> dict:
    """Large-scale semifree / free detectors built on tameness_scan."""
    scan = tameness_scan(ws, a, scales, density_cap)
    whole = tuple(range(a.group.order))
    top = scan[whole]
    if not is_tame(scan):
        return {"tame": False, "semifree": False, "free": False}
    c = top.density_bound
    semifree = True
    for H, v in scan.items():
        if len(H) == 1:
            continue
        A, B = v.representative.points, top.representative.points
        if len(A) == 0 or len(B) == 0:
            semifree = semifree and len(A) == len(B)
            continue
        ab = ws.space.dist_to_subset(A, B).max()
        ba = ws.space.dist_to_subset(B, A).max()
        c_H = max(c, v.density_bound)
        if max(ab, ba) > c_H + ws.space.tol:
            semifree = False
    rep = top.representative.points
    free = semifree and (len(rep) == 0 or ws.space.diameter(rep) <= compact_cap)
    return {"tame": True, "semifree": semifree, "free": free}


def ineffective_check(ws, a, bfs: BoundedFixedSet) -> dict:
    """If the bounded fixed set is the whole window, check the orbit map is a coarse equivalence."""
    if len(bfs.representative.points) != ws.n:
        return {"applies": False}
    orb = orbit_space(ws.space, a)
    D = ws.space.full_matrix()
    Dq = orb.base.dist[np.ix_(orb.proj, orb.proj)]
    slack = 2 * bfs.density_bound + bfs.k0
    worst = float((D - Dq).max())
    return {"applies": True, "slack": slack, "worst": worst,
            "ok": worst <= slack + ws.space.tol}


@dataclass
class CentralizerCertificate:
    points: np.ndarray
    densities: dict               # k -> c
    cap: float
    ok: bool


def centralizer_subspace(cw: CayleyWindow, scales, density_cap=None) -> CentralizerCertificate:
    pres, H, a = cw.presentation, cw.subgroup, cw.action
    for hi, h in enumerate(H):
        for i, x in enumerate(cw.elements):
            if cw.index.get(pres.mul(h, x)) != a.perm[hi][i]:
                raise ActionNotLeftMultiplication(f"element {h!r} does not act by left multiplication")
    cent = np.array([i for i, x in enumerate(cw.elements)
                     if all(pres.mul(h, x) == pres.mul(x, h) for h in H)], dtype=int)
    ws = cw.ws
    cap = ws.window_radius / 4 if density_cap is None else density_cap
    disp = displacement(ws, a, range(a.group.order))
    dens = {}
    for k in scales:
        Xk = np.flatnonzero(disp <= k + ws.space.tol)
        dens[float(k)] = _density(ws, cent, Xk)[0]
    ok = all(c <= cap for c in dens.values())
    return CentralizerCertificate(cent, dens, cap, ok)
