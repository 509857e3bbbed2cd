"""Builtin scenarios and the JSON scenario loader."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from .complexes import GComplex, SimplicialComplex
from .coverings import Covering, induced_index_action, lebesgue_number
from .errors import CoarseSmithError
from .fixed_sets import default_scales
from .metric import (FiniteMetricSpace, GroupPresentation, GroupSpec, IsometricAction,
                     WindowedSpace, cayley_ball, cyclic_group, frontier_by_edge_distance,
                     integer_grid, klein_group, perm_from_map)


@dataclass
class Scenario:
    name: str
    ws: WindowedSpace
    action: IsometricAction | None = None
    levels: list | None = None          # list of Covering, coarse to fine order n = 0, 1, ...
    dim: int | None = None              # expected coarse dimension m of X
    p: int = 2
    q: int = 2
    scales: list = field(default_factory=list)
    density_cap: float | None = None
    edge_distance: np.ndarray | None = None
    max_dim: int = 6
    extra: dict = field(default_factory=dict)


class ScenarioError(CoarseSmithError):
    module = "limits_cli"


def box_sets(C: np.ndarray, centers, r: float) -> list:
    """L-infinity boxes of radius r about the centers, intersected with the points C."""
    out = []
    for c in centers:
        m = np.flatnonzero(np.abs(C - np.asarray(c)).max(axis=1) <= r + 1e-9)
        if len(m):
            out.append(m)
    return out


def lattice_centers(extent: float, spacing: int, dim: int) -> list:
    k = int(extent // spacing)
    axis = [spacing * i for i in range(-k, k + 1)]
    return list(itertools.product(axis, repeat=dim))


def _lattice_cover(C, ws, extent, r, s, dim, a, label):
    sets = box_sets(C, lattice_centers(extent, s, dim), r)
    cov = Covering(sets, 2.0 * r, "Lattice")
    cov.check(ws.n)
    cov.index_perm = induced_index_action(sets, a)
    return cov


def grid_levels(C, ws: WindowedSpace, N: int, dim: int, a=None, num_levels: int = 2) -> list:
    """Nested lattice box coverings of the cube window.

    The top level has three boxes per axis with the middle one clear of the
    frontier shell; each lower level uses the largest radius whose diameter
    stays below the certified Lebesgue bound of the level above.
    """
    rt = N - 2
    top = _lattice_cover(C, ws, N, rt, rt + 1, dim, a, "top")
    levels = [top]
    while len(levels) < num_levels:
        leb = lebesgue_number(levels[0], ws)
        r = int(np.ceil(leb / 2)) - 1
        if r < 1:
            break
        levels.insert(0, _lattice_cover(C, ws, N, r, r + 1, dim, a, "lower"))
    return levels


def euclidean(n: int, N: int = 8, num_levels: int = 2, collar: int = 1) -> Scenario:
    """Integer grid {-N..N}^n with the L-infinity metric, frontier = outer shell."""
    C = integer_grid(N, n)
    sp = FiniteMetricSpace(coords=C, metric="linf", label=f"R^{n} window {N}")
    edge = N - np.abs(C).max(axis=1)
    ws = WindowedSpace(sp, frontier_by_edge_distance(sp, edge, collar), float(N), float(collar))
    levels = grid_levels(C, ws, N, n, None, num_levels)
    name = {1: "euclidean_line", 2: "euclidean_plane", 3: "euclidean_space"}.get(n, f"euclidean_{n}")
    return Scenario(name, ws, None, levels, n, 2, 2, default_scales(N), edge_distance=edge,
                    max_dim=n + 2 if n >= 3 else 6)


def plane_reflection(N: int = 8, collar: int = 1) -> Scenario:
    C = integer_grid(N, 2)
    sp = FiniteMetricSpace(coords=C, metric="linf", label=f"R^2 window {N}")
    edge = N - np.abs(C).max(axis=1)
    ws = WindowedSpace(sp, frontier_by_edge_distance(sp, edge, collar), float(N), float(collar))
    G = cyclic_group(2)
    a = IsometricAction(G, [np.arange(len(C)), perm_from_map(C, lambda v: np.array([-v[0], v[1]]))])
    levels = grid_levels(C, ws, N, 2, a)
    return Scenario("plane_reflection", ws, a, levels, 2, 2, 3, default_scales(N), edge_distance=edge)


def plane_double_reflection(N: int = 8, collar: int = 1) -> Scenario:
    """Z/2 x Z/2 acting by sign changes of the two coordinates."""
    C = integer_grid(N, 2)
    sp = FiniteMetricSpace(coords=C, metric="linf", label=f"R^2 window {N}")
    edge = N - np.abs(C).max(axis=1)
    ws = WindowedSpace(sp, frontier_by_edge_distance(sp, edge, collar), float(N), float(collar))
    G = klein_group()
    maps = [lambda v: v, lambda v: np.array([-v[0], v[1]]), lambda v: np.array([v[0], -v[1]]),
            lambda v: -v]
    a = IsometricAction(G, [perm_from_map(C, f) for f in maps])
    levels = grid_levels(C, ws, N, 2, a)
    return Scenario("plane_double_reflection", ws, a, levels, 2, 2, 3, default_scales(N),
                    edge_distance=edge)


HEX_UNITS = [(1, -1, 0), (1, 0, -1), (0, 1, -1), (-1, 1, 0), (-1, 0, 1), (0, -1, 1)]


def hex_grid(N: int) -> np.ndarray:
    """Cube coordinates (x, y, z), x+y+z = 0, of the hexagonal ball of radius N."""
    pts = [(x, y, -x - y) for x in range(-N, N + 1) for y in range(-N, N + 1) if abs(x + y) <= N]
    return np.array(pts)


def plane_rotation(N: int = 16, collar: int = 1) -> Scenario:
    """Z/3 rotating the hexagonal lattice; hex distance is L-infinity in cube coordinates."""
    if N < 12:
        raise ScenarioError("the rotation model needs window radius >= 12")
    C = hex_grid(N)
    sp = FiniteMetricSpace(coords=C, metric="linf", label=f"hex window {N}")
    edge = N - np.abs(C).max(axis=1)
    ws = WindowedSpace(sp, frontier_by_edge_distance(sp, edge, collar), float(N), float(collar))
    G = cyclic_group(3)
    rot = perm_from_map(C, lambda v: np.array([v[2], v[0], v[1]]))
    a = IsometricAction(G, [np.arange(len(C)), rot, rot[rot]])
    # top: one central ball clear of the frontier and six corner balls
    corners = [tuple((N - 1) * np.array(u)) for u in HEX_UNITS]
    top_sets = box_sets(C, [(0, 0, 0)], N - 2) + box_sets(C, corners, N - 3)
    top = Covering(top_sets, 2.0 * (N - 2), "Lattice")
    # bottom: radius-2 balls on the index-3 sublattice (triangulated plane nerve)
    cs = [(3 * i + 3 * j, -3 * i, -3 * j) for i in range(-N, N + 1) for j in range(-N, N + 1)]
    cs = [c for c in cs if max(map(abs, c)) <= N + 2]
    low = Covering(box_sets(C, cs, 2), 4.0, "Lattice")
    for cov in (low, top):
        cov.check(ws.n)
        cov.index_perm = induced_index_action(cov.sets, a)
    return Scenario("plane_rotation", ws, a, [low, top], 2, 3, 5, default_scales(N),
                    edge_distance=edge)


def semidirect_presentation() -> GroupPresentation:
    """Z^2 x| Z/2 with the swap; elements ((v1, v2), s)."""
    def mul(x, y):
        (v, s), (w, t) = x, y
        w2 = (w[1], w[0]) if s else w
        return ((v[0] + w2[0], v[1] + w2[1]), (s + t) % 2)

    def inv(x):
        (v, s) = x
        w = (-v[1], -v[0]) if s else (-v[0], -v[1])
        return (w, s)
    return GroupPresentation(mul, inv, ((0, 0), 0), "Z2xZ/2")


SEMIDIRECT_GENERATORS = [((1, 0), 0), ((-1, 0), 0), ((0, 1), 0), ((0, -1), 0), ((0, 0), 1)]


def semidirect_swap(R: int = 16, collar: int = 2, with_levels: bool = True) -> Scenario:
    pres = semidirect_presentation()
    c = ((0, 0), 1)
    cw = cayley_ball(pres, SEMIDIRECT_GENERATORS, R, collar, subgroup=[pres.identity, c],
                     subgroup_names=["e", "c"])
    ws = cw.ws
    # chart: u = v1 + v2, w = v1 - v2; word distance is max(|du|, |dw|) + [sheets differ]
    chart = np.array([(v[0] + v[1], v[0] - v[1]) for (v, s) in cw.elements])
    levels = None
    if with_levels:
        levels = []
        for r in _chart_radii(R):
            sets = box_sets(chart, lattice_centers(R, r + 1, 2), r)
            cov = Covering(sets, 2.0 * r + 1, "Lattice")
            cov.check(ws.n)
            cov.index_perm = induced_index_action(sets, cw.action)
            levels.append(cov)
    sc = Scenario("semidirect_swap", ws, cw.action, levels, 2, 2, 3, [1, 2, 3, 5])
    sc.extra["cayley"] = cw
    sc.extra["chart"] = chart
    return sc


def _chart_radii(R: int) -> list:
    top = R - 2
    leb = (top + 1) // 2
    low = max(1, (leb - 2) // 2)
    return [low, top]


def goalposts(n_posts: int = 12, ray: float = 64.0, step: float = 0.5, collar: float = 1.0) -> Scenario:
    """Two parallel lines with tilted goalposts attached at y = 1..n_posts; Z/2 swaps x -> -x."""
    pts, edge = [], []
    ys = np.arange(-ray, n_posts + ray + step / 2, step)
    for x in (-0.5, 0.5):
        for y in ys:
            pts.append((x, y, 0.0))
            edge.append(min(y + ray, n_posts + ray - y))
    for n in range(1, n_posts + 1):
        th = n * np.pi / (2 * n + 2)
        u = np.array([0.0, -np.cos(th), np.sin(th)])  # leans back toward lower posts
        base = np.array([0.0, float(n), 0.0])
        local = []
        for sgn in (-1, 1):
            for t in np.arange(step, 1 + step / 2, step):
                local.append((sgn * 0.5, t, ray + 1))
            for a_ in np.arange(0.5 + step, n / 2 + step / 2, step):
                local.append((sgn * a_, 1.0, ray + 1))
            for t in np.arange(1 + step, 1 + ray + step / 2, step):
                local.append((sgn * n / 2, t, 1 + ray - t))
        for a_, t, e in local:
            pts.append(tuple(base + np.array([a_, 0, 0]) + t * u))
            edge.append(e)
    P = np.array(pts)
    key = {tuple(np.round(p, 6)): i for i, p in enumerate(P)}
    keep = sorted(set(key.values()))
    P, edge = P[keep], np.array(edge)[keep]
    sp = FiniteMetricSpace(coords=P, metric="l2", label="goalposts", exact=False)
    ws = WindowedSpace(sp, frontier_by_edge_distance(sp, edge, collar), float(ray), float(collar))
    idx = {tuple(np.round(p, 6)): i for i, p in enumerate(P)}
    flip = np.array([idx[tuple(np.round(p * np.array([-1, 1, 1]), 6) + 0.0)] for p in P])
    a = IsometricAction(cyclic_group(2), [np.arange(len(P)), flip], 1e-6)
    return Scenario("goalposts", ws, a, None, None, 2, 2, [float(k) for k in range(1, n_posts + 1)],
                    edge_distance=edge)


def hyperbolic_disk(rings: int = 6, per_ring: int = 12, p: int = 3) -> Scenario:
    """Poincare-disk samples on hyperbolic circles of radius 0..rings, rotated by Z/p."""
    pts, edge = [(0.0, 0.0)], [float(rings)]
    for k in range(1, rings + 1):
        rad = np.tanh(k / 2)
        for j in range(per_ring):
            th = 2 * np.pi * j / per_ring
            pts.append((rad * np.cos(th), rad * np.sin(th)))
            edge.append(float(rings - k))
    Z = np.array(pts)
    n = len(Z)
    sq = (Z ** 2).sum(axis=1)
    diff = ((Z[:, None, :] - Z[None, :, :]) ** 2).sum(axis=2)
    arg = 1 + 2 * diff / np.outer(1 - sq, 1 - sq)
    D = np.arccosh(np.maximum(arg, 1.0))
    np.fill_diagonal(D, 0.0)
    sp = FiniteMetricSpace(dist=D, label="hyperbolic disk", exact=False)
    ws = WindowedSpace(sp, frontier_by_edge_distance(sp, edge, 1.0), float(rings), 1.0)
    shift = per_ring // p

    def rot(i, k):
        if i == 0:
            return 0
        ring, j = divmod(i - 1, per_ring)
        return 1 + ring * per_ring + (j + k * shift) % per_ring
    perm = [[rot(i, k) for i in range(n)] for k in range(p)]
    a = IsometricAction(cyclic_group(p), perm, 1e-6)
    return Scenario("hyperbolic_disk", ws, a, None, 2, p, 2, default_scales(rings),
                    density_cap=rings / 2, edge_distance=np.array(edge))


def free_circle(p: int = 3) -> GComplex:
    """Boundary of a p-gon (a triangle for p = 3) with Z/p rotating it freely."""
    if p < 3:
        edges = [(0, 1), (1, 2), (2, 3), (0, 3)]
        nv = 4
        perm = [list(range(nv)), [2, 3, 0, 1]]
        return GComplex(SimplicialComplex.from_generators(edges, nv), cyclic_group(2), perm)
    edges = [(i, (i + 1) % p) for i in range(p)]
    C = SimplicialComplex.from_generators(edges, p)
    perm = [[(v + k) % p for v in range(p)] for k in range(p)]
    return GComplex(C, cyclic_group(p), perm)


BUILTINS = {
    "euclidean_line": lambda N=8, **kw: euclidean(1, N, **kw),
    "euclidean_plane": lambda N=8, **kw: euclidean(2, N, **kw),
    "euclidean_space": lambda N=8, **kw: euclidean(3, N, **kw),
    "plane_reflection": lambda N=8, **kw: plane_reflection(N, **kw),
    "plane_double_reflection": lambda N=8, **kw: plane_double_reflection(N, **kw),
    "plane_rotation": lambda N=16, **kw: plane_rotation(N, **kw),
    "semidirect_swap": lambda N=16, **kw: semidirect_swap(N, **kw),
    "goalposts": lambda N=64, **kw: goalposts(ray=float(N), **kw),
    "hyperbolic_disk": lambda N=6, **kw: hyperbolic_disk(rings=N, **kw),
}


def _dec(x) -> float:
    return float(Decimal(str(x)))


def load_scenario(doc: dict) -> Scenario:
    """Scenario from the JSON schema; distances are decimal strings."""
    try:
        space = doc["space"]
        kind = space["kind"]
    except (KeyError, TypeError):
        raise ScenarioError("scenario needs space.kind")
    collar = _dec(doc.get("frontier", {}).get("collar", 1))
    if kind in BUILTINS:
        return BUILTINS[kind](**({"N": int(space["window"])} if "window" in space else {}))
    if kind == "euclidean_grid":
        n, N = int(space.get("dim", 2)), int(space.get("window", 8))
        C = integer_grid(N, n)
        sp = FiniteMetricSpace(coords=C, metric=space.get("metric", "linf"), label="grid")
        edge = N - np.abs(C).max(axis=1)
    elif kind == "matrix":
        D = np.array([[_dec(x) for x in row] for row in space["dist"]])
        sp = FiniteMetricSpace(points=space.get("points"), dist=D, label=space.get("label", "matrix"))
        edge = np.array([_dec(x) for x in space["edge_distance"]]) if "edge_distance" in space \
            else np.full(sp.n, np.inf)
        N = _dec(space.get("window_radius", sp.diameter()))
    else:
        raise ScenarioError(f"unsupported space kind {kind!r}")
    bounded = not np.isfinite(edge).any()
    ws = WindowedSpace(sp, frontier_by_edge_distance(sp, edge, collar), float(N), collar, bounded)
    a = None
    if "group" in doc:
        G = GroupSpec(doc["group"]["table"], names=doc["group"].get("names"))
        perms = doc.get("action", {}).get("perms", {})
        names = G.names
        P = [perms.get(nm, perms.get(str(i), list(range(sp.n)) if i == G.identity else None))
             for i, nm in enumerate(names)]
        if any(x is None for x in P):
            raise ScenarioError("action.perms must list every group element")
        a = IsometricAction(G, P)
    p = int(doc.get("prime", 2))
    q = int(doc.get("field", 3 if p == 2 else 2))
    levels = None
    if kind == "euclidean_grid":
        levels = grid_levels(sp.coords, ws, int(N), int(space.get("dim", 2)), a)
    if "scales" in doc:
        scales = [_dec(x) for x in doc["scales"]]
    else:
        scales = default_scales(4 * N if bounded else N)
    sc = Scenario(doc.get("name", kind), ws, a, levels, doc.get("dim"), p, q, scales,
                  edge_distance=edge)
    return sc


def load_scenario_file(path: str) -> Scenario:
    with open(path) as fh:
        return load_scenario(json.load(fh))
