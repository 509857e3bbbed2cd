"""Direct systems over coarsening levels, stabilized ranks, and the scenario pipeline.

Limits are realized inside the window: a direct system is *stable from level n*
when every induced map from n onward is an isomorphism in every computed
degree.  Nothing here claims a true direct limit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .complexes import (Nerve, SimplicialComplex, SimplicialMap, barycentric_subdivision,
                        check_regularity, fixed_r, fixed_subcomplex, quotient_complex,
                        subdivide_map, trivial_gcomplex)
from .coverings import CoarseningSystem, system_from_levels
from .errors import (BoundedFixedSetAbsent, CoarseSmithError, IdentityFailure, InvalidAction,
                     NotStabilized, PreconditionFailed, RegularityNotReachedAfterTwo)
from .fixed_sets import (BoundedFixedSet, bounded_fixed_set, centralizer_subspace, fixed_approx,
                         is_tame, stabilization_scan, tameness_scan)
from .homology import HomologyRanks, InducedMap, chain_complex, euler_characteristic, induced_map
from .linalg import mat_mul

REPORT_SCHEMA = "coarsesmith-report/1"


@dataclass(frozen=True)
class Selector:
    kind: str                     # Full | RelFrontier | Restrict | FixedG | FixedG_r | Quotient
    r: float | None = None
    points: tuple | None = None
    sub: tuple | None = None      # subgroup elements; None = whole group


FULL = Selector("Full")
REL_FRONTIER = Selector("RelFrontier")


class LevelTower:
    """Nerves of all levels, subdivided a common number of times until the action is regular."""

    def __init__(self, system: CoarseningSystem, max_dim: int | None = 6, subdivisions: int | None = None):
        ws, a = system.ws, system.action
        self.system, self.ws, self.action = system, ws, a
        group = a.group if a is not None else None
        self.nerves = [Nerve(c, ws.n, max_dim, group) for c in system.levels]
        if a is not None and any(nv.gcomplex is None for nv in self.nerves):
            raise InvalidAction("a covering level is not invariant under the action")
        bases = [nv.gcomplex if a is not None else trivial_gcomplex(nv.complex) for nv in self.nerves]
        towers = []
        for b in bases:
            ch = [b]
            while check_regularity(ch[-1])[0] != "Regular":
                if len(ch) == 3:
                    raise RegularityNotReachedAfterTwo("nerve still not regular after two subdivisions")
                ch.append(barycentric_subdivision(ch[-1]))
            towers.append(ch)
        k = max(len(ch) - 1 for ch in towers) if subdivisions is None else subdivisions
        for ch in towers:
            while len(ch) - 1 < k:
                ch.append(barycentric_subdivision(ch[-1]))
                check_regularity(ch[-1])
        self.subdivisions = k
        self.K = [ch[k] for ch in towers]
        self.maps = []
        for n, proj in enumerate(system.projections):
            f = SimplicialMap(proj.map, towers[n][0].complex, towers[n + 1][0].complex)
            for i in range(1, k + 1):
                f = subdivide_map(f, towers[n][i - 1], towers[n][i], towers[n + 1][i])
            self.maps.append(f)
        fr = ws.frontier
        self.frontier = [K.from_base(nv.restrict(fr)) for K, nv in zip(self.K, self.nerves)]
        self._sub_cache = {}

    def __len__(self):
        return len(self.K)

    def gcomplex(self, n: int, sub=None):
        K = self.K[n]
        if sub is None or len(sub) == K.group.order:
            return K
        key = (n, tuple(sorted(sub)))
        if key not in self._sub_cache:
            R = K.restricted_to(sub)
            check_regularity(R)
            self._sub_cache[key] = R
        return self._sub_cache[key]

    def restricted(self, n: int, pts) -> SimplicialComplex:
        return self.K[n].from_base(self.nerves[n].restrict(pts))

    def pair(self, n: int, sel: Selector):
        """(complex, relative subcomplex) selected at level n."""
        K, F = self.K[n], self.frontier[n]
        rel = F if F.count() else None
        if sel.kind == "Full":
            return K.complex, None
        if sel.kind == "RelFrontier":
            return K.complex, rel
        if sel.kind == "Restrict":
            pts = np.asarray(sel.points, dtype=int)
            A = self.restricted(n, pts)
            edge = np.intersect1d(pts, self.ws.frontier)
            return A, (self.restricted(n, edge) if len(edge) else None)
        Kg = self.gcomplex(n, sel.sub)
        if sel.kind == "FixedG":
            KG = fixed_subcomplex(Kg)
            return KG, _meet(KG, rel)
        if sel.kind == "FixedG_r":
            pts = self.fixed_points(sel.r, sel.sub)
            KGr = fixed_r(Kg, self.restricted(n, pts))
            return KGr, _meet(KGr, rel)
        if sel.kind == "Quotient":
            Q, proj, _ = quotient_complex(Kg)
            if rel is None:
                return Q, None
            img = {proj.image(s) for s in rel.all_simplices()}
            return Q, Q.subcomplex(lambda s: s in img)
        raise ValueError(f"unknown selector {sel.kind!r}")

    def fixed_points(self, r: float, sub=None) -> np.ndarray:
        a = self.action
        els = tuple(range(a.group.order)) if sub is None else tuple(sub)
        return fixed_approx(self.ws, a, els, r).points

    def vertex_map(self, n: int, sel: Selector) -> np.ndarray:
        """Vertex map from level n to n+1 on the selected complexes."""
        f = self.maps[n].vertex_map
        if sel.kind != "Quotient":
            return f
        _, p0, orb0 = quotient_complex(self.gcomplex(n, sel.sub))
        _, p1, _ = quotient_complex(self.gcomplex(n + 1, sel.sub))
        return np.array([p1.vertex_map[f[o[0]]] for o in orb0], dtype=int)


def _meet(A: SimplicialComplex, B: SimplicialComplex | None):
    if B is None:
        return None
    M = A.subcomplex(lambda s: s in B)
    return M if M.count() else None


@dataclass
class DirectSystem:
    levels: list                 # HomologyRanks per term
    maps: list                   # InducedMap term i -> i+1
    terms: list = field(default_factory=list)   # (level, selector) labels

    def to_json(self) -> dict:
        return {"levels": [h.to_json() for h in self.levels],
                "map_ranks": [{str(d): m.rank(d) for d in sorted(m.matrices)} for m in self.maps]}


@dataclass
class CoarseHomologyEstimate:
    ranks: HomologyRanks
    stable_from: int | None
    certificate: str             # StableWindow | NotStabilized

    def table(self) -> dict:
        return self.ranks.table()

    def to_json(self) -> dict:
        return {"ranks": self.ranks.to_json(), "table": {str(d): r for d, r in self.table().items()},
                "stable_from": self.stable_from, "certificate": self.certificate}


def _degrees(a: HomologyRanks, b: HomologyRanks) -> list:
    top = max(list(a.ranks) + list(b.ranks) + [-1])
    cut = [t for t in (a.truncated_above, b.truncated_above) if t is not None]
    if cut:
        top = min(top, min(cut))
    return list(range(top + 1))


def system_along(tower: LevelTower, terms: list, q: int, check: bool = True) -> DirectSystem:
    """Direct system over terms (level, selector); consecutive levels differ by 0 or 1."""
    ccs, ranks, cx = [], [], []
    for n, sel in terms:
        K, L = tower.pair(n, sel)
        cc = chain_complex(K, L, q)
        ccs.append(cc)
        cx.append((K, L))
        ranks.append(cc.homology().ranks())
    maps = []
    for i in range(len(terms) - 1):
        (n0, s0), (n1, _) = terms[i], terms[i + 1]
        if n1 == n0:
            vm = np.arange(cx[i][0].nverts)
        elif n1 == n0 + 1:
            vm = tower.vertex_map(n0, s0)
        else:
            raise ValueError("terms must advance one level at a time")
        f = SimplicialMap(vm, cx[i][0], cx[i + 1][0], check=check)
        maps.append(induced_map(f, ccs[i], ccs[i + 1], _degrees(ranks[i], ranks[i + 1])))
    if check and len(maps) >= 2:
        _spot_functoriality(terms, tower, cx, ccs, ranks, maps)
    return DirectSystem(ranks, maps, [(n, s.kind) for n, s in terms])


def _spot_functoriality(terms, tower, cx, ccs, ranks, maps):
    """The composite of the first two maps induces the product of their matrices."""
    vm = []
    for i in range(2):
        (n0, s0), (n1, _) = terms[i], terms[i + 1]
        vm.append(np.arange(cx[i][0].nverts) if n1 == n0 else tower.vertex_map(n0, s0))
    f = SimplicialMap(vm[1][vm[0]], cx[0][0], cx[2][0])
    degs = [d for d in _degrees(ranks[0], ranks[2]) if d in maps[0].matrices and d in maps[1].matrices]
    comp = induced_map(f, ccs[0], ccs[2], degs)
    q = ccs[0].p
    for d in degs:
        A, B = maps[1].matrices[d], maps[0].matrices[d]
        if A.size and B.size:
            prod = mat_mul(A, B, q)
        else:
            prod = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        if not np.array_equal(np.asarray(prod) % q, comp.matrices[d] % q):
            raise IdentityFailure(f"induced maps do not compose in degree {d}")


def direct_system(tower: LevelTower, selector: Selector = REL_FRONTIER, q: int = 2,
                  check: bool = True) -> DirectSystem:
    return system_along(tower, [(n, selector) for n in range(len(tower))], q, check)


def _all_iso(m: InducedMap) -> bool:
    return all(m.is_iso(d) for d in _degrees(m.source, m.target))


def stabilized_ranks(ds: DirectSystem) -> CoarseHomologyEstimate:
    if len(ds.levels) < 2:
        raise PreconditionFailed("stabilization needs at least two levels")
    ok = [_all_iso(m) for m in ds.maps]
    start = len(ok)
    while start > 0 and ok[start - 1]:
        start -= 1
    if start >= len(ok):
        return CoarseHomologyEstimate(ds.levels[-1], None, "NotStabilized")
    return CoarseHomologyEstimate(ds.levels[start], start, "StableWindow")


# bounded fixed set -------------------------------------------------------------

@dataclass
class BoundedFixedHomology:
    estimate: CoarseHomologyEstimate
    paths: dict                  # name -> CoarseHomologyEstimate
    rho_check: bool
    k0: float
    r_grid: list

    def to_json(self) -> dict:
        return {"estimate": self.estimate.to_json(), "rho_check": self.rho_check,
                "k0": repr(float(self.k0)), "r_grid": [repr(float(r)) for r in self.r_grid],
                "paths": {k: v.to_json() for k, v in sorted(self.paths.items())}}


def _diagonal(r_grid, nlev):
    return [(min(i, nlev - 1), r) for i, r in enumerate(r_grid)]


def bounded_fixed_homology(tower: LevelTower, r_grid, q: int, sub=None,
                           density_cap=None, bfs=None) -> BoundedFixedHomology:
    """Three routes to the homology of the bounded fixed set; they must agree.

    Restricted nerves K(U_n|X_r) and fixed parts K(U_n)^G_r are followed along
    the diagonal where r and n advance together; the fixed subcomplexes
    K(U_n)^G form the third system.
    """
    a, ws = tower.action, tower.ws
    sub = tuple(range(a.group.order)) if sub is None else tuple(sorted(sub))
    if bfs is None:
        bfs = bounded_fixed_set(ws, a, sub, r_grid, density_cap)
    if not isinstance(bfs, BoundedFixedSet):
        raise BoundedFixedSetAbsent("no bounded fixed set in the scanned window")
    grid = [float(r) for r in r_grid if r >= bfs.k0]
    if len(grid) < 2:
        grid = [bfs.k0, float(r_grid[-1])] if r_grid[-1] > bfs.k0 else [bfs.k0, bfs.k0]
    diag = _diagonal(grid, len(tower))
    restrict_terms = [(n, Selector("Restrict", points=tuple(int(x) for x in tower.fixed_points(r, sub))))
                      for n, r in diag]
    fixed_r_terms = [(n, Selector("FixedG_r", r=r, sub=sub)) for n, r in diag]
    paths = {
        "restricted": stabilized_ranks(system_along(tower, restrict_terms, q)),
        "fixed_r": stabilized_ranks(system_along(tower, fixed_r_terms, q)),
        "fixed": stabilized_ranks(direct_system(tower, Selector("FixedG", sub=sub), q)),
    }
    tables = [p.table() for p in paths.values()]
    stable = all(p.certificate == "StableWindow" for p in paths.values())
    agree = stable and all(t == tables[0] for t in tables)
    est = paths["fixed"] if stable else CoarseHomologyEstimate(paths["fixed"].ranks, None, "NotStabilized")
    return BoundedFixedHomology(est, paths, agree, bfs.k0, grid)


# classification ------------------------------------------------------------------

@dataclass
class SphereVerdict:
    is_coarse_sphere: bool
    dimension: int | None
    field: int

    def to_json(self) -> dict:
        return {"is_coarse_sphere": self.is_coarse_sphere, "dimension": self.dimension,
                "field": self.field}


def classify_sphere(est: CoarseHomologyEstimate) -> SphereVerdict:
    if est.certificate != "StableWindow":
        raise NotStabilized("ranks did not stabilize in the window")
    t = est.table()
    ok = len(t) == 1 and next(iter(t.values())) == 1
    return SphereVerdict(ok, next(iter(t)) if ok else None, est.ranks.field)


def _is_p_power(n: int, p: int) -> bool:
    while n % p == 0 and n > 1:
        n //= p
    return n == 1


def normal_series(group, p: int) -> list:
    """Subgroups 1 = H_0 < H_1 < ... < H_k = G, each normal of index p in the next."""
    if not _is_p_power(group.order, p):
        raise PreconditionFailed(f"group of order {group.order} is not a {p}-group")
    subs = group.subgroups()
    cur = frozenset(range(group.order))
    chain = [cur]
    while len(cur) > 1:
        nxt = None
        for H in subs:
            if len(H) * p == len(cur) and H <= cur and all(
                    int(group.mult[group.mult[g, h], group.inv[g]]) in H for g in cur for h in H):
                nxt = H
                break
        if nxt is None:
            raise PreconditionFailed("no normal subgroup of index p found")
        cur = nxt
        chain.append(cur)
    return [tuple(sorted(H)) for H in reversed(chain)]


@dataclass
class SphereSeriesReport:
    m: int
    p: int
    stages: list                 # (subgroup names, r)
    parity_ok: bool
    ok: bool

    def to_json(self) -> dict:
        return {"m": self.m, "p": self.p, "parity_ok": self.parity_ok, "ok": self.ok,
                "stages": [{"subgroup": list(s), "r": r} for s, r in self.stages]}


def sphere_series_check(tower: LevelTower, p: int, scales, density_cap=None,
                    max_dim_cap: int | None = None) -> SphereSeriesReport:
    """Walk a normal series of the p-group and classify each bounded fixed set mod p."""
    a, ws = tower.action, tower.ws
    if a is None:
        raise PreconditionFailed("no group action")
    series = normal_series(a.group, p)
    x = classify_sphere(stabilized_ranks(direct_system(tower, REL_FRONTIER, p)))
    if not x.is_coarse_sphere:
        raise PreconditionFailed("X is not a coarse homology sphere mod p")
    m = x.dimension
    scan = tameness_scan(ws, a, scales, density_cap)
    if not is_tame(scan):
        bad = [k for k, v in scan.items() if not isinstance(v, BoundedFixedSet)]
        raise PreconditionFailed(f"action not tame in window (subgroup {bad[0]})")
    if max_dim_cap is not None and any(nv.complex.dim > max_dim_cap for nv in tower.nerves):
        raise PreconditionFailed("nerve dimension exceeds the finitistic cap")
    stages, prev = [], m
    parity_ok = ok = True
    for H in series:
        if len(H) == 1:
            stages.append(((a.group.names[H[0]],), m))
            continue
        bfh = bounded_fixed_homology(tower, scales, p, H, density_cap, scan[H])
        v = classify_sphere(bfh.estimate)
        if not (bfh.rho_check and v.is_coarse_sphere):
            ok = False
            stages.append((tuple(a.group.names[g] for g in H), None))
            continue
        r = v.dimension
        ok &= 0 <= r <= prev
        if p % 2 == 1:
            parity_ok &= (prev - r) % 2 == 0
        stages.append((tuple(a.group.names[g] for g in H), r))
        prev = r
    return SphereSeriesReport(m, p, stages, parity_ok, ok and parity_ok)


# scenario pipeline ----------------------------------------------------------------

@dataclass
class RunOptions:
    prime: int | None = None
    field: int | None = None
    max_dim: int | None = None
    scales: list | None = None
    seed: int = 0
    oracle: bool = False
    rule: str = "first"
    smith_levels: bool = True


def _f(x):
    if x is None:
        return None
    x = float(x)
    return "inf" if np.isinf(x) else repr(x)


def _status(report: dict) -> int:
    if report["identity_failures"]:
        return 2
    return 3 if report["honest_negatives"] else 0


def _smith_on_level(K, L, p, q, g):
    from .smith import (euler_congruence_check, exact_triangle_check, orbit_iso_check,
                        second_sequence_check, smith_inequalities_check, smith_operators,
                        transfer_maps)
    out = {}
    ops = smith_operators(K.group, p, g)
    for name, op in ops.items():
        rep = exact_triangle_check(K, L, op)
        ineq = smith_inequalities_check(K, L, op, report=rep)
        out[name] = {"triangle_ok": rep.ok, "inequalities": [list(t) for t in ineq],
                     "inequalities_ok": all(t[3] >= 0 for t in ineq)}
    oi = orbit_iso_check(K, L, p, g)
    out["orbit_iso_ok"] = oi.ok
    out["second_sequence_ok"] = second_sequence_check(K, L, p, g)["ok"]
    tr = transfer_maps(K, L, q)
    out["transfer_ok"] = tr.ok
    out["transfer_iso_ok"] = tr.iso_ok
    # chain-level Euler identity on the level complex
    KG = fixed_subcomplex(K)
    LG = _meet(KG, L)
    Q, proj, _ = quotient_complex(K)
    LQ = None
    if L is not None:
        img = {proj.image(s) for s in L.all_simplices()}
        LQ = Q.subcomplex(lambda s: s in img)
    h = [chain_complex(A, B, p).homology().ranks() for A, B in ((K.complex, L), (KG, LG), (Q, LQ))]
    out["euler_ok"] = euler_congruence_check(h[0], h[1], h[2], p).ok
    return out


def _level_checks_ok(d: dict) -> bool:
    for k, v in d.items():
        if isinstance(v, dict):
            if not (v["triangle_ok"] and v["inequalities_ok"]):
                return False
        elif k != "transfer_iso_ok" and v is False:
            return False
    return d.get("transfer_iso_ok") is not False


def run_scenario(sc, opts: RunOptions | None = None) -> dict:
    """Full pipeline on a Scenario; returns a JSON-ready report (deterministic)."""
    from .metric import validate_action, validate_metric
    opts = opts or RunOptions()
    p = opts.prime or sc.p
    q = opts.field or sc.q
    scales = [float(s) for s in (opts.scales or sc.scales)]
    ws, a = sc.ws, sc.action
    rep = {"schema": REPORT_SCHEMA, "scenario": sc.name, "points": int(ws.n),
           "frontier_points": int(len(ws.frontier)), "prime": p, "field": q,
           "seed": opts.seed, "identity_failures": [], "honest_negatives": [], "sections": {}}
    S = rep["sections"]
    try:
        if opts.oracle or ws.n <= 600:
            v = validate_metric(ws.space)
            S["metric"] = {"ok": v.ok, "note": v.note}
            if not v.ok:
                rep["identity_failures"].append("metric")
        if a is not None:
            v = validate_action(a, ws.space, seed=opts.seed)
            S["action"] = {"ok": v.ok, "note": v.note}
            if not v.ok:
                rep["identity_failures"].append("action")
            scan = tameness_scan(ws, a, scales, sc.density_cap)
            S["fixed_sets"] = {",".join(map(str, k)): _bfs_json(v) for k, v in sorted(scan.items())}
            whole = tuple(range(a.group.order))
            if not isinstance(scan[whole], BoundedFixedSet):
                rep["honest_negatives"].append("NoneExists")
            if "cayley" in sc.extra:
                cert = centralizer_subspace(sc.extra["cayley"], scales, sc.density_cap)
                S["centralizer"] = {"size": int(len(cert.points)), "ok": cert.ok, "cap": _f(cert.cap),
                                    "densities": {_f(k): _f(c) for k, c in sorted(cert.densities.items())}}
        if sc.levels:
            md = opts.max_dim or sc.max_dim
            system = system_from_levels(ws, sc.levels, a, opts.rule)
            S["coarsening"] = {"R": [_f(r) for r in system.R], "lebesgue": [_f(x) for x in system.leb],
                               "sizes": [len(c) for c in system.levels],
                               "equivariant": [bool(pr.equivariant) for pr in system.projections]}
            tower = LevelTower(system, md)
            S["coarsening"]["subdivisions"] = tower.subdivisions
            est_x = stabilized_ranks(direct_system(tower, REL_FRONTIER if len(ws.frontier) else FULL, q))
            S["homology"] = est_x.to_json()
            if est_x.certificate != "StableWindow":
                rep["honest_negatives"].append("NotStabilized")
            else:
                S["homology"]["sphere"] = classify_sphere(est_x).to_json()
            if a is not None:
                _equivariant_sections(rep, sc, tower, p, q, scales, opts, scan)
    except IdentityFailure as e:
        rep["identity_failures"].append(f"{e.module}: {e}")
    except CoarseSmithError as e:
        rep["errors"] = [f"{e.module}: {type(e).__name__}: {e}"]
        if isinstance(e, (NotStabilized, BoundedFixedSetAbsent)):
            rep["honest_negatives"].append(type(e).__name__)
        else:
            rep["identity_failures"].append(f"{e.module}: {type(e).__name__}")
    rep["exit_code"] = _status(rep)
    return rep


def _bfs_json(v) -> dict:
    r = v.report
    out = {"verdict": r.verdict, "k0": _f(r.k0), "c0": _f(r.c0), "sizes": r.sizes,
           "requirements": [_f(x) for x in r.requirements]}
    return out


def _equivariant_sections(rep, sc, tower, p, q_field, scales, opts, scan):
    S = rep["sections"]
    a = tower.action
    G = a.group
    whole = tuple(range(G.order))
    cyclic_p = G.order == p
    if opts.smith_levels and cyclic_p:
        g = next(x for x in range(G.order) if x != G.identity)
        lv = []
        for n in range(len(tower)):
            K, F = tower.K[n], tower.frontier[n]
            d = _smith_on_level(K, F if F.count() else None, p, q_field if q_field != p else _other_prime(p), g)
            lv.append(d)
            if not _level_checks_ok(d):
                rep["identity_failures"].append(f"smith level {n}")
        S["smith_levels"] = lv
    if not isinstance(scan[whole], BoundedFixedSet):
        return
    bfh = bounded_fixed_homology(tower, scales, p, whole, sc.density_cap, scan[whole])
    S["bounded_fixed_homology"] = bfh.to_json()
    if not bfh.rho_check:
        if bfh.estimate.certificate != "StableWindow":
            rep["honest_negatives"].append("NotStabilized")
        else:
            rep["identity_failures"].append("rho_check")
        return
    S["bounded_fixed_homology"]["sphere"] = classify_sphere(bfh.estimate).to_json()
    if cyclic_p:
        est_x = stabilized_ranks(direct_system(tower, REL_FRONTIER, p))
        est_q = stabilized_ranks(direct_system(tower, Selector("Quotient"), p))
        fix = bfh.estimate if bfh.estimate.ranks.field == p else None
        if est_x.certificate == est_q.certificate == "StableWindow" and fix is not None:
            cx, cf, cq = (euler_characteristic(e.ranks) for e in (est_x, fix, est_q))
            S["euler"] = {"chi_X": cx, "chi_fixed": cf, "chi_quotient": cq,
                          "residual": cx + (p - 1) * cf - p * cq}
            if S["euler"]["residual"] != 0:
                rep["identity_failures"].append("euler")
    if _is_p_power(G.order, p) and G.order > 1:
        try:
            ta = sphere_series_check(tower, p, scales, sc.density_cap)
            S["sphere_series"] = ta.to_json()
            if not ta.ok:
                rep["identity_failures"].append("sphere_series")
        except PreconditionFailed as e:
            S["sphere_series"] = {"precondition_failed": str(e)}


def _other_prime(p: int) -> int:
    return 3 if p == 2 else 2


def report_json(rep: dict) -> str:
    return json.dumps(rep, sort_keys=True, indent=1)
