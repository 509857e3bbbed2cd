"""Smith operators, special homology, the exact triangle, inequalities, orbit
isomorphism, transfer maps and the Euler identity for regular Z/p-complexes."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .complexes import (GComplex, SimplicialComplex, check_regularity, fixed_subcomplex,
                        quotient_complex)
from .errors import (ChainSequenceNotExact, NotCyclicOfOrderP, NotInvariant, NotRegular)
from .homology import (ChainComplex, EmbeddedComplex, HomologyRanks, InducedMap,
                       chain_complex, euler_characteristic, homology_ranks,
                       map_on_homology, sort_sign)
from .linalg import Echelon, axpy, check_prime, dense_rank, mat_mul, nullspace
from .metric import GroupSpec


def _ring_mul(a, b, p):
    out = [0] * p
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[(i + j) % p] = (out[(i + j) % p] + x * y) % p
    return out


@dataclass
class SmithOperator:
    """An element of F_p[Z/p] written as coefficients of 1, g, ..., g^{p-1}."""
    kind: str          # "sigma" or "tau"
    j: int             # power of tau (sigma is tau^{p-1})
    p: int
    generator: int
    coeffs: list

    @property
    def name(self) -> str:
        return "sigma" if self.kind == "sigma" else f"tau^{self.j}"

    def complement(self) -> "SmithOperator":
        return tau_power(self.p, self.p - self.j, self.generator)


def tau_power(p: int, j: int, g: int) -> SmithOperator:
    if not 1 <= j <= p - 1:
        raise ValueError("tau power must lie in 1..p-1")
    coeffs = [((-1) ** k * comb(j, k)) % p if k <= j else 0 for k in range(p)]
    kind = "sigma" if j == p - 1 and p > 2 else "tau"
    return SmithOperator(kind, j, p, g, coeffs)


def sigma(p: int, g: int) -> SmithOperator:
    return SmithOperator("sigma", p - 1, p, g, [1] * p)


def smith_operators(group: GroupSpec, p: int, g: int) -> dict:
    """sigma and all tau^j for the cyclic subgroup generated by g, identities verified."""
    check_prime(p)
    if group.element_order(g) != p:
        raise NotCyclicOfOrderP(f"element {group.names[g]} does not have order {p}")
    s = sigma(p, g)
    t = tau_power(p, 1, g)
    zero = [0] * p
    assert _ring_mul(s.coeffs, t.coeffs, p) == zero, "sigma*tau must vanish"
    assert tau_power(p, p - 1, g).coeffs == s.coeffs, "sigma must equal tau^{p-1}"
    ops = {"sigma": s}
    for j in range(1, p):
        tj = tau_power(p, j, g)
        assert _ring_mul(tj.coeffs, tj.complement().coeffs, p) == zero
        ops[f"tau^{j}"] = tj
    return ops


class ChainAction:
    """Signed action of g^k on the relative simplicial chains of an invariant pair."""

    def __init__(self, K: GComplex, cc: ChainComplex, g: int):
        self.cc = cc
        self.p = cc.p
        G = K.group
        self.powers = [G.identity]
        x = g
        while x != G.identity:
            self.powers.append(int(x))
            x = G.mult[x, g]
        self.maps = []
        for h in self.powers:
            per_deg = []
            for d, basis in enumerate(cc.basis):
                pos = {s: i for i, s in enumerate(basis)}
                tgt = np.empty(len(basis), dtype=int)
                sgn = np.empty(len(basis), dtype=int)
                P = K.vperm[h]
                for i, s in enumerate(basis):
                    img, sign = sort_sign(int(P[v]) for v in s)
                    j = pos.get(img)
                    if j is None:
                        raise NotInvariant(f"{s} maps into the relative subcomplex")
                    tgt[i], sgn[i] = j, sign
                per_deg.append((tgt, sgn))
            self.maps.append(per_deg)

    def act(self, k: int, d: int, v: dict) -> dict:
        tgt, sgn = self.maps[k % len(self.powers)][d]
        p = self.p
        return {int(tgt[i]): (int(sgn[i]) * c) % p for i, c in v.items()}

    def apply(self, op: SmithOperator, d: int, v: dict) -> dict:
        out = {}
        for k, c in enumerate(op.coeffs):
            if c:
                axpy(out, c, self.act(k, d, v), self.p)
        return out


def _cyclic(K: GComplex, g: int) -> tuple[GComplex, int]:
    """K over the cyclic subgroup generated by g, and the index of g there."""
    G = K.group
    if G.element_order(g) == G.order:
        return K, g
    pw, x = [G.identity], g
    while x != G.identity:
        pw.append(int(x))
        x = int(G.mult[x, g])
    C = K.restricted_to(pw)
    _require_regular(C)
    return C, sorted(pw).index(g)


def _require_regular(K: GComplex):
    if K.regularity != "Regular" and check_regularity(K)[0] != "Regular":
        raise NotRegular("Smith theory needs a regular action")


def _require_invariant(K: GComplex, L):
    if L is not None and not K.is_invariant(L):
        raise NotInvariant("relative subcomplex is not invariant")


@dataclass
class SpecialSubcomplex:
    operator: SmithOperator
    chains: EmbeddedComplex
    action: ChainAction

    @property
    def cc(self) -> ChainComplex:
        return self.chains.cc


def special_subcomplex(K: GComplex, L, op: SmithOperator, ambient: ChainComplex | None = None,
                       action: ChainAction | None = None) -> SpecialSubcomplex:
    _require_regular(K)
    _require_invariant(K, L)
    cc = ambient if ambient is not None else chain_complex(K.complex, L, op.p)
    act = action if action is not None else ChainAction(K, cc, op.generator)
    span = [[act.apply(op, d, {i: 1}) for i in range(n)] for d, n in enumerate(cc.dims)]
    emb = EmbeddedComplex(cc, span)
    for d in range(len(span)):
        for v in emb.ech[d].rows.values():
            assert not act.apply(op.complement(), d, v), "rho-bar must kill rho chains"
    return SpecialSubcomplex(op, emb, act)


def special_homology(s: SpecialSubcomplex) -> HomologyRanks:
    return homology_ranks(s.cc)


def _fixed_pair(K: GComplex, L, cc: ChainComplex):
    """Basis indices (per degree) of C(K^G, L^G) inside C(K, L)."""
    KG = fixed_subcomplex(K, require_regular=False)
    out = []
    for d, basis in enumerate(cc.basis):
        out.append([i for i, s in enumerate(basis) if s in KG])
    LG = L.subcomplex(lambda s: s in KG) if L is not None else None
    return KG, LG, out


@dataclass
class SmithTriangleReport:
    operator: str
    p: int
    ranks_total: dict
    ranks_rho: dict
    ranks_rhobar: dict
    ranks_fixed: dict
    map_ranks: dict = field(default_factory=dict)    # name -> {d: rank}
    certificates: list = field(default_factory=list)  # (node, degree, ok)
    chain_exact: bool = True

    @property
    def ok(self) -> bool:
        return self.chain_exact and all(c[2] for c in self.certificates)

    def to_json(self) -> dict:
        enc = lambda r: {str(d): v for d, v in sorted(r.items())}
        return {"operator": self.operator, "p": self.p,
                "ranks": {"total": enc(self.ranks_total), "rho": enc(self.ranks_rho),
                          "rhobar": enc(self.ranks_rhobar), "fixed": enc(self.ranks_fixed)},
                "map_ranks": {k: enc(v) for k, v in self.map_ranks.items()},
                "certificates": [{"node": n, "degree": d, "ok": ok} for n, d, ok in self.certificates],
                "chain_exact": self.chain_exact, "ok": self.ok}


def exact_triangle_check(K: GComplex, L, op: SmithOperator) -> SmithTriangleReport:
    _require_regular(K)
    K, g = _cyclic(K, op.generator)
    op = SmithOperator(op.kind, op.j, op.p, g, op.coeffs)
    _require_invariant(K, L)
    p = op.p
    cc = chain_complex(K.complex, L, p)
    act = ChainAction(K, cc, op.generator)
    bar = op.complement()
    rho = special_subcomplex(K, L, op, cc, act)
    rhobar = special_subcomplex(K, L, bar, cc, act)
    KG, LG, fixed_idx = _fixed_pair(K, L, cc)
    span_A = []
    for d in range(len(cc.dims)):
        vs = [dict(v) for v in rhobar.chains.ech[d].rows.values()]
        vs += [{i: 1} for i in fixed_idx[d]]
        span_A.append(vs)
    A = EmbeddedComplex(cc, span_A)
    # chain level exactness of 0 -> A -> C -> rhoC -> 0
    for d in range(len(cc.dims)):
        nA, nR, nC = len(A.lows[d]), len(rho.chains.lows[d]), cc.dims[d]
        nB, nF = len(rhobar.chains.lows[d]), len(fixed_idx[d])
        if nA != nB + nF:
            raise ChainSequenceNotExact(f"rho-bar chains meet fixed chains in degree {d}")
        if nA + nR != nC:
            raise ChainSequenceNotExact(f"dimensions {nA} + {nR} != {nC} in degree {d}")
        for v in A.ech[d].rows.values():
            if act.apply(op, d, v):
                raise ChainSequenceNotExact(f"rho does not kill the kernel in degree {d}")
    HA, HC, HR = A.cc.homology(), cc.homology(), rho.cc.homology()
    rA, rC, rR = HA.ranks(), HC.ranks(), HR.ranks()
    fix_cc = chain_complex(KG, LG, p) if KG.count() else None
    r_fix = homology_ranks(fix_cc).ranks if fix_cc is not None else {}
    r_bar = homology_ranks(rhobar.cc).ranks
    top = len(cc.dims) - 1
    degs = range(top + 1)
    for d in degs:
        if rA.rank(d) != r_bar.get(d, 0) + r_fix.get(d, 0):
            raise ChainSequenceNotExact(f"direct sum rank mismatch in degree {d}")

    # i_*: H(A) -> H(C)
    def i_star(d, z):
        return A.to_ambient(d, z)
    # rho_*: H(C) -> H(rhoC)

    def rho_star(d, z):
        return rho.chains.to_local(d, act.apply(op, d, z))
    lift = []
    for d in degs:
        E = Echelon(p, track=True)
        for i in range(cc.dims[d]):
            E.add(act.apply(op, d, {i: 1}), tag=i)
        lift.append(E)

    def delta(d, z):
        w = rho.chains.to_ambient(d, z)
        x = lift[d].solve(w)
        return A.to_local(d - 1, cc.boundary(d, x))

    mi = _matrices(i_star, A.cc, cc, degs, HA, HC)
    mr = _matrices(rho_star, cc, rho.cc, degs, HC, HR)
    md = {}
    for d in degs:
        ns, nt = rR.rank(d), (rA.rank(d - 1) if d >= 1 else 0)
        M = np.zeros((nt, ns), dtype=np.int64)
        if d >= 1:
            for k in range(ns):
                M[:, k] = HA.coordinates(d - 1, delta(d, HR.cycle(d, k)))
        md[d] = M
    rk = lambda M: dense_rank(M, p) if M.size else 0
    certs = []
    for d in degs:
        # exactness at H_d(C): im i_* = ker rho_*
        ok = rk(mi[d]) == rC.rank(d) - rk(mr[d]) and not np.any(mat_mul(mr[d], mi[d], p))
        certs.append(("H(K,L)", d, bool(ok)))
        # at H_d(rhoC): im rho_* = ker delta
        ok = rk(mr[d]) == rR.rank(d) - rk(md[d]) and not np.any(mat_mul(md[d], mr[d], p))
        certs.append(("H^rho", d, bool(ok)))
        # at H_{d}(A): im delta_{d+1} = ker i_*
        nxt = md.get(d + 1, np.zeros((rA.rank(d), 0), dtype=np.int64))
        ok = rk(nxt) == rA.rank(d) - rk(mi[d]) and not np.any(mat_mul(mi[d], nxt, p))
        certs.append(("H^rhobar+H(K^G,L^G)", d, bool(ok)))
    rep = SmithTriangleReport(op.name, p, dict(rC.ranks), dict(rR.ranks), dict(r_bar), dict(r_fix),
                              {"i": {d: rk(mi[d]) for d in degs}, "rho": {d: rk(mr[d]) for d in degs},
                               "delta": {d: rk(md[d]) for d in degs}}, certs)
    return rep


def _matrices(fn, src: ChainComplex, tgt: ChainComplex, degs, Hs, Ht) -> dict:
    out = {}
    rs, rt = Hs.ranks(), Ht.ranks()
    for d in degs:
        M = np.zeros((rt.rank(d), rs.rank(d)), dtype=np.int64)
        for k in range(rs.rank(d)):
            M[:, k] = Ht.coordinates(d, fn(d, Hs.cycle(d, k)))
        out[d] = M
    return out


def smith_inequality_from_ranks(r_rho: dict, r_fix: dict, r_total: dict, n_range=None) -> list:
    """Per n: (n, lhs, rhs, margin) for rk H^rho_n + sum_{i>=n} rk H^G_i <= sum_{i>=n} rk H_i."""
    degs = set(r_rho) | set(r_fix) | set(r_total)
    top = max(degs) if degs else 0
    out = []
    for n in (n_range if n_range is not None else range(top + 1)):
        lhs = r_rho.get(n, 0) + sum(v for i, v in r_fix.items() if i >= n)
        rhs = sum(v for i, v in r_total.items() if i >= n)
        out.append((n, lhs, rhs, rhs - lhs))
    return out


def smith_inequalities_check(K: GComplex, L, op: SmithOperator, n_range=None,
                             report: SmithTriangleReport | None = None) -> list:
    rep = report if report is not None else exact_triangle_check(K, L, op)
    return smith_inequality_from_ranks(rep.ranks_rho, rep.ranks_fixed, rep.ranks_total, n_range)


def _image_complex(Q: SimplicialComplex, proj, S: SimplicialComplex | None) -> set:
    if S is None:
        return set()
    return {tuple(sorted(set(int(proj.vertex_map[v]) for v in s))) for s in S.all_simplices()}


@dataclass
class OrbitIsoReport:
    sigma_ranks: dict
    quotient_ranks: dict
    ok: bool


def orbit_iso_check(K: GComplex, L, p: int, g: int | None = None) -> OrbitIsoReport:
    _require_regular(K)
    _require_invariant(K, L)
    if g is None:
        g = next(x for x in range(K.group.order) if x != K.group.identity)
    K, g = _cyclic(K, g)
    s = special_subcomplex(K, L, sigma(p, g))
    Q, proj, _ = quotient_complex(K)
    KG = fixed_subcomplex(K, require_regular=False)
    rel = _image_complex(Q, proj, KG) | _image_complex(Q, proj, L)
    sub = Q.subcomplex(lambda t: t in rel)
    hq = homology_ranks(chain_complex(Q, sub, p)).ranks
    hs = special_homology(s).ranks
    degs = set(hq) | set(hs)
    ok = all(hq.get(d, 0) == hs.get(d, 0) for d in degs)
    return OrbitIsoReport(dict(hs), dict(hq), ok)


def second_sequence_check(K: GComplex, L, p: int, g: int) -> dict:
    """0 -> sigma C -> tau^j C -> tau^{j+1} C -> 0 at chain level, and the Euler relation."""
    _require_regular(K)
    cc = chain_complex(K.complex, L, p)
    act = ChainAction(K, cc, g)
    subs = {j: special_subcomplex(K, L, tau_power(p, j, g), cc, act) for j in range(1, p)}
    sig = subs[p - 1]
    tau1 = tau_power(p, 1, g)
    chis = {j: euler_characteristic(homology_ranks(s.cc)) for j, s in subs.items()}
    ok = True
    for j in range(1, p - 1):
        for d in range(len(cc.dims)):
            nj, nj1, ns = (len(subs[j].chains.lows[d]), len(subs[j + 1].chains.lows[d]),
                           len(sig.chains.lows[d]))
            ok &= nj == nj1 + ns
            for v in sig.chains.ech[d].rows.values():
                ok &= subs[j].chains.contains(d, v) and not act.apply(tau1, d, v)
        ok &= chis[j] == chis[j + 1] + chis[p - 1]
    return {"ok": bool(ok), "chi": chis}


# transfer ---------------------------------------------------------------------

@dataclass
class TransferReport:
    q: int
    order: int
    pi: dict
    mu: dict
    residual_pi_mu: dict
    residual_mu_pi: dict
    iso_checked: bool
    iso_ok: bool | None

    @property
    def ok(self) -> bool:
        res = all(v == 0 for v in self.residual_pi_mu.values()) and \
            all(v == 0 for v in self.residual_mu_pi.values())
        return res and (self.iso_ok is not False)

    def to_json(self) -> dict:
        return {"field": self.q, "group_order": self.order,
                "pi": {str(d): m.tolist() for d, m in self.pi.items()},
                "mu": {str(d): m.tolist() for d, m in self.mu.items()},
                "residual_pi_mu": {str(d): v for d, v in self.residual_pi_mu.items()},
                "residual_mu_pi": {str(d): v for d, v in self.residual_mu_pi.items()},
                "iso_checked": self.iso_checked, "iso_ok": self.iso_ok, "ok": self.ok}


def transfer_maps(K: GComplex, L, q: int) -> TransferReport:
    """pi_*, mu_* on homology with pi_* mu_* = |G| and mu_* pi_* = sum of g_*."""
    _require_regular(K)
    _require_invariant(K, L)
    q = check_prime(q)
    G = K.group
    Q, proj, _ = quotient_complex(K)
    LQ = Q.subcomplex(lambda t: t in _image_complex(Q, proj, L)) if L is not None else None
    cK = chain_complex(K.complex, L, q)
    cQ = chain_complex(Q, LQ, q)
    vm = proj.vertex_map
    qpos = [{s: i for i, s in enumerate(b)} for b in cQ.basis]
    # chosen lift for each quotient simplex, oriented so pi(lift) = +simplex
    lifts = [dict() for _ in cQ.basis]
    for d, basis in enumerate(cK.basis):
        for i, s in enumerate(basis):
            img, sign = sort_sign(int(vm[v]) for v in s)
            j = qpos[d].get(img)
            if j is not None and j not in lifts[d]:
                lifts[d][j] = (i, sign)
    acts = []
    for g in range(G.order):
        acts.append(ChainAction(K, cK, g) if g != G.identity else None)

    def g_act(g, d, v):
        if g == G.identity:
            return dict(v)
        return acts[g].act(1, d, v)

    def pi(d, v):
        out = {}
        for i, c in v.items():
            img, sign = sort_sign(int(vm[x]) for x in cK.basis[d][i])
            j = qpos[d].get(img)
            if j is not None and sign:
                axpy(out, sign * c, {j: 1}, q)
        return out

    def mu(d, v):
        out = {}
        for j, c in v.items():
            i, sign = lifts[d][j]
            base = {i: sign % q}
            for g in range(G.order):
                axpy(out, c, g_act(g, d, base), q)
        return out

    # chain level identities
    for d in range(len(cQ.dims)):
        for j in range(cQ.dims[d]):
            if pi(d, mu(d, {j: 1})) != ({j: G.order % q} if G.order % q else {}):
                raise ChainSequenceNotExact("pi mu != |G| at chain level")
    degs = range(len(cQ.dims))
    Pm = map_on_homology(pi, cK, cQ, degs).matrices
    Mm = map_on_homology(mu, cQ, cK, degs).matrices
    gm = [map_on_homology(lambda d, v, g=g: g_act(g, d, v), cK, cK, degs).matrices
          for g in range(G.order)]
    r1, r2 = {}, {}
    for d in degs:
        nQ = Pm[d].shape[0]
        lhs = mat_mul(Pm[d], Mm[d], q)
        r1[d] = int(np.count_nonzero((lhs - G.order * np.eye(nQ, dtype=np.int64)) % q))
        S = sum(gm[g][d] for g in range(G.order)) % q
        r2[d] = int(np.count_nonzero((mat_mul(Mm[d], Pm[d], q) - S) % q))
    iso_checked = G.order % q != 0
    iso_ok = None
    if iso_checked:
        iso_ok = True
        for d in degs:
            nK = Pm[d].shape[1]
            if nK == 0:
                iso_ok &= Pm[d].shape[0] == 0
                continue
            stack = np.vstack([(gm[g][d] - np.eye(nK, dtype=np.int64)) % q for g in range(G.order)])
            inv = nullspace(stack, q)
            img = mat_mul(Pm[d], inv, q)
            iso_ok &= inv.shape[1] == Pm[d].shape[0] and (dense_rank(img, q) if img.size else 0) == inv.shape[1]
        iso_ok = bool(iso_ok)
    return TransferReport(q, G.order, Pm, Mm, r1, r2, iso_checked, iso_ok)


# Euler identity ---------------------------------------------------------------

@dataclass
class EulerReport:
    chi_X: int
    chi_fixed: int
    chi_quotient: int
    p: int
    residual: int
    congruence: bool

    @property
    def ok(self) -> bool:
        return self.residual == 0 and self.congruence


def euler_congruence_check(h_X: HomologyRanks, h_fixed: HomologyRanks, h_quot: HomologyRanks,
                           p: int) -> EulerReport:
    cx, cf, cq = (euler_characteristic(h) for h in (h_X, h_fixed, h_quot))
    res = cx + (p - 1) * cf - p * cq
    return EulerReport(cx, cf, cq, p, res, (cf - cx) % p == 0)


def induced_iso(m: InducedMap, d: int) -> bool:
    return m.is_iso(d)
