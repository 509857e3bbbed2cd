"""Sparse and dense linear algebra over the prime field F_p.

Sparse vectors are plain ``dict[int, int]`` mapping a basis index to a
nonzero residue.  The "low" of a vector is its largest index; echelon
bases keep one vector per low, which is what column reduction, cycle
extraction and coordinate solving all need.
"""
from __future__ import annotations

import numpy as np

from .errors import NotPrime

SparseVec = dict


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    i = 2
    while i * i <= q:
        if q % i == 0:
            return False
        i += 1
    return True


def check_prime(q: int) -> int:
    if not isinstance(q, (int, np.integer)) or not is_prime(int(q)):
        raise NotPrime(f"{q!r} is not prime")
    return int(q)


def axpy(y: SparseVec, a: int, x: SparseVec, p: int) -> None:
    """y += a*x in place, dropping entries that become zero."""
    if a % p == 0:
        return
    for k, v in x.items():
        nv = (y.get(k, 0) + a * v) % p
        if nv:
            y[k] = nv
        else:
            y.pop(k, None)


def scale(x: SparseVec, a: int, p: int) -> SparseVec:
    a %= p
    if a == 0:
        return {}
    return {k: (v * a) % p for k, v in x.items()}


def add(x: SparseVec, y: SparseVec, p: int) -> SparseVec:
    out = dict(x)
    axpy(out, 1, y, p)
    return out


def normalize(x: dict, p: int) -> SparseVec:
    return {k: v % p for k, v in x.items() if v % p}


class Echelon:
    """Echelon basis of a subspace of F_p^n, one stored vector per low.

    Each stored vector remembers how it was built from the vectors passed
    to :meth:`add` (``tag`` coordinates), so the basis can also be used to
    solve ``x = sum c_i * input_i``.
    """

    def __init__(self, p: int, track: bool = False):
        self.p = p
        self.track = track
        self.rows: dict[int, SparseVec] = {}
        self.prov: dict[int, SparseVec] = {}

    def __len__(self):
        return len(self.rows)

    def _reduce_all(self, v: SparseVec) -> tuple[SparseVec, SparseVec]:
        p = self.p
        r = dict(v)
        comb: SparseVec = {}
        keep: SparseVec = {}
        while r:
            low = max(r)
            row = self.rows.get(low)
            if row is None:
                keep[low] = r.pop(low)
                continue
            c = r[low]
            axpy(r, -c, row, p)
            comb[low] = (comb.get(low, 0) + c) % p
        return keep, comb

    def add(self, v: SparseVec, tag: int | None = None) -> bool:
        """Insert v; returns False if v was already in the span."""
        p = self.p
        r = dict(v)
        prov: SparseVec = {tag: 1} if (self.track and tag is not None) else {}
        while r:
            low = max(r)
            row = self.rows.get(low)
            if row is None:
                inv = pow(r[low], -1, p)
                r = scale(r, inv, p)
                self.rows[low] = r
                if self.track:
                    self.prov[low] = scale(prov, inv, p)
                return True
            c = r[low]
            axpy(r, -c, row, p)
            if self.track:
                axpy(prov, -c, self.prov[low], p)
        return False

    def contains(self, v: SparseVec) -> bool:
        r, _ = self._reduce_all(v)
        return not r

    def coords(self, v: SparseVec) -> SparseVec:
        """Coordinates of v in the stored rows (keyed by low); raises if v not in span."""
        r, comb = self._reduce_all(v)
        if r:
            raise ValueError("vector not in span")
        return {k: c for k, c in comb.items() if c}

    def solve(self, v: SparseVec) -> SparseVec:
        """Express v as a combination of the tagged input vectors."""
        if not self.track:
            raise ValueError("Echelon built without tracking")
        comb = self.coords(v)
        out: SparseVec = {}
        for low, c in comb.items():
            axpy(out, c, self.prov[low], self.p)
        return out


def reduce_columns(cols: list[SparseVec], p: int, clear: set | None = None,
                   track: bool = False):
    """Left-to-right column reduction (distinct lows) of a boundary matrix.

    ``clear`` lists column indices known to reduce to zero (the clearing
    optimisation); they are skipped.  Returns ``(R, pivot_of_low, V)`` where
    ``R[j]`` is the reduced column, ``pivot_of_low[low] = j`` and ``V[j]``
    (when tracked) records ``R[j] = sum V[j][k] * cols[k]``.
    """
    R: list[SparseVec] = [None] * len(cols)  # type: ignore[list-item]
    V: list[SparseVec | None] = [None] * len(cols)
    pivot_of_low: dict[int, int] = {}
    clear = clear or set()
    for j, col in enumerate(cols):
        if j in clear:
            R[j] = {}
            continue
        r = dict(col)
        v = {j: 1} if track else None
        while r:
            low = max(r)
            k = pivot_of_low.get(low)
            if k is None:
                break
            rk = R[k]
            c = (r[low] * pow(rk[low], -1, p)) % p
            axpy(r, -c, rk, p)
            if track:
                axpy(v, -c, V[k], p)
        R[j] = r
        V[j] = v
        if r:
            pivot_of_low[max(r)] = j
    return R, pivot_of_low, V


def sparse_rank(cols: list[SparseVec], p: int) -> int:
    _, piv, _ = reduce_columns(cols, p)
    return len(piv)


def dense_rank(A, p: int) -> int:
    """Rank of a dense integer matrix over F_p by plain Gaussian elimination.

    Independent of the sparse path; used as an oracle.
    """
    M = np.array(A, dtype=np.int64) % p
    if M.size == 0:
        return 0
    m, n = M.shape
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, m):
            if M[i, c]:
                piv = i
                break
        if piv is None:
            continue
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        M[r] = (M[r] * pow(int(M[r, c]), -1, p)) % p
        for i in range(m):
            if i != r and M[i, c]:
                M[i] = (M[i] - M[i, c] * M[r]) % p
        r += 1
        if r == m:
            break
    return r


def to_dense(cols: list[SparseVec], nrows: int) -> np.ndarray:
    A = np.zeros((nrows, len(cols)), dtype=np.int64)
    for j, c in enumerate(cols):
        for i, v in c.items():
            A[i, j] = v
    return A


def mat_mul(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    if A.size == 0 or B.size == 0:
        return np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    return (A.astype(np.int64) @ B.astype(np.int64)) % p


def nullspace(A: np.ndarray, p: int) -> np.ndarray:
    """Basis of the right kernel of a small dense matrix over F_p (columns)."""
    M = np.array(A, dtype=np.int64) % p
    m, n = M.shape
    pivcols = []
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, m):
            if M[i, c]:
                piv = i
                break
        if piv is None:
            continue
        M[[r, piv]] = M[[piv, r]]
        M[r] = (M[r] * pow(int(M[r, c]), -1, p)) % p
        for i in range(m):
            if i != r and M[i, c]:
                M[i] = (M[i] - M[i, c] * M[r]) % p
        pivcols.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n) if c not in pivcols]
    basis = np.zeros((n, len(free)), dtype=np.int64)
    for k, f in enumerate(free):
        basis[f, k] = 1
        for i, pc in enumerate(pivcols):
            basis[pc, k] = (-M[i, f]) % p
    return basis
