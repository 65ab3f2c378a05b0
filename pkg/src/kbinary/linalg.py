"""Exact integer matrix normal forms and congruence solving.

Everything here works on Python ints, so there is no overflow to guard
against.  Matrices are immutable :class:`IntMatrix` values; the algorithms
copy into lists of lists internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd
from typing import Iterable, Optional, Sequence


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entry grid does not match %dx%d" % (self.rows, self.cols))

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], cols: Optional[int] = None) -> "IntMatrix":
        entries = tuple(tuple(int(x) for x in r) for r in rows)
        if cols is None:
            if not entries:
                raise ValueError("column count required for a matrix without rows")
            cols = len(entries[0])
        return cls(len(entries), cols, entries)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def diagonal(cls, diag: Sequence[int], rows: Optional[int] = None, cols: Optional[int] = None) -> "IntMatrix":
        rows = len(diag) if rows is None else rows
        cols = len(diag) if cols is None else cols
        out = [[0] * cols for _ in range(rows)]
        for k, d in enumerate(diag):
            out[k][k] = d
        return cls.from_rows(out, cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch %dx%d @ %dx%d" % (self.rows, self.cols, other.rows, other.cols))
        return IntMatrix.from_rows(_mul(self.entries, other.entries, other.cols), other.cols)

    def transpose(self) -> "IntMatrix":
        return IntMatrix.from_rows(zip(*self.entries) if self.rows else [() for _ in range(self.cols)], self.rows)

    @property
    def T(self) -> "IntMatrix":
        return self.transpose()

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.entries for x in r)

    def hstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.rows != other.rows:
            raise ValueError("row count mismatch in hstack")
        return IntMatrix.from_rows((a + b for a, b in zip(self.entries, other.entries)), self.cols + other.cols)

    def vstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.cols:
            raise ValueError("column count mismatch in vstack")
        return IntMatrix(self.rows + other.rows, self.cols, self.entries + other.entries)


def _mul(a, b, bcols):
    bt = list(zip(*b)) if b else [()] * bcols
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def as_matrix(A, cols: Optional[int] = None) -> IntMatrix:
    if isinstance(A, IntMatrix):
        return A
    return IntMatrix.from_rows(A, cols)


def determinant(A: IntMatrix) -> int:
    """Bareiss fraction-free determinant."""
    if A.rows != A.cols:
        raise ValueError("determinant of a non-square matrix")
    n = A.rows
    if n == 0:
        return 1
    m = [list(r) for r in A.entries]
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k]:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SnfResult:
    U: IntMatrix
    D: IntMatrix
    V: IntMatrix
    U_inv: IntMatrix
    V_inv: IntMatrix

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.D[k, k] for k in range(min(self.D.rows, self.D.cols)))

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d)


def smith_normal_form(A) -> SnfResult:
    """Return U, D, V with U @ A @ V == D in Smith form, diagonal >= 0.

    The inverses of U and V are tracked alongside, since callers that
    present quotient modules need both directions of the isomorphism.
    """
    A = as_matrix(A)
    m, n = A.rows, A.cols
    D = [list(r) for r in A.entries]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    Ui = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]
    Vi = [[int(i == j) for j in range(n)] for i in range(n)]

    # Row op "row_a += c*row_b" on D and U; U_inv gets "col_b -= c*col_a".
    def row_add(a, b, c):
        if not c:
            return
        Da, Db = D[a], D[b]
        for k in range(n):
            Da[k] += c * Db[k]
        Ua, Ub = U[a], U[b]
        for k in range(m):
            Ua[k] += c * Ub[k]
        for r in Ui:
            r[b] -= c * r[a]

    def row_swap(a, b):
        D[a], D[b] = D[b], D[a]
        U[a], U[b] = U[b], U[a]
        for r in Ui:
            r[a], r[b] = r[b], r[a]

    def row_neg(a):
        D[a] = [-x for x in D[a]]
        U[a] = [-x for x in U[a]]
        for r in Ui:
            r[a] = -r[a]

    # Column op "col_a += c*col_b" on D and V; V_inv gets "row_b -= c*row_a".
    def col_add(a, b, c):
        if not c:
            return
        for r in D:
            r[a] += c * r[b]
        for r in V:
            r[a] += c * r[b]
        Va, Vb = Vi[a], Vi[b]
        for k in range(n):
            Vb[k] -= c * Va[k]

    def col_swap(a, b):
        for r in D:
            r[a], r[b] = r[b], r[a]
        for r in V:
            r[a], r[b] = r[b], r[a]
        Vi[a], Vi[b] = Vi[b], Vi[a]

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                Di = D[i]
                for j in range(t, n):
                    x = Di[j]
                    if x and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
            if best is None:
                break
            _, bi, bj = best
            if bi != t:
                row_swap(t, bi)
            if bj != t:
                col_swap(t, bj)
            p = D[t][t]
            done = True
            for i in range(t + 1, m):
                if D[i][t]:
                    row_add(i, t, -(D[i][t] // p))
                    if D[i][t]:
                        done = False
            for j in range(t + 1, n):
                if D[t][j]:
                    col_add(j, t, -(D[t][j] // p))
                    if D[t][j]:
                        done = False
            if not done:
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if D[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_add(t, bad, 1)
        if t < m and t < n and D[t][t] < 0:
            row_neg(t)

    def mk(x, c):
        return IntMatrix.from_rows(x, c)

    return SnfResult(mk(U, m), mk(D, n), mk(V, n), mk(Ui, m), mk(Vi, n))


def invariant_factors(A) -> tuple[int, ...]:
    return smith_normal_form(A).diagonal


# ---------------------------------------------------------------------------
# Hermite normal form (row style)


def _hnf_lists(rows: list[list[int]], ncols: int, track: Optional[list[list[int]]] = None):
    """In-place row-style HNF; returns the pivot count.  ``track`` receives the same row ops."""
    m = len(rows)
    r = 0
    for c in range(ncols):
        if r >= m:
            break
        while True:
            piv = None
            for i in range(r, m):
                x = rows[i][c]
                if x and (piv is None or abs(x) < abs(rows[piv][c])):
                    piv = i
            if piv is None:
                break
            if piv != r:
                rows[r], rows[piv] = rows[piv], rows[r]
                if track is not None:
                    track[r], track[piv] = track[piv], track[r]
            p = rows[r][c]
            clean = True
            for i in range(r + 1, m):
                x = rows[i][c]
                if x:
                    q = x // p
                    Ri, Rr = rows[i], rows[r]
                    for k in range(c, ncols):
                        Ri[k] -= q * Rr[k]
                    if track is not None:
                        Ti, Tr = track[i], track[r]
                        for k in range(len(Tr)):
                            Ti[k] -= q * Tr[k]
                    if Ri[c]:
                        clean = False
            if clean:
                break
        if piv is None and rows[r][c] == 0:
            continue
        if rows[r][c] < 0:
            rows[r] = [-x for x in rows[r]]
            if track is not None:
                track[r] = [-x for x in track[r]]
        p = rows[r][c]
        for i in range(r):
            q = rows[i][c] // p
            if q:
                Ri, Rr = rows[i], rows[r]
                for k in range(c, ncols):
                    Ri[k] -= q * Rr[k]
                if track is not None:
                    Ti, Tr = track[i], track[r]
                    for k in range(len(Tr)):
                        Ti[k] -= q * Tr[k]
        r += 1
    return r


def hnf_basis(rows: Iterable[Sequence[int]], ncols: int) -> tuple[tuple[int, ...], ...]:
    """Nonzero rows of the HNF of the row lattice spanned by ``rows``."""
    work = [list(r) for r in rows]
    rank = _hnf_lists(work, ncols)
    return tuple(tuple(r) for r in work[:rank])


def hermite_normal_form(A) -> tuple[IntMatrix, IntMatrix]:
    """Row-style HNF: returns (H, U) with H == U @ A and U unimodular.

    H is upper echelon with positive pivots and entries above each pivot
    reduced into [0, pivot); zero rows sit at the bottom.
    """
    A = as_matrix(A)
    work = [list(r) for r in A.entries]
    U = [[int(i == j) for j in range(A.rows)] for i in range(A.rows)]
    _hnf_lists(work, A.cols, U)
    return IntMatrix.from_rows(work, A.cols), IntMatrix.from_rows(U, A.rows)


def is_hermite_form(H: IntMatrix) -> bool:
    last = -1
    seen_zero = False
    for i, row in enumerate(H.entries):
        nz = [k for k, x in enumerate(row) if x]
        if not nz:
            seen_zero = True
            continue
        if seen_zero:
            return False
        c = nz[0]
        if c <= last or row[c] <= 0:
            return False
        for above in range(i):
            if not 0 <= H[above, c] < row[c]:
                return False
        last = c
    return True


def integer_kernel(A) -> tuple[tuple[int, ...], ...]:
    """Basis (as rows) of {z in Z^cols : A z = 0}."""
    A = as_matrix(A)
    At = [list(c) for c in zip(*A.entries)] if A.rows else [[] for _ in range(A.cols)]
    U = [[int(i == j) for j in range(A.cols)] for i in range(A.cols)]
    rank = _hnf_lists(At, A.rows, U)
    return hnf_basis(U[rank:], A.cols)


# ---------------------------------------------------------------------------
# Congruences


@lru_cache(maxsize=100000)
def _congruence_system(entries: tuple, ncols: int, moduli: tuple):
    A = IntMatrix(len(entries), ncols, entries)
    C = A.hstack(IntMatrix.diagonal(list(moduli)))
    res = smith_normal_form(C)
    diag = [res.D[k, k] if k < C.cols else 0 for k in range(C.rows)]
    L = 1
    for mk in moduli:
        L = L * mk // gcd(L, mk)
    return res.U.entries, diag, res.V.entries, C.cols, L


def solve_congruence_many(A, bs: Sequence[Sequence[int]], moduli: Sequence[int]) -> list[Optional[tuple[int, ...]]]:
    """solve_congruence for several right-hand sides sharing one factorisation."""
    A = as_matrix(A, cols=None if not isinstance(A, IntMatrix) and A else 0)
    if len(moduli) != A.rows or any(len(b) != A.rows for b in bs):
        raise ValueError("dimension mismatch: %d rows, %d moduli" % (A.rows, len(moduli)))
    if any(m < 1 for m in moduli):
        raise ValueError("moduli must be >= 1")
    U, diag, V, ncols, L = _congruence_system(A.entries, A.cols, tuple(moduli))
    out = []
    for b in bs:
        y = [sum(u * v for u, v in zip(row, b) if v) for row in U]
        w = [0] * ncols
        ok = True
        for k, yk in enumerate(y):
            d = diag[k]
            if d == 0:
                if yk:
                    ok = False
                    break
            elif yk % d:
                ok = False
                break
            else:
                w[k] = yk // d
        if not ok:
            out.append(None)
            continue
        z = [sum(v * x for v, x in zip(row, w) if x) for row in V[: A.cols]]
        out.append(tuple(x % L for x in z))
    return out


def solve_congruence(A, b: Sequence[int], moduli: Sequence[int]) -> Optional[tuple[int, ...]]:
    """Find x with A x = b componentwise modulo ``moduli``, or None.

    Solvability is decided from the Smith form of [A | diag(moduli)].
    """
    A = as_matrix(A, cols=None if not isinstance(A, IntMatrix) and A else 0)
    if len(b) != A.rows or len(moduli) != A.rows:
        raise ValueError("dimension mismatch: %d rows, %d rhs, %d moduli" % (A.rows, len(b), len(moduli)))
    return solve_congruence_many(A, [b], moduli)[0]
