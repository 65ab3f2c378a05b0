"""Finitely generated Z/NZ-modules, their morphisms and subobject lattices.

A module is stored in elementary-divisor form: ``divisors`` is a chain
d_1 | d_2 | ... | d_r with every d_k > 1 dividing N, and elements are
integer vectors read modulo the divisors.  A morphism carries a
(tgt rank) x (src rank) matrix acting on column vectors; column j is the
image of the j-th source generator, reduced into [0, tgt.d_i).

Subobjects are stored as their preimage lattice in Z^r (which always
contains diag(d_1, ..., d_r)) in row-style Hermite normal form, so equal
subobjects compare equal as values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd, prod
from typing import Iterable, Iterator, Optional, Sequence

from . import linalg
from .linalg import IntMatrix


class ModuleError(ValueError):
    pass


def _factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@lru_cache(maxsize=None)
def omega(n: int) -> int:
    """Number of prime factors of n counted with multiplicity."""
    return sum(_factor(n).values())


@dataclass(frozen=True)
class BaseRing:
    N: int
    radical: int = field(init=False, compare=False)

    def __post_init__(self):
        if self.N < 2:
            raise ModuleError("base ring Z/NZ needs N >= 2")
        object.__setattr__(self, "radical", prod(_factor(self.N)))

    def __repr__(self):
        return "Z/%d" % self.N


@dataclass(frozen=True)
class FinModule:
    ring: BaseRing
    divisors: tuple[int, ...]

    def __post_init__(self):
        d = self.divisors
        for k, x in enumerate(d):
            if x <= 1 or self.ring.N % x:
                raise ModuleError("divisor %d is not a nontrivial divisor of %d" % (x, self.ring.N))
            if k and x % d[k - 1]:
                raise ModuleError("divisors %r do not form a divisibility chain" % (d,))

    @property
    def rank(self) -> int:
        return len(self.divisors)

    @property
    def order(self) -> int:
        return prod(self.divisors)

    def is_zero(self) -> bool:
        return not self.divisors

    def elements(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(d) for d in self.divisors))

    def reduce(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(v % d for v, d in zip(x, self.divisors))

    def __repr__(self):
        if not self.divisors:
            return "0"
        return "+".join("C%d" % d for d in self.divisors)


def module(ring, divisors: Iterable[int] = ()) -> FinModule:
    if isinstance(ring, int):
        ring = BaseRing(ring)
    return FinModule(ring, tuple(divisors))


def zero_module(ring: BaseRing) -> FinModule:
    return FinModule(ring, ())


def length(M: FinModule) -> int:
    return sum(omega(d) for d in M.divisors)


def is_semisimple(M: FinModule) -> bool:
    rad = M.ring.radical
    return all(rad % d == 0 for d in M.divisors)


# ---------------------------------------------------------------------------
# Morphisms


def _check_well_defined(src: FinModule, tgt: FinModule, rows) -> Optional[tuple[int, int]]:
    for i, e in enumerate(tgt.divisors):
        row = rows[i]
        for j, a in enumerate(src.divisors):
            if (a * row[j]) % e:
                return i, j
    return None


@dataclass(frozen=True)
class Morphism:
    src: FinModule
    tgt: FinModule
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.src.ring != self.tgt.ring:
            raise ModuleError("morphism between modules over different rings")
        if len(self.matrix) != self.tgt.rank or any(len(r) != self.src.rank for r in self.matrix):
            raise ModuleError("matrix shape does not match %r -> %r" % (self.src, self.tgt))
        bad = _check_well_defined(self.src, self.tgt, self.matrix)
        if bad is not None:
            raise ModuleError("matrix entry %r is not well defined for %r -> %r" % (bad, self.src, self.tgt))

    @classmethod
    def make(cls, src: FinModule, tgt: FinModule, rows) -> "Morphism":
        """Build a morphism, reducing entries into canonical residue ranges."""
        mat = tuple(tuple(int(x) % e for x in row) for row, e in zip(rows, tgt.divisors))
        if len(rows) != tgt.rank:
            raise ModuleError("matrix has %d rows, target rank is %d" % (len(rows), tgt.rank))
        return cls(src, tgt, mat)

    @classmethod
    def _trusted(cls, src: FinModule, tgt: FinModule, mat) -> "Morphism":
        """Skip validation; only for results of operations on valid morphisms."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "src", src)
        object.__setattr__(obj, "tgt", tgt)
        object.__setattr__(obj, "matrix", mat)
        return obj

    @classmethod
    def zero(cls, src: FinModule, tgt: FinModule) -> "Morphism":
        return cls(src, tgt, tuple((0,) * src.rank for _ in range(tgt.rank)))

    @classmethod
    def identity(cls, M: FinModule) -> "Morphism":
        return cls(M, M, tuple(tuple(int(i == j) for j in range(M.rank)) for i in range(M.rank)))

    @classmethod
    def scalar(cls, M: FinModule, c: int) -> "Morphism":
        return cls.make(M, M, [[c * (i == j) for j in range(M.rank)] for i in range(M.rank)])

    def __call__(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(sum(a * b for a, b in zip(row, x)) % e for row, e in zip(self.matrix, self.tgt.divisors))

    def __matmul__(self, other: "Morphism") -> "Morphism":
        return compose(self, other)

    def __add__(self, other: "Morphism") -> "Morphism":
        if (self.src, self.tgt) != (other.src, other.tgt):
            raise ModuleError("adding morphisms with different source/target")
        return Morphism.make(self.src, self.tgt, [[a + b for a, b in zip(r, s)] for r, s in zip(self.matrix, other.matrix)])

    def __neg__(self) -> "Morphism":
        return Morphism.make(self.src, self.tgt, [[-a for a in r] for r in self.matrix])

    def __sub__(self, other: "Morphism") -> "Morphism":
        return self + (-other)

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.matrix for x in r)

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self.matrix)

    def __repr__(self):
        return "Morphism(%r -> %r, %r)" % (self.src, self.tgt, [list(r) for r in self.matrix])


def compose(g: Morphism, f: Morphism) -> Morphism:
    """g o f."""
    if f.tgt is not g.src and f.tgt != g.src:
        raise ModuleError("cannot compose: %r is not %r" % (f.tgt, g.src))
    rows = _matmul(g.matrix, f.matrix, f.src.rank)
    mat = tuple(tuple(x % e for x in row) for row, e in zip(rows, g.tgt.divisors))
    return Morphism._trusted(f.src, g.tgt, mat)


def _matmul(A, B, ncols: int) -> list[list[int]]:
    """A @ B for row tuples, skipping zero entries of A."""
    out = []
    for arow in A:
        acc = [0] * ncols
        for a, brow in zip(arow, B):
            if a:
                for c, b in enumerate(brow):
                    if b:
                        acc[c] += a * b
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# Presentations


@dataclass(frozen=True)
class Presentation:
    """A canonical module together with the isomorphism from a presented quotient.

    ``to_canonical`` (k x r) sends presented coordinates to canonical ones;
    ``from_canonical`` (r x k) has as columns presented lifts of the
    canonical generators.
    """

    module: FinModule
    to_canonical: tuple[tuple[int, ...], ...]
    from_canonical: tuple[tuple[int, ...], ...]


def _chain_after_sort(divs: Sequence[int]) -> Optional[list[int]]:
    order = sorted(range(len(divs)), key=lambda k: divs[k])
    s = [divs[k] for k in order]
    if all(s[k + 1] % s[k] == 0 for k in range(len(s) - 1)):
        return order
    return None


@lru_cache(maxsize=None)
def _canonicalize_diagonal(N: int, divs: tuple[int, ...]) -> Presentation:
    ring = BaseRing(N)
    keep = [k for k, d in enumerate(divs) if gcd(d, N) != 1]
    divs_g = [gcd(d, N) for d in divs]
    order = _chain_after_sort([divs_g[k] for k in keep])
    r = len(divs)
    if order is not None:
        idx = [keep[k] for k in order]
        to = tuple(tuple(int(c == k) for c in range(r)) for k in idx)
        frm = tuple(tuple(int(c == k) for k in idx) for c in range(r))
        return Presentation(FinModule(ring, tuple(divs_g[k] for k in idx)), to, frm)
    return canonicalize(ring, IntMatrix.diagonal(divs))


def canonicalize(ring: BaseRing, relations) -> Presentation:
    """Canonical form of Z^r / (column span of ``relations`` + N Z^r)."""
    rel = linalg.as_matrix(relations)
    r = rel.rows
    A = rel.hstack(IntMatrix.diagonal([ring.N] * r)) if r else rel
    res = linalg.smith_normal_form(A)
    diag = [res.D[k, k] for k in range(r)]
    keep = [k for k in range(r) if diag[k] != 1]
    mod = FinModule(ring, tuple(diag[k] for k in keep))
    to = tuple(tuple(x % diag[k] for x in res.U.entries[k]) for k in keep)
    frm = tuple(tuple(res.U_inv[c, k] for k in keep) for c in range(r))
    return Presentation(mod, to, frm)


def present(ring: BaseRing, divisors: Sequence[int]) -> Presentation:
    """Canonical form of an arbitrary direct sum of cyclic modules."""
    return _canonicalize_diagonal(ring.N, tuple(divisors))


# ---------------------------------------------------------------------------
# Subobjects


@dataclass(frozen=True)
class Subobject:
    ambient: FinModule
    basis: tuple[tuple[int, ...], ...]

    @property
    def order(self) -> int:
        det = prod(self.basis[k][k] for k in range(len(self.basis)))
        return self.ambient.order // det

    @property
    def length(self) -> int:
        return omega(self.order) if self.order > 1 else 0

    def is_zero(self) -> bool:
        return self.order == 1

    def is_whole(self) -> bool:
        return all(self.basis[k][k] == 1 for k in range(len(self.basis)))

    def __contains__(self, x) -> bool:
        return _coords(self.basis, x) is not None

    def elements(self) -> set[tuple[int, ...]]:
        M = self.ambient
        return {x for x in M.elements() if x in self}

    def __repr__(self):
        return "Subobject(%r, order=%d)" % (self.ambient, self.order)


def _coords(B, x) -> Optional[list[int]]:
    """y with y @ B == x for an upper-triangular full-rank basis B, or None."""
    r = len(B)
    y = [0] * r
    for c in range(r):
        v = x[c] - sum(y[k] * B[k][c] for k in range(c))
        if v % B[c][c]:
            return None
        y[c] = v // B[c][c]
    return y


def subobject(M: FinModule, gens: Iterable[Sequence[int]]) -> Subobject:
    d = M.divisors
    r = M.rank
    rows = [[g[k] % d[k] for k in range(r)] for g in gens]
    rows.extend([d[k] * (c == k) for c in range(r)] for k in range(r))
    return Subobject(M, linalg.hnf_basis(rows, r))


def zero_sub(M: FinModule) -> Subobject:
    return subobject(M, ())


def whole(M: FinModule) -> Subobject:
    return Subobject(M, tuple(tuple(int(i == j) for j in range(M.rank)) for i in range(M.rank)))


def _same_ambient(S: Subobject, T: Subobject):
    if S.ambient != T.ambient:
        raise ModuleError("subobjects of different ambient modules")


def sum_(S: Subobject, T: Subobject) -> Subobject:
    _same_ambient(S, T)
    return subobject(S.ambient, S.basis + T.basis)


@lru_cache(maxsize=200000)
def intersect(S: Subobject, T: Subobject) -> Subobject:
    _same_ambient(S, T)
    M = S.ambient
    r = M.rank
    if r == 0:
        return S
    # x = y1 B1 = y2 B2  <=>  (y1, y2) in ker [B1^T | -B2^T]
    A = [[S.basis[k][c] for k in range(r)] + [-T.basis[k][c] for k in range(r)] for c in range(r)]
    ker = linalg.integer_kernel(A)
    gens = [[sum(z[k] * S.basis[k][c] for k in range(r)) for c in range(r)] for z in ker]
    return subobject(M, gens)


def contains(S: Subobject, T: Subobject) -> bool:
    """T is a subobject of S."""
    _same_ambient(S, T)
    return all(_coords(S.basis, row) is not None for row in T.basis)


@lru_cache(maxsize=200000)
def image(f: Morphism) -> Subobject:
    return subobject(f.tgt, (f.column(j) for j in range(f.src.rank)))


def image_of(f: Morphism, S: Subobject) -> Subobject:
    if S.ambient != f.src:
        raise ModuleError("subobject is not in the source of the morphism")
    return subobject(f.tgt, (f(row) for row in S.basis))


@lru_cache(maxsize=200000)
def preimage(f: Morphism, S: Subobject) -> Subobject:
    if S.ambient != f.tgt:
        raise ModuleError("subobject is not in the target of the morphism")
    s, t = f.src.rank, f.tgt.rank
    if t == 0:
        return whole(f.src)
    # f x = y B  <=>  (x, y) in ker [F | -B^T]
    A = [list(f.matrix[c]) + [-S.basis[k][c] for k in range(t)] for c in range(t)]
    ker = linalg.integer_kernel(IntMatrix.from_rows(A, s + t))
    return subobject(f.src, (z[:s] for z in ker))


def kernel_sub(f: Morphism) -> Subobject:
    return preimage(f, zero_sub(f.tgt))


@lru_cache(maxsize=200000)
def sub_module(S: Subobject) -> tuple[FinModule, Morphism]:
    """The canonical module underlying S and its inclusion into the ambient module."""
    M = S.ambient
    r = M.rank
    B = S.basis
    rels = [_coords(B, [M.divisors[k] * (c == k) for c in range(r)]) for k in range(r)]
    # columns are relations
    pres = canonicalize(M.ring, IntMatrix.from_rows([[rels[k][c] for k in range(r)] for c in range(r)], r) if r else IntMatrix.zeros(0, 0))
    K = pres.module
    cols = []
    for g in range(K.rank):
        y = [pres.from_canonical[c][g] for c in range(r)]
        cols.append([sum(y[k] * B[k][c] for k in range(r)) for c in range(r)])
    rows = [[cols[g][c] for g in range(K.rank)] for c in range(r)]
    return K, Morphism.make(K, M, rows)


def kernel(f: Morphism) -> tuple[FinModule, Morphism]:
    return sub_module(kernel_sub(f))


@lru_cache(maxsize=200000)
def quotient(S: Subobject) -> tuple[FinModule, Morphism]:
    """M/S in canonical form and the projection M -> M/S."""
    M = S.ambient
    r = M.rank
    rel = IntMatrix.from_rows([[S.basis[k][c] for k in range(r)] for c in range(r)], r) if r else IntMatrix.zeros(0, 0)
    pres = canonicalize(M.ring, rel)
    Q = pres.module
    return Q, Morphism.make(M, Q, pres.to_canonical)


def cokernel(f: Morphism) -> tuple[FinModule, Morphism]:
    return quotient(image(f))


def is_mono(f: Morphism) -> bool:
    return image(f).order == f.src.order


def is_epi(f: Morphism) -> bool:
    return image(f).order == f.tgt.order


def is_iso(f: Morphism) -> bool:
    return f.src.order == f.tgt.order and is_epi(f)


def socle(M: FinModule) -> Subobject:
    rad = M.ring.radical
    r = M.rank
    return subobject(M, ([(d // gcd(d, rad)) * (c == k) for c in range(r)] for k, d in enumerate(M.divisors)))


def sub_is_semisimple(S: Subobject) -> bool:
    return contains(socle(S.ambient), S)


# ---------------------------------------------------------------------------
# Lifting and descending


def lift_through_mono(m: Morphism, g: Morphism) -> Morphism:
    """The unique h with m o h == g, given im g inside im m and m mono."""
    if m.tgt != g.tgt:
        raise ModuleError("lift: targets differ")
    A = IntMatrix(m.tgt.rank, m.src.rank, m.matrix)
    cols = linalg.solve_congruence_many(A, [g.column(j) for j in range(g.src.rank)], m.tgt.divisors)
    if any(x is None for x in cols):
        raise ModuleError("lift: image is not contained in the image of the mono")
    rows = [[cols[j][i] for j in range(g.src.rank)] for i in range(m.src.rank)]
    h = Morphism.make(g.src, m.src, rows)
    if compose(m, h) != g:
        raise ModuleError("lift: morphism is not mono on the relevant image")
    return h


def section_of_epi(e: Morphism) -> list[tuple[int, ...]]:
    """For each generator of e.tgt, some preimage under e."""
    A = IntMatrix(e.tgt.rank, e.src.rank, e.matrix)
    bs = [[int(c == k) for c in range(e.tgt.rank)] for k in range(e.tgt.rank)]
    out = linalg.solve_congruence_many(A, bs, e.tgt.divisors)
    if any(x is None for x in out):
        raise ModuleError("descend: map is not epi")
    return out


def descend_through_epi(e: Morphism, g: Morphism) -> Morphism:
    """The unique h with h o e == g, given ker e inside ker g and e epi."""
    if e.src != g.src:
        raise ModuleError("descend: sources differ")
    pre = section_of_epi(e)
    rows = [[g(pre[k])[i] for k in range(e.tgt.rank)] for i in range(g.tgt.rank)]
    h = Morphism.make(e.tgt, g.tgt, rows)
    if compose(h, e) != g:
        raise ModuleError("descend: kernel of the epi is not killed")
    return h


def invert(f: Morphism) -> Morphism:
    if not is_iso(f):
        raise ModuleError("morphism is not an isomorphism")
    return lift_through_mono(f, Morphism.identity(f.tgt))


def restrict_corestrict(f: Morphism, S: Subobject, T: Subobject) -> Morphism:
    """f restricted to S and corestricted to T, between their canonical modules."""
    if S.ambient != f.src or T.ambient != f.tgt:
        raise ModuleError("subobjects do not match the morphism")
    if not contains(T, image_of(f, S)):
        raise ModuleError("f(S) is not contained in T")
    _, iS = sub_module(S)
    _, iT = sub_module(T)
    return lift_through_mono(iT, compose(f, iS))


def find_splitting(incl: Morphism) -> Optional[Morphism]:
    """Some s with s o incl == id, or None if incl does not split."""
    if not is_mono(incl):
        raise ModuleError("find_splitting needs a monomorphism")
    A, B = incl.src, incl.tgt
    a, b = A.divisors, B.divisors
    # s_ij = c_ij * (a_i / gcd(a_i, b_j)); unknowns c_ij, ordered (i, j)
    steps = [[a[i] // gcd(a[i], b[j]) for j in range(B.rank)] for i in range(A.rank)]
    nunk = A.rank * B.rank
    rows, rhs, mods = [], [], []
    for i in range(A.rank):
        for k in range(A.rank):
            row = [0] * nunk
            for j in range(B.rank):
                row[i * B.rank + j] = steps[i][j] * incl.matrix[j][k]
            rows.append(row)
            rhs.append(int(i == k))
            mods.append(a[i])
    if not rows:
        return Morphism.zero(B, A)
    x = linalg.solve_congruence(IntMatrix.from_rows(rows, nunk), rhs, mods)
    if x is None:
        return None
    s = Morphism.make(B, A, [[x[i * B.rank + j] * steps[i][j] for j in range(B.rank)] for i in range(A.rank)])
    assert compose(s, incl) == Morphism.identity(A)
    return s


# ---------------------------------------------------------------------------
# Duality


def dual(M: FinModule) -> FinModule:
    return M


def dual_morphism(f: Morphism) -> Morphism:
    """Transpose of f under the pairing with Q/Z: entry (j, i) = f_ij * a_j / e_i."""
    a, e = f.src.divisors, f.tgt.divisors
    rows = [[f.matrix[i][j] * a[j] // e[i] for i in range(f.tgt.rank)] for j in range(f.src.rank)]
    return Morphism.make(f.tgt, f.src, rows)


# ---------------------------------------------------------------------------
# Direct sums


class DirectSum:
    """Canonical direct sum of named summands with injections and projections."""

    def __init__(self, summands: Sequence[tuple[object, FinModule]], ring: Optional[BaseRing] = None):
        self.names = [n for n, _ in summands]
        if len(set(self.names)) != len(self.names):
            raise ModuleError("duplicate summand names")
        self.parts = dict(summands)
        ring = summands[0][1].ring if summands else ring
        divs: list[int] = []
        offs = {}
        for n, M in summands:
            offs[n] = (len(divs), M.rank)
            divs.extend(M.divisors)
        if ring is None:
            raise ModuleError("an empty direct sum needs an explicit ring")
        pres = present(ring, divs)
        self.pres, self.divs, self.offs = pres, divs, offs
        self.module = pres.module
        self.inj: dict[object, Morphism] = {}
        self.proj: dict[object, Morphism] = {}
        for n, M in summands:
            o, r = offs[n]
            self.inj[n] = Morphism.make(M, self.module, [row[o:o + r] for row in pres.to_canonical])
            self.proj[n] = Morphism.make(self.module, M, [pres.from_canonical[o + c] for c in range(r)])

    def block(self, target: "DirectSum", blocks: dict) -> Morphism:
        """The morphism with components blocks[(tgt_name, src_name)] : src part -> tgt part."""
        B = [[0] * len(self.divs) for _ in target.divs]
        for (tn, sn), f in blocks.items():
            if f.src != self.parts[sn] or f.tgt != target.parts[tn]:
                raise ModuleError("block (%r, %r) has the wrong shape" % (tn, sn))
            to, _ = target.offs[tn]
            so, _ = self.offs[sn]
            for i, row in enumerate(f.matrix):
                Bi = B[to + i]
                for c, v in enumerate(row):
                    Bi[so + c] = v
        # canonical -> presented (source), block map, presented -> canonical (target)
        BF = _matmul(B, self.pres.from_canonical, self.module.rank)
        return Morphism.make(self.module, target.module, _matmul(target.pres.to_canonical, BF, self.module.rank))

    def diag(self, target: "DirectSum", maps: dict) -> Morphism:
        return self.block(target, {(n, n): f for n, f in maps.items()})


def direct_sum(*mods: FinModule) -> DirectSum:
    return DirectSum(list(enumerate(mods)))


# ---------------------------------------------------------------------------
# Enumeration


def enumerate_modules(ring: BaseRing, max_order: int, limit: int = 4096) -> list[FinModule]:
    if max_order > limit:
        raise ModuleError("max_order %d exceeds the limit %d" % (max_order, limit))
    divs = [d for d in range(2, ring.N + 1) if ring.N % d == 0]
    out = []

    def rec(prefix, last, order):
        out.append(FinModule(ring, tuple(prefix)))
        for d in divs:
            if d % last == 0 and order * d <= max_order:
                rec(prefix + [d], d, order * d)

    rec([], 1, 1)
    return sorted(out, key=lambda M: (M.order, M.divisors))


def hom_size(src: FinModule, tgt: FinModule) -> int:
    return prod(gcd(e, a) for e in tgt.divisors for a in src.divisors)


def iter_morphisms(src: FinModule, tgt: FinModule) -> Iterator[Morphism]:
    choices = [range(0, e, e // gcd(e, a)) for e in tgt.divisors for a in src.divisors]
    s = src.rank
    for flat in itertools.product(*choices):
        rows = tuple(tuple(flat[i * s:(i + 1) * s]) for i in range(tgt.rank))
        yield Morphism(src, tgt, rows)


def enumerate_morphisms(src: FinModule, tgt: FinModule, limit: int = 1 << 20) -> list[Morphism]:
    n = hom_size(src, tgt)
    if n > limit:
        raise ModuleError("Hom has %d elements, over the limit %d" % (n, limit))
    return list(iter_morphisms(src, tgt))


def _divisors_of(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


@lru_cache(maxsize=256)
def enumerate_subobjects(M: FinModule) -> tuple[Subobject, ...]:
    """All subobjects of M, via their Hermite bases.

    Rows are chosen bottom-up.  Row k has pivot h | d_k and tail entries
    reduced below the later pivots; it is admissible when (d_k / h) times
    its tail already lies in the lattice of the rows below, which is exactly
    the condition for d_k e_k to lie in the full lattice.
    """
    r = M.rank
    d = M.divisors
    out = []

    def in_span(rows, k, x):
        # rows[k+1..] upper triangular; x supported on columns > k
        x = list(x)
        for m in range(k + 1, r):
            if x[m] % rows[m][m]:
                return False
            y = x[m] // rows[m][m]
            if y:
                for c in range(m, r):
                    x[c] -= y * rows[m][c]
        return True

    def rec(k, rows):
        if k < 0:
            out.append(Subobject(M, tuple(tuple(row) for row in rows)))
            return
        for h in _divisors_of(d[k]):
            mult = d[k] // h
            for tail in itertools.product(*(range(rows[l][l]) for l in range(k + 1, r))):
                x = [0] * (k + 1) + [mult * t for t in tail]
                if in_span(rows, k, x):
                    row = [0] * k + [h] + list(tail)
                    rows[k] = row
                    rec(k - 1, rows)
        rows[k] = None

    rec(r - 1, [None] * r)
    return tuple(out)


def automorphisms(M: FinModule, limit: int = 1 << 18) -> list[Morphism]:
    return [f for f in iter_morphisms(M, M) if is_iso(f)] if hom_size(M, M) <= limit else _raise_big(M)


def _raise_big(M):
    raise ModuleError("automorphism enumeration of %r is too large" % (M,))
