"""Bounded binary multicomplexes of finite modules.

An n-fold binary multicomplex has objects indexed by multidegrees in the
box [0, k_1] x ... x [0, k_n] and, in every direction, a "top" and a
"bottom" differential of multidegree -e_dir.  Directions are numbered from
0.  Objects and differentials are stored sparsely; anything missing is
zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from . import finmod
from .finmod import BaseRing, DirectSum, FinModule, Morphism

FLAVORS = ("top", "bottom")

Degree = tuple[int, ...]


def box(bounds: Sequence[int]) -> Iterator[Degree]:
    return itertools.product(*(range(k + 1) for k in bounds))


def shifted(deg: Degree, direction: int, by: int = -1) -> Degree:
    return deg[:direction] + (deg[direction] + by,) + deg[direction + 1:]


@dataclass(frozen=True, eq=False)
class BinaryMultiComplex:
    ring: BaseRing
    bounds: tuple[int, ...]
    objects: Mapping[Degree, FinModule]
    diffs: Mapping[tuple[int, str, Degree], Morphism]
    _key: tuple = field(default=None, repr=False)

    @classmethod
    def build(cls, ring: BaseRing, bounds: Sequence[int], objects: Mapping, diffs: Mapping) -> "BinaryMultiComplex":
        objs = {tuple(d): M for d, M in objects.items() if not M.is_zero()}
        dfs = {}
        for (direction, flavor, deg), f in diffs.items():
            if flavor not in FLAVORS:
                raise ValueError("unknown flavor %r" % (flavor,))
            if not f.is_zero():
                dfs[(direction, flavor, tuple(deg))] = f
        key = (
            ring.N,
            tuple(bounds),
            tuple(sorted((d, M.divisors) for d, M in objs.items())),
            tuple(sorted((k, f.matrix) for k, f in dfs.items())),
        )
        return cls(ring, tuple(bounds), objs, dfs, key)

    @property
    def n(self) -> int:
        return len(self.bounds)

    def obj(self, deg: Degree) -> FinModule:
        M = self.objects.get(tuple(deg))
        return M if M is not None else finmod.zero_module(self.ring)

    def diff(self, direction: int, flavor: str, deg: Degree) -> Morphism:
        deg = tuple(deg)
        f = self.diffs.get((direction, flavor, deg))
        if f is not None:
            return f
        return Morphism.zero(self.obj(deg), self.obj(shifted(deg, direction)))

    def degrees(self) -> Iterator[Degree]:
        return box(self.bounds)

    def is_zero(self) -> bool:
        return not self.objects

    def __eq__(self, other):
        return isinstance(other, BinaryMultiComplex) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        objs = ", ".join("%s:%r" % (",".join(map(str, d)), M) for d, M in sorted(self.objects.items()))
        return "BinaryMultiComplex(n=%d, bounds=%r, {%s})" % (self.n, self.bounds, objs)

    def replace(self, bounds=None, objects=None, diffs=None) -> "BinaryMultiComplex":
        return BinaryMultiComplex.build(
            self.ring,
            self.bounds if bounds is None else bounds,
            self.objects if objects is None else objects,
            self.diffs if diffs is None else diffs,
        )


def zero_complex(ring: BaseRing, bounds: Sequence[int]) -> BinaryMultiComplex:
    return BinaryMultiComplex.build(ring, bounds, {}, {})


def binary_complex(objects: Sequence[FinModule], top: Sequence[Morphism], bottom: Sequence[Morphism]) -> BinaryMultiComplex:
    """1-fold complex P_k -> ... -> P_0 from objects [P_0..P_k] and d_1..d_k (top, bottom)."""
    ring = objects[0].ring
    k = len(objects) - 1
    diffs = {}
    for i, (d, e) in enumerate(zip(top, bottom), start=1):
        diffs[(0, "top", (i,))] = d
        diffs[(0, "bottom", (i,))] = e
    return BinaryMultiComplex.build(ring, (k,), {(i,): M for i, M in enumerate(objects)}, diffs)


# ---------------------------------------------------------------------------
# Validation


def validate(X: BinaryMultiComplex) -> list[str]:
    """Every violated structural invariant, with multidegree coordinates."""
    report = []
    inside = set(X.degrees())
    for deg in X.objects:
        if len(deg) != X.n or deg not in inside:
            report.append("object at %r lies outside the support %r" % (deg, X.bounds))
    for (a, fl, deg), f in X.diffs.items():
        if not 0 <= a < X.n:
            report.append("differential in unknown direction %d" % a)
            continue
        if f.src != X.obj(deg) or f.tgt != X.obj(shifted(deg, a)):
            report.append("%s differential in direction %d at %r has the wrong source or target" % (fl, a, deg))
    if report:
        return report
    for deg in X.degrees():
        for a in range(X.n):
            if deg[a] < 2:
                continue
            for fl in FLAVORS:
                sq = finmod.compose(X.diff(a, fl, shifted(deg, a)), X.diff(a, fl, deg))
                if not sq.is_zero():
                    report.append("%s differential squares to nonzero in direction %d at %r" % (fl, a, deg))
        for a in range(X.n):
            for b in range(a + 1, X.n):
                if deg[a] < 1 or deg[b] < 1:
                    continue
                for fa in FLAVORS:
                    for fb in FLAVORS:
                        lhs = finmod.compose(X.diff(b, fb, shifted(deg, a)), X.diff(a, fa, deg))
                        rhs = finmod.compose(X.diff(a, fa, shifted(deg, b)), X.diff(b, fb, deg))
                        if lhs != rhs:
                            report.append(
                                "%s(dir %d) and %s(dir %d) do not commute at %r" % (fa, a, fb, b, deg)
                            )
    return report


def acyclicity_failures(X: BinaryMultiComplex) -> list[str]:
    out = []
    for a in range(X.n):
        for fl in FLAVORS:
            for deg in X.degrees():
                if X.obj(deg).is_zero():
                    continue
                up = shifted(deg, a, +1)
                ker = finmod.kernel_sub(X.diff(a, fl, deg))
                img = finmod.image(X.diff(a, fl, up))
                if ker != img:
                    out.append("%s differential in direction %d is not exact at %r" % (fl, a, deg))
    return out


def is_acyclic(X: BinaryMultiComplex) -> bool:
    bad = validate(X)
    if bad:
        raise ValueError("invalid complex: " + "; ".join(bad))
    return not acyclicity_failures(X)


def is_diagonal(X: BinaryMultiComplex, directions: Optional[Iterable[int]] = None) -> bool:
    dirs = range(X.n) if directions is None else directions
    for a in dirs:
        for deg in X.degrees():
            if X.diff(a, "top", deg) != X.diff(a, "bottom", deg):
                return False
    return True


# ---------------------------------------------------------------------------
# Single-differential complexes and the diagonal embedding


@dataclass(frozen=True)
class MultiComplex:
    """A multicomplex with one differential per direction."""

    ring: BaseRing
    bounds: tuple[int, ...]
    objects: Mapping[Degree, FinModule]
    diffs: Mapping[tuple[int, Degree], Morphism]

    def __eq__(self, other):
        return isinstance(other, MultiComplex) and diagonal_embed(self) == diagonal_embed(other)

    def __hash__(self):
        return hash(diagonal_embed(self))


def diagonal_embed(C: MultiComplex, directions: Optional[Iterable[int]] = None) -> BinaryMultiComplex:
    """Use the single differential as both top and bottom differential."""
    n = len(C.bounds)
    dirs = set(range(n) if directions is None else directions)
    diffs = {}
    for (a, deg), f in C.diffs.items():
        if a not in dirs:
            raise ValueError("direction %d is not being diagonalised" % a)
        diffs[(a, "top", deg)] = f
        diffs[(a, "bottom", deg)] = f
    return BinaryMultiComplex.build(C.ring, C.bounds, C.objects, diffs)


def top_restriction(X: BinaryMultiComplex) -> MultiComplex:
    X = X if isinstance(X, BinaryMultiComplex) else X
    return MultiComplex(X.ring, X.bounds, dict(X.objects), {(a, d): f for (a, fl, d), f in X.diffs.items() if fl == "top"})


def diagonalize(X: BinaryMultiComplex, directions: Iterable[int]) -> BinaryMultiComplex:
    """Replace the bottom differentials in ``directions`` by the top ones."""
    dirs = set(directions)
    diffs = {k: f for k, f in X.diffs.items() if not (k[0] in dirs and k[1] == "bottom")}
    for (a, fl, deg), f in X.diffs.items():
        if a in dirs and fl == "top":
            diffs[(a, "bottom", deg)] = f
    return X.replace(diffs=diffs)


# ---------------------------------------------------------------------------
# Constructions


def direct_sum(X: BinaryMultiComplex, Y: BinaryMultiComplex) -> BinaryMultiComplex:
    if X.n != Y.n or X.ring != Y.ring:
        raise ValueError("direct sum of complexes of different shape")
    bounds = tuple(max(a, b) for a, b in zip(X.bounds, Y.bounds))
    sums = {deg: DirectSum([(0, X.obj(deg)), (1, Y.obj(deg))], X.ring) for deg in box(bounds)}
    objects = {deg: s.module for deg, s in sums.items()}
    diffs = {}
    for deg in box(bounds):
        for a in range(X.n):
            if deg[a] == 0:
                continue
            tgt = sums[shifted(deg, a)]
            for fl in FLAVORS:
                diffs[(a, fl, deg)] = sums[deg].diag(tgt, {0: X.diff(a, fl, deg), 1: Y.diff(a, fl, deg)})
    return BinaryMultiComplex.build(X.ring, bounds, objects, diffs)


def equality(X: BinaryMultiComplex, Y: BinaryMultiComplex) -> bool:
    return X == Y


def is_free(X: BinaryMultiComplex) -> bool:
    return all(all(d == X.ring.N for d in M.divisors) for M in X.objects.values())


def tensor_free(Z: BinaryMultiComplex, X: BinaryMultiComplex) -> BinaryMultiComplex:
    """Z (x) X for X made of free modules; X's directions come after Z's.

    Over a free module (Z/N)^r the tensor product is r copies of the other
    factor, so the result stays exact in every direction as long as Z and X
    are.
    """
    if not is_free(X):
        raise ValueError("the second factor must consist of free modules")
    n1 = Z.n
    bounds = Z.bounds + X.bounds
    sums = {}
    for zd in Z.degrees():
        for xd in X.degrees():
            r = X.obj(xd).rank
            sums[zd + xd] = DirectSum([(c, Z.obj(zd)) for c in range(r)], Z.ring)
    objects = {d: s.module for d, s in sums.items()}
    diffs = {}
    for deg, s in sums.items():
        zd, xd = deg[:n1], deg[n1:]
        for a in range(Z.n + X.n):
            if deg[a] == 0:
                continue
            tgt = sums[shifted(deg, a)]
            for fl in FLAVORS:
                if a < n1:
                    f = Z.diff(a, fl, zd)
                    diffs[(a, fl, deg)] = s.diag(tgt, {c: f for c in range(X.obj(xd).rank)})
                else:
                    A = X.diff(a - n1, fl, xd).matrix
                    src_mod = Z.obj(zd)
                    blocks = {}
                    for k, row in enumerate(A):
                        for l, v in enumerate(row):
                            if v:
                                blocks[(k, l)] = Morphism.scalar(src_mod, v)
                    diffs[(a, fl, deg)] = s.block(tgt, blocks)
    return BinaryMultiComplex.build(Z.ring, bounds, objects, diffs)


# ---------------------------------------------------------------------------
# Formal sums


class FormalSum:
    """Integer combination of complexes; zero weights and zero complexes are dropped."""

    def __init__(self, terms: Optional[Iterable[tuple[BinaryMultiComplex, int]]] = None):
        self.terms: dict[BinaryMultiComplex, int] = {}
        for X, w in terms or ():
            self._add(X, w)

    def _add(self, X, w):
        if not w or X.is_zero():
            return
        v = self.terms.get(X, 0) + w
        if v:
            self.terms[X] = v
        else:
            del self.terms[X]

    def __add__(self, other: "FormalSum") -> "FormalSum":
        out = FormalSum(self.terms.items())
        for X, w in other.terms.items():
            out._add(X, w)
        return out

    def __neg__(self) -> "FormalSum":
        return FormalSum((X, -w) for X, w in self.terms.items())

    def __sub__(self, other: "FormalSum") -> "FormalSum":
        return self + (-other)

    def __eq__(self, other):
        return isinstance(other, FormalSum) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __len__(self):
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def map(self, fn) -> "FormalSum":
        """Apply a linear substitution X -> fn(X) (a FormalSum) termwise."""
        out = FormalSum()
        for X, w in self.terms.items():
            for Y, v in fn(X).terms.items():
                out._add(Y, w * v)
        return out

    def __repr__(self):
        return "FormalSum(%d terms)" % len(self.terms)


def single(X: BinaryMultiComplex, w: int = 1) -> FormalSum:
    return FormalSum([(X, w)])
