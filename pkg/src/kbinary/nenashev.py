"""Length-2 binary acyclic complexes, 3x3 diagrams and the extension search."""

from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

from . import finmod
from .bincx import BinaryMultiComplex, FormalSum, binary_complex, is_diagonal, single
from .finmod import FinModule, Morphism, Subobject

SEARCH_LIMIT = 4096


@dataclass(frozen=True)
class BinarySES:
    """M' => M => M'' with top maps (i, p) and bottom maps (j, q)."""

    Mp: FinModule
    M: FinModule
    Mpp: FinModule
    i: Morphism
    j: Morphism
    p: Morphism
    q: Morphism

    @property
    def ring(self):
        return self.M.ring

    @property
    def objects(self):
        return (self.Mp, self.M, self.Mpp)

    def complex(self) -> BinaryMultiComplex:
        return binary_complex([self.Mpp, self.M, self.Mp], [self.p, self.i], [self.q, self.j])

    def key(self):
        return self.complex()

    def is_zero(self) -> bool:
        return all(X.is_zero() for X in self.objects)

    def __repr__(self):
        return "BinarySES(%r => %r => %r)" % self.objects


def ses_from_complex(X: BinaryMultiComplex) -> BinarySES:
    if X.n != 1 or X.bounds[0] > 2:
        raise ValueError("a binary short exact sequence is a 1-fold complex supported on [0, 2]")
    obj = [X.obj((k,)) for k in range(3)]
    return BinarySES(
        obj[2], obj[1], obj[0],
        X.diff(0, "top", (2,)), X.diff(0, "bottom", (2,)),
        X.diff(0, "top", (1,)), X.diff(0, "bottom", (1,)),
    )


def make_ses(Mp, M, Mpp, i, j, p, q) -> BinarySES:
    return BinarySES(Mp, M, Mpp, i, j, p, q)


def zero_ses(ring) -> BinarySES:
    Z = finmod.zero_module(ring)
    z = Morphism.zero(Z, Z)
    return BinarySES(Z, Z, Z, z, z, z, z)


def diagonal_ses(i: Morphism, p: Morphism) -> BinarySES:
    return BinarySES(i.src, i.tgt, p.tgt, i, i, p, p)


def verify_ses(S: BinarySES) -> list[str]:
    """Exactness of both rows of a binary short sequence."""
    out = []
    for name, f, src, tgt in (
        ("i", S.i, S.Mp, S.M), ("j", S.j, S.Mp, S.M), ("p", S.p, S.M, S.Mpp), ("q", S.q, S.M, S.Mpp)
    ):
        if f.src != src or f.tgt != tgt:
            out.append("%s has the wrong source or target" % name)
    if out:
        return out
    for flavor, a, b in (("top", S.i, S.p), ("bottom", S.j, S.q)):
        if not finmod.compose(b, a).is_zero():
            out.append("%s row is not a complex" % flavor)
        if not finmod.is_mono(a):
            out.append("%s row: first map is not injective" % flavor)
        if not finmod.is_epi(b):
            out.append("%s row: second map is not surjective" % flavor)
        if finmod.kernel_sub(b) != finmod.image(a):
            out.append("%s row: kernel of the second map differs from the image of the first" % flavor)
    return out


verify_generator = verify_ses


# ---------------------------------------------------------------------------
# 3x3 diagrams

Pair = tuple  # (top, bottom)


@dataclass(frozen=True)
class NenashevDiagram:
    """obj[r][c] with r = 0..2 top to bottom, c = 0..2 from degree 2 down to degree 0.

    h[r][c] is the (top, bottom) pair obj[r][c] -> obj[r][c+1];
    v[r][c] is the (top, bottom) pair obj[r][c] -> obj[r+1][c].
    """

    obj: tuple
    h: tuple
    v: tuple

    def row(self, r: int) -> BinarySES:
        o, h = self.obj[r], self.h[r]
        return BinarySES(o[0], o[1], o[2], h[0][0], h[0][1], h[1][0], h[1][1])

    def col(self, c: int) -> BinarySES:
        o = [self.obj[r][c] for r in range(3)]
        return BinarySES(o[0], o[1], o[2], self.v[0][c][0], self.v[0][c][1], self.v[1][c][0], self.v[1][c][1])


def _pair(x) -> Pair:
    if isinstance(x, Morphism):
        return (x, x)
    return tuple(x)


def build_diagram(obj, h, v) -> NenashevDiagram:
    """Entries of h and v may be a single morphism (used for both flavours) or a pair.

    A ``None`` entry stands for the zero map between the relevant objects.
    """
    obj = tuple(tuple(r) for r in obj)
    hh = []
    for r in range(3):
        row = []
        for c in range(2):
            x = h[r][c]
            row.append(_pair(Morphism.zero(obj[r][c], obj[r][c + 1]) if x is None else x))
        hh.append(tuple(row))
    vv = []
    for r in range(2):
        row = []
        for c in range(3):
            x = v[r][c]
            row.append(_pair(Morphism.zero(obj[r][c], obj[r + 1][c]) if x is None else x))
        vv.append(tuple(row))
    return NenashevDiagram(obj, tuple(hh), tuple(vv))


def verify_diagram(D: NenashevDiagram) -> list[str]:
    out = []
    for r in range(3):
        out += ["row %d: %s" % (r, m) for m in verify_ses(D.row(r))]
    for c in range(3):
        out += ["column %d: %s" % (c, m) for m in verify_ses(D.col(c))]
    if out:
        return out
    for r in range(2):
        for c in range(2):
            for k, flavor in enumerate(("top", "bottom")):
                right_down = finmod.compose(D.v[r][c + 1][k], D.h[r][c][k])
                down_right = finmod.compose(D.h[r + 1][c][k], D.v[r][c][k])
                if right_down != down_right:
                    out.append("%s square at (%d, %d) does not commute" % (flavor, r, c))
    return out


def relation_value(D: NenashevDiagram) -> FormalSum:
    """Columns of degree 0 - 1 + 2 minus rows top - middle + bottom; zero in K_1."""
    cols = [D.col(c).complex() for c in range(3)]
    rows = [D.row(r).complex() for r in range(3)]
    return FormalSum(
        [(cols[2], 1), (cols[1], -1), (cols[0], 1), (rows[0], -1), (rows[1], 1), (rows[2], -1)]
    )


def drop_diagonal(F: FormalSum) -> FormalSum:
    return FormalSum((X, w) for X, w in F.items() if not is_diagonal(X))


@dataclass(frozen=True)
class RelationInstance:
    kind: str  # "diagonal" or "threebythree"
    witness: Union[BinarySES, NenashevDiagram]
    value: FormalSum


def diagonal_relation(S: BinarySES) -> RelationInstance:
    if S.i != S.j or S.p != S.q:
        raise ValueError("sequence is not diagonal")
    return RelationInstance("diagonal", S, single(S.complex()))


def diagram_relation(D: NenashevDiagram) -> RelationInstance:
    bad = verify_diagram(D)
    if bad:
        raise ValueError("invalid diagram: " + "; ".join(bad))
    return RelationInstance("threebythree", D, relation_value(D))


def dualize_ses(S: BinarySES) -> BinarySES:
    d = finmod.dual_morphism
    return BinarySES(S.Mpp, S.M, S.Mp, d(S.p), d(S.q), d(S.i), d(S.j))


def dualize_diagram(D: NenashevDiagram) -> NenashevDiagram:
    d = finmod.dual_morphism
    obj = [[D.obj[2 - r][2 - c] for c in range(3)] for r in range(3)]
    h = [[tuple(d(f) for f in D.h[2 - r][1 - c]) for c in range(2)] for r in range(3)]
    v = [[tuple(d(f) for f in D.v[1 - r][2 - c]) for c in range(3)] for r in range(2)]
    return build_diagram(obj, h, v)


# ---------------------------------------------------------------------------
# Extension search
#
# In a diagram whose middle row is fixed, exactness of the columns makes the
# top-flavour vertical maps out of the top row injective, so up to isomorphism
# of the top and bottom rows the top-flavour data is a subcomplex of the
# middle row's top complex with exact quotient.  Such subcomplexes are
# determined by their middle term A: the others are i^-1(A) and p(A).  The
# same holds for the bottom flavour with a second subobject B.  The two
# choices only interact through the requirement that the objects agree.


@dataclass
class SearchReport:
    bound: int
    subobjects: int
    excluded_trivial: int
    excluded_bound: int
    pairs: int
    pruned_sub_types: int
    pruned_quotient_types: int
    witnesses: list = field(default_factory=list)  # (A, B, diagram)

    @property
    def found(self) -> int:
        return len(self.witnesses)


def _signature(S: BinarySES, A: Subobject, top: bool):
    i, p = (S.i, S.p) if top else (S.j, S.q)
    A2 = finmod.preimage(i, A)
    A0 = finmod.image_of(p, A)
    subs = (A2, A, A0)
    types = tuple(finmod.sub_module(X)[0].divisors for X in subs)
    quots = tuple(finmod.quotient(X)[0].divisors for X in subs)
    return types, quots, subs


def _signatures_chunk(args):
    S, cands = args
    return [(_signature(S, A, True)[:2], _signature(S, A, False)[:2]) for A in cands]


def _witness_diagram(S: BinarySES, A: Subobject, B: Subobject) -> NenashevDiagram:
    _, _, As = _signature(S, A, True)
    _, _, Bs = _signature(S, B, False)
    mid = [S.Mp, S.M, S.Mpp]
    top_obj, bot_obj, incA, incB, prA, prB = [], [], [], [], [], []
    for c in range(3):
        KA, ia = finmod.sub_module(As[c])
        KB, ib = finmod.sub_module(Bs[c])
        QA, pa = finmod.quotient(As[c])
        QB, pb = finmod.quotient(Bs[c])
        assert KA == KB and QA == QB
        top_obj.append(KA)
        bot_obj.append(QA)
        incA.append(ia)
        incB.append(ib)
        prA.append(pa)
        prB.append(pb)
    mid_top = [S.i, S.p]
    mid_bot = [S.j, S.q]
    h0, h2 = [], []
    for c in range(2):
        t = finmod.lift_through_mono(incA[c + 1], finmod.compose(mid_top[c], incA[c]))
        b = finmod.lift_through_mono(incB[c + 1], finmod.compose(mid_bot[c], incB[c]))
        h0.append((t, b))
        t = finmod.descend_through_epi(prA[c], finmod.compose(prA[c + 1], mid_top[c]))
        b = finmod.descend_through_epi(prB[c], finmod.compose(prB[c + 1], mid_bot[c]))
        h2.append((t, b))
    h = [h0, [(S.i, S.j), (S.p, S.q)], h2]
    v = [[(incA[c], incB[c]) for c in range(3)], [(prA[c], prB[c]) for c in range(3)]]
    return build_diagram([top_obj, mid, bot_obj], h, v)


def search_extensions(S: BinarySES, bound: int = 64, jobs: int = 1, max_witnesses: Optional[int] = None) -> SearchReport:
    """All 3x3 diagrams with middle row S and nonzero top and bottom rows.

    Results are up to isomorphism of the added rows, with the vertical
    identifications normalised to canonical inclusions and projections.
    Witnesses are returned in a canonical order.
    """
    if bound > SEARCH_LIMIT:
        raise ValueError("bound %d exceeds the search limit %d" % (bound, SEARCH_LIMIT))
    bad = verify_ses(S)
    if bad:
        raise ValueError("middle row is not a binary short exact sequence: " + "; ".join(bad))
    subs = finmod.enumerate_subobjects(S.M) if not S.M.is_zero() else ()
    nontrivial = [A for A in subs if not A.is_zero() and not A.is_whole()]
    excluded_trivial = len(subs) - len(nontrivial)
    cands, excluded_bound = [], 0
    for A in nontrivial:
        # every added object is a subquotient of a middle object; check the bound on them
        sig_t = _signature(S, A, True)
        sig_b = _signature(S, A, False)
        orders = [finmod.FinModule(S.ring, d).order for d in sig_t[0] + sig_t[1] + sig_b[0] + sig_b[1]]
        if max(orders, default=1) > bound:
            excluded_bound += 1
        else:
            cands.append(A)
    if jobs > 1 and len(cands) > 1:
        chunks = [cands[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_signatures_chunk, [(S, ch) for ch in chunks]))
        sigs = {}
        for ch, res in zip(chunks, parts):
            for A, r in zip(ch, res):
                sigs[A] = r
    else:
        sigs = {A: r for A, r in zip(cands, _signatures_chunk((S, cands)))}
    by_sub = defaultdict(list)
    by_full = defaultdict(list)
    for B in cands:
        types, quots = sigs[B][1]
        by_sub[types].append(B)
        by_full[(types, quots)].append(B)
    pairs = len(cands) ** 2
    sub_match = sum(len(by_sub[sigs[A][0][0]]) for A in cands)
    full_match = []
    for A in cands:
        for B in by_full.get(sigs[A][0], ()):
            full_match.append((A, B))
    full_match.sort(key=lambda ab: (ab[0].basis, ab[1].basis))
    report = SearchReport(
        bound=bound,
        subobjects=len(subs),
        excluded_trivial=excluded_trivial,
        excluded_bound=excluded_bound,
        pairs=pairs,
        pruned_sub_types=pairs - sub_match,
        pruned_quotient_types=sub_match - len(full_match),
    )
    for A, B in full_match[:max_witnesses] if max_witnesses else full_match:
        D = _witness_diagram(S, A, B)
        assert not verify_diagram(D)
        report.witnesses.append((A, B, D))
    return report
