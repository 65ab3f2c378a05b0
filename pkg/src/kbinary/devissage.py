"""Reduction of binary short exact sequences to semisimple pieces, with certificates.

Every internal node of a certificate carries one or more verified 3x3
diagrams.  The diagram relation (with diagonal complexes dropped) expresses
the node's sequence as a signed sum of its children's sequences; the
signed sum is stored in ``terms`` and re-derived by the verifier.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from . import finmod
from .bincx import FormalSum
from .finmod import DirectSum, FinModule, Morphism
from .nenashev import (
    BinarySES,
    build_diagram,
    drop_diagonal,
    dualize_diagram,
    dualize_ses,
    relation_value,
    verify_diagram,
    verify_ses,
)

LEAF_KINDS = ("SemisimpleLeaf", "ExceptionalLeaf")
EXEMPT_ROLES = ("permutation", "dual")


class ReductionError(RuntimeError):
    """A witness built by the reduction failed verification (a bug)."""


# ---------------------------------------------------------------------------
# Small helpers

compose = finmod.compose


def _sub(S):
    return finmod.sub_module(S)


def _quo(S):
    return finmod.quotient(S)


def _lift(m, g):
    return finmod.lift_through_mono(m, g)


def _desc(e, g):
    return finmod.descend_through_epi(e, g)


def _id(M):
    return Morphism.identity(M)


def _zero(M):
    return finmod.zero_module(M.ring)


def _len(M: FinModule) -> int:
    return finmod.length(M)


def _is_identity(f: Morphism) -> bool:
    return f.src == f.tgt and f == Morphism.identity(f.src)


def measure(S: BinarySES) -> tuple[int, int]:
    """(length of M, shape flag); strictly decreases along non-exempt edges."""
    if S.Mp.is_zero():
        flag = 0 if _is_identity(S.p) else 1
    elif S.Mpp.is_zero():
        flag = 0 if _is_identity(S.i) else 1
    else:
        flag = 2
    return (_len(S.M), flag)


# ---------------------------------------------------------------------------
# Classification


def _pair_out(S: BinarySES, f: Morphism, g: Morphism):
    """(f; g) : X -> Y + Y."""
    D = DirectSum([(0, f.tgt), (1, g.tgt)])
    return compose(D.inj[0], f) + compose(D.inj[1], g)


def _pair_in(S: BinarySES, f: Morphism, g: Morphism):
    """(f g) : X + X -> Y."""
    D = DirectSum([(0, f.src), (1, g.src)])
    return compose(f, D.proj[0]) + compose(g, D.proj[1])


def equalizer_sub(S: BinarySES):
    """Largest V in M' with i(V) == j(V), by iteration from M'."""
    V = finmod.whole(S.Mp)
    while True:
        W = finmod.intersect(finmod.image_of(S.i, V), finmod.image_of(S.j, V))
        V2 = finmod.intersect(finmod.preimage(S.i, W), finmod.preimage(S.j, W))
        if V2 == V:
            assert finmod.image_of(S.i, V) == finmod.image_of(S.j, V)
            return V
        assert finmod.contains(V, V2)
        V = V2


def coequalizer_sub(S: BinarySES):
    """Smallest T in M'' with p^-1(T) == q^-1(T), by iteration from 0."""
    T = finmod.zero_sub(S.Mpp)
    while True:
        V = finmod.sum_(finmod.preimage(S.p, T), finmod.preimage(S.q, T))
        T2 = finmod.sum_(finmod.image_of(S.p, V), finmod.image_of(S.q, V))
        if T2 == T:
            assert finmod.preimage(S.p, T) == finmod.preimage(S.q, T)
            return T
        assert finmod.contains(T2, T)
        T = T2


@dataclass(frozen=True)
class Classification:
    len_Mp: int
    len_M: int
    len_Mpp: int
    len_U: int  # i(M') cap j(M')
    len_Uprime: int  # i^-1(U) cap j^-1(U)
    len_Q: int  # M / (i(M') + j(M'))
    len_C: int  # M'' / (pj(M') + qi(M'))
    len_equalizer: int
    len_coequalizer_gap: int  # length of M'' / (smallest U'' with p^-1 U'' = q^-1 U'')
    splits: bool
    identities_hold: bool
    case: str

    @property
    def pattern(self) -> bool:
        """The exceptional pattern: lengths 3/3, U simple, U' = 0, C = 0."""
        return (
            self.len_Mp == 3 and self.len_Mpp == 3 and self.len_U == 1 and self.len_Uprime == 0 and self.len_C == 0
        )

    @property
    def covered(self) -> bool:
        """Whether the known case analysis claims the class is reducible."""
        exc_a = self.len_Mp == 3 and (self.len_U == 0 or (self.len_U == 1 and self.len_Uprime == 0))
        exc_b = self.len_Mpp == 3 and (self.len_Q == 0 or (self.len_Q == 1 and self.len_C == 0))
        if self.len_Mp <= 3 and not exc_a:
            return True
        if self.len_Mpp <= 3 and not exc_b:
            return True
        return self.len_M <= 6 and not self.pattern

    def conditions(self) -> dict:
        return {
            "lengths_3_3": self.len_Mp == 3 and self.len_Mpp == 3,
            "U_simple": self.len_U == 1,
            "Uprime_zero": self.len_Uprime == 0,
            "cokernel_zero": self.len_C == 0,
        }

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["pattern"] = self.pattern
        d["covered"] = self.covered
        d["conditions"] = self.conditions()
        return d


def _both_split(S: BinarySES) -> bool:
    return finmod.find_splitting(S.i) is not None and finmod.find_splitting(S.j) is not None


def classify(S: BinarySES) -> Classification:
    bad = verify_ses(S)
    if bad:
        raise ValueError("invalid sequence: " + "; ".join(bad))
    iM, jM = finmod.image(S.i), finmod.image(S.j)
    U = finmod.intersect(iM, jM)
    Up = finmod.intersect(finmod.preimage(S.i, U), finmod.preimage(S.j, U))
    sumIJ = finmod.sum_(iM, jM)
    pj, qi = compose(S.p, S.j), compose(S.q, S.i)
    imgC = finmod.sum_(finmod.image(pj), finmod.image(qi))
    len_Q = _len(S.M) - sumIJ.length
    len_C = _len(S.Mpp) - imgC.length
    # the same quantities as kernels and cokernels of the combined maps
    ok = True
    if not S.Mp.is_zero() and not S.Mpp.is_zero():
        ok &= finmod.kernel_sub(_pair_out(S, S.p, S.q)) == U
        ok &= _len(finmod.cokernel(_pair_in(S, S.i, S.j))[0]) == len_Q
        ok &= finmod.kernel_sub(_pair_out(S, pj, qi)) == Up
        ok &= _len(finmod.cokernel(_pair_in(S, pj, qi))[0]) == len_C
    eq = equalizer_sub(S)
    coeq = coequalizer_sub(S)
    lens = dict(
        len_Mp=_len(S.Mp),
        len_M=_len(S.M),
        len_Mpp=_len(S.Mpp),
        len_U=U.length,
        len_Uprime=Up.length,
        len_Q=len_Q,
        len_C=len_C,
        len_equalizer=eq.length,
        len_coequalizer_gap=_len(S.Mpp) - coeq.length,
    )
    if S.Mp.is_zero():
        case = "BinaryIso"
    elif S.Mpp.is_zero():
        case = "BinaryIsoDual"
    elif eq.length:
        case = "EqualImage"
    elif lens["len_coequalizer_gap"]:
        case = "EqualImageDual"
    elif U.is_zero():
        case = "DirectImages"
    elif len_C == 0 and _is_epi_pair(S):
        case = "DirectImagesDual"
    elif _phi_psi_small_guard(S, U, Up):
        case = "PhiPsiSmall"
    elif _phi_psi_large_guard(S, U, Up):
        case = "PhiPsiLarge"
    else:
        tmp = Classification(**lens, splits=False, identities_hold=ok, case="")
        case = "Exceptional" if tmp.pattern else "Unresolved"
    return Classification(**lens, splits=_both_split(S), identities_hold=ok, case=case)


def _is_epi_pair(S: BinarySES) -> bool:
    return finmod.is_epi(_pair_out(S, S.p, S.q))


def _phi_psi_small_guard(S, U, Up) -> bool:
    return _len(S.Mp) == 2 and U.length == 1 and Up.is_zero()


def _phi_psi_large_guard(S, U, Up) -> bool:
    if not (_len(S.Mp) == 3 and U.length == 2 and Up.length == 1):
        return False
    return finmod.intersect(finmod.image_of(S.i, Up), finmod.image_of(S.j, Up)).is_zero()


# ---------------------------------------------------------------------------
# Certificate trees


@dataclass(eq=False)
class CertNode:
    kind: str
    ses: BinarySES
    diagrams: list = field(default_factory=list)
    children: list = field(default_factory=list)
    roles: list = field(default_factory=list)
    terms: list = field(default_factory=list)  # (weight, "self" or child index)
    data: dict = field(default_factory=dict)

    def walk(self):
        seen = set()
        stack = [self]
        while stack:
            n = stack.pop()
            if id(n) in seen:
                continue
            seen.add(id(n))
            yield n
            stack.extend(reversed(n.children))


def summary(T: CertNode) -> dict:
    leaves = Counter()
    rules = Counter()

    def depth(n, d):
        return max([d] + [depth(c, d + 1) for c in n.children])

    def visit(n):
        rules[n.kind] += 1
        if n.kind == "SemisimpleLeaf":
            leaves["semisimple"] += 1
        elif n.kind == "ExceptionalLeaf":
            leaves["exceptional"] += 1
        for c in n.children:
            visit(c)

    visit(T)
    return {
        "leaves": {"semisimple": leaves["semisimple"], "exceptional": leaves["exceptional"]},
        "max_depth": depth(T, 0),
        "rules_used": dict(sorted(rules.items())),
    }


def has_exceptional(T: CertNode) -> bool:
    return any(n.kind == "ExceptionalLeaf" for n in T.walk())


# ---------------------------------------------------------------------------
# Steps.  Each returns (kind, diagram, [(child sequence, role)], terms).


def _ses(Mp, M, Mpp, i, j, p, q) -> BinarySES:
    return BinarySES(Mp, M, Mpp, i, j, p, q)


def _col(D, c):
    return D.col(c)


def _row(D, r):
    return D.row(r)


def step_binary_iso(S: BinarySES):
    """M' = 0 and p not the identity: move to (M, id, p^-1 q)."""
    alpha = compose(finmod.invert(S.p), S.q)
    Z = S.Mp
    obj = [[Z, S.M, S.M], [Z, S.M, S.Mpp], [Z, _zero(S.M), _zero(S.M)]]
    h = [[None, (_id(S.M), alpha)], [(S.i, S.j), (S.p, S.q)], [None, None]]
    v = [[None, _id(S.M), S.p], [None, None, None]]
    D = build_diagram(obj, h, v)
    return "BinaryIsoStep", [D], [(_row(D, 0), "recurse")], [(1, "self"), (-1, 0)]


def step_socle(S: BinarySES):
    """M' = 0, p = id: split off the socle of M."""
    M, q = S.M, S.q
    N = finmod.socle(M)
    Nm, inc = _sub(N)
    Q, pr = _quo(N)
    qN = _lift(inc, compose(q, inc))
    qbar = _desc(pr, compose(pr, q))
    Z = S.Mp
    obj = [[Z, Z, Z], [Nm, M, Q], [Nm, M, Q]]
    h = [[None, None], [inc, pr], [inc, pr]]
    v = [[None, None, None], [(_id(Nm), qN), (_id(M), q), (_id(Q), qbar)]]
    D = build_diagram(obj, h, v)
    return "BinaryIsoStep", [D], [(_col(D, 0), "recurse"), (_col(D, 2), "recurse")], [(-1, "self"), (1, 0), (1, 1)]


def step_split(S: BinarySES, s: Morphism, t: Morphism, kind: str = "SplitStep"):
    """Both rows split with retractions s, t: replace by the binary iso onto M' + M''."""
    E = DirectSum([(0, S.Mp), (1, S.Mpp)])
    sp = compose(E.inj[0], s) + compose(E.inj[1], S.p)
    tq = compose(E.inj[0], t) + compose(E.inj[1], S.q)
    Z = _zero(S.M)
    obj = [[Z, Z, Z], [S.Mp, S.M, S.Mpp], [S.Mp, E.module, S.Mpp]]
    h = [[None, None], [(S.i, S.j), (S.p, S.q)], [E.inj[0], E.proj[1]]]
    v = [[None, None, None], [_id(S.Mp), (sp, tq), _id(S.Mpp)]]
    D = build_diagram(obj, h, v)
    return kind, [D], [(_col(D, 1), "recurse")], [(1, "self"), (-1, 0)]


def step_equal_image(S: BinarySES, V):
    """i(V) = j(V) = U: split into (V => U -> 0) and the quotient sequence."""
    U = finmod.image_of(S.i, V)
    Vm, iV = _sub(V)
    Um, iU = _sub(U)
    QV, pV = _quo(V)
    QU, pU = _quo(U)
    i_r, j_r = _lift(iU, compose(S.i, iV)), _lift(iU, compose(S.j, iV))
    ib, jb = _desc(pV, compose(pU, S.i)), _desc(pV, compose(pU, S.j))
    pb, qb = _desc(pU, S.p), _desc(pU, S.q)
    Z = _zero(S.M)
    obj = [[Vm, Um, Z], [S.Mp, S.M, S.Mpp], [QV, QU, S.Mpp]]
    h = [[(i_r, j_r), None], [(S.i, S.j), (S.p, S.q)], [(ib, jb), (pb, qb)]]
    v = [[iV, iU, None], [pV, pU, _id(S.Mpp)]]
    D = build_diagram(obj, h, v)
    return "EqualImageStep", [D], [(_row(D, 0), "recurse"), (_row(D, 2), "recurse")], [(1, "self"), (-1, 0), (-1, 1)]


def step_equal_preimage(S: BinarySES, T):
    """p^-1(T) = q^-1(T) = U: split into (M' => U => T) and (0 -> M/U => M''/T)."""
    U = finmod.preimage(S.p, T)
    Um, iU = _sub(U)
    Tm, iT = _sub(T)
    QU, pU = _quo(U)
    QT, pT = _quo(T)
    i_r, j_r = _lift(iU, S.i), _lift(iU, S.j)
    p_r, q_r = _lift(iT, compose(S.p, iU)), _lift(iT, compose(S.q, iU))
    pb, qb = _desc(pU, compose(pT, S.p)), _desc(pU, compose(pT, S.q))
    Z = _zero(S.M)
    obj = [[S.Mp, Um, Tm], [S.Mp, S.M, S.Mpp], [Z, QU, QT]]
    h = [[(i_r, j_r), (p_r, q_r)], [(S.i, S.j), (S.p, S.q)], [None, (pb, qb)]]
    v = [[_id(S.Mp), iU, iT], [None, pU, pT]]
    D = build_diagram(obj, h, v)
    return "EqualImageStep", [D], [(_row(D, 0), "recurse"), (_row(D, 2), "recurse")], [(1, "self"), (-1, 0), (-1, 1)]


def step_direct_images(S: BinarySES):
    """i(M') and j(M') independent: permutation row on M'^2 and the induced column."""
    Mp = S.Mp
    E = DirectSum([(0, Mp), (1, Mp)])
    Qm, pQ = _quo(finmod.sum_(finmod.image(S.i), finmod.image(S.j)))
    ij = compose(S.i, E.proj[0]) + compose(S.j, E.proj[1])
    pj, qi = compose(S.p, S.j), compose(S.q, S.i)
    pb, qb = _desc(S.p, pQ), _desc(S.q, pQ)
    Z = _zero(S.M)
    obj = [[Mp, E.module, Mp], [Mp, S.M, S.Mpp], [Z, Qm, Qm]]
    h = [[(E.inj[0], E.inj[1]), (E.proj[1], E.proj[0])], [(S.i, S.j), (S.p, S.q)], [None, _id(Qm)]]
    v = [[_id(Mp), ij, (pj, qi)], [None, pQ, (pb, qb)]]
    D = build_diagram(obj, h, v)
    return (
        "DirectImageStep",
        [D],
        [(_row(D, 0), "permutation"), (_col(D, 2), "recurse")],
        [(1, "self"), (-1, 0), (1, 1)],
    )


def step_direct_images_dual(S: BinarySES):
    """(p; q) onto M''^2: permutation row on M''^2 and the induced column."""
    Mpp = S.Mpp
    F = DirectSum([(0, Mpp), (1, Mpp)])
    K = finmod.intersect(finmod.image(S.i), finmod.image(S.j))
    Km, iK = _sub(K)
    pq = compose(F.inj[0], S.p) + compose(F.inj[1], S.q)
    ii, jj = _lift(S.i, iK), _lift(S.j, iK)
    qi, pj = compose(S.q, S.i), compose(S.p, S.j)
    Z = _zero(S.M)
    obj = [[Km, Km, Z], [S.Mp, S.M, Mpp], [Mpp, F.module, Mpp]]
    h = [[_id(Km), None], [(S.i, S.j), (S.p, S.q)], [(F.inj[1], F.inj[0]), (F.proj[0], F.proj[1])]]
    v = [[(ii, jj), iK, None], [(qi, pj), pq, _id(Mpp)]]
    D = build_diagram(obj, h, v)
    return (
        "DirectImageStep",
        [D],
        [(_row(D, 2), "permutation"), (_col(D, 0), "recurse")],
        [(1, "self"), (-1, 0), (1, 1)],
    )


def _copies(M, r):
    return DirectSum([(k, M) for k in range(r)], M.ring)


def _quotient_column(S: BinarySES):
    Qm, pQ = _quo(finmod.sum_(finmod.image(S.i), finmod.image(S.j)))
    return Qm, pQ, _desc(S.p, pQ), _desc(S.q, pQ)


def step_phi_psi_small(S: BinarySES, U):
    """len M' = 2, U simple, U' = 0: top row U^2 => U^3 => U."""
    Um, iU = _sub(U)
    i_inv, j_inv = _lift(S.i, iU), _lift(S.j, iU)
    checks = {
        "Mp_is_direct_sum": (
            finmod.intersect(finmod.image(j_inv), finmod.image(i_inv)).is_zero()
            and finmod.sum_(finmod.image(j_inv), finmod.image(i_inv)).is_whole()
        ),
    }
    E2, E3 = _copies(Um, 2), _copies(Um, 3)
    idU = _id(Um)
    phi = E2.block(E3, {(0, 0): idU, (1, 1): idU})
    psi = E2.block(E3, {(1, 0): idU, (2, 1): idU})
    a = compose(j_inv, E2.proj[0]) + compose(i_inv, E2.proj[1])
    ij_, ji_ = compose(S.i, j_inv), compose(S.j, i_inv)
    b = compose(ij_, E3.proj[0]) + compose(iU, E3.proj[1]) + compose(ji_, E3.proj[2])
    parts = [finmod.image(ij_), U, finmod.image(ji_)]
    checks["sum_is_direct"] = finmod.is_mono(b)
    checks["sum_is_image_sum"] = finmod.image(b) == finmod.sum_(finmod.image(S.i), finmod.image(S.j))
    checks["summand_lengths"] = [X.length for X in parts]
    Qm, pQ, pb, qb = _quotient_column(S)
    ct, cb = compose(S.p, ji_), compose(S.q, ij_)
    Z = _zero(S.M)
    obj = [[E2.module, E3.module, Um], [S.Mp, S.M, S.Mpp], [Z, Qm, Qm]]
    h = [[(phi, psi), (E3.proj[2], E3.proj[0])], [(S.i, S.j), (S.p, S.q)], [None, _id(Qm)]]
    v = [[a, b, (ct, cb)], [None, pQ, (pb, qb)]]
    D = build_diagram(obj, h, v)
    return (
        "PhiPsiDiagramStep",
        [D],
        [(_row(D, 0), "recurse"), (_col(D, 2), "recurse")],
        [(1, "self"), (-1, 0), (1, 1)],
        checks,
    )


def step_phi_psi_large(S: BinarySES, Up):
    """len M' = 3, len U = 2, U' simple with i(U') cap j(U') = 0: top row U'^3 => U'^4 => U'."""
    Vm, iV = _sub(Up)
    ji = _lift(S.j, compose(S.i, iV))  # j^-1 i
    ij = _lift(S.i, compose(S.j, iV))  # i^-1 j
    E3, E4 = _copies(Vm, 3), _copies(Vm, 4)
    idV = _id(Vm)
    phi = E3.block(E4, {(0, 0): idV, (1, 1): idV, (2, 2): idV})
    psi = E3.block(E4, {(1, 0): idV, (2, 1): idV, (3, 2): idV})
    a = compose(ji, E3.proj[0]) + compose(iV, E3.proj[1]) + compose(ij, E3.proj[2])
    m0, m1, m2, m3 = compose(S.i, ji), compose(S.i, iV), compose(S.j, iV), compose(S.j, ij)
    b = compose(m0, E4.proj[0]) + compose(m1, E4.proj[1]) + compose(m2, E4.proj[2]) + compose(m3, E4.proj[3])
    checks = {
        "Mp_is_direct_sum": finmod.is_iso(a),
        "sum_is_direct": finmod.is_mono(b),
        "sum_is_image_sum": finmod.image(b) == finmod.sum_(finmod.image(S.i), finmod.image(S.j)),
    }
    Qm, pQ, pb, qb = _quotient_column(S)
    ct, cb = compose(S.p, m3), compose(S.q, m0)
    Z = _zero(S.M)
    obj = [[E3.module, E4.module, Vm], [S.Mp, S.M, S.Mpp], [Z, Qm, Qm]]
    h = [[(phi, psi), (E4.proj[3], E4.proj[0])], [(S.i, S.j), (S.p, S.q)], [None, _id(Qm)]]
    v = [[a, b, (ct, cb)], [None, pQ, (pb, qb)]]
    D = build_diagram(obj, h, v)
    return (
        "PhiPsiDiagramStep",
        [D],
        [(_row(D, 0), "recurse"), (_col(D, 2), "recurse")],
        [(1, "self"), (-1, 0), (1, 1)],
        checks,
    )


# ---------------------------------------------------------------------------
# The reduction


def _leaf(kind, S, data=None):
    return CertNode(kind, S, data=data or {})


def _is_semisimple_ses(S: BinarySES) -> bool:
    return all(finmod.is_semisimple(X) for X in S.objects)


def _choose_step(S: BinarySES):
    """First applicable primal rule, or None."""
    if S.Mp.is_zero():
        if _is_identity(S.p):
            return ("R1", step_socle(S))
        return ("R1", step_binary_iso(S))
    s, t = finmod.find_splitting(S.i), finmod.find_splitting(S.j)
    if s is not None and t is not None and not S.Mpp.is_zero():
        return ("R2", step_split(S, s, t))
    V = equalizer_sub(S)
    if not V.is_zero():
        return ("R3", step_equal_image(S, V))
    T = coequalizer_sub(S)
    if not T.is_whole():
        return ("R3'", step_equal_preimage(S, T))
    iM, jM = finmod.image(S.i), finmod.image(S.j)
    U = finmod.intersect(iM, jM)
    if U.is_zero():
        return ("R4", step_direct_images(S))
    if _is_epi_pair(S):
        return ("R4'", step_direct_images_dual(S))
    Up = finmod.intersect(finmod.preimage(S.i, U), finmod.preimage(S.j, U))
    if _phi_psi_small_guard(S, U, Up):
        return ("R5", step_phi_psi_small(S, U))
    if _phi_psi_large_guard(S, U, Up):
        return ("R6", step_phi_psi_large(S, Up))
    if s is not None and t is not None:
        return ("R2", step_split(S, s, t))
    return None


class Reducer:
    def __init__(self, allow_dual: bool = True, check: bool = True):
        self.allow_dual = allow_dual
        self.check = check
        self.memo: dict = {}

    def reduce(self, S: BinarySES, dual_ok: bool = True, role: str = "root") -> CertNode:
        key = (S.complex(), dual_ok, role == "permutation")
        node = self.memo.get(key)
        if node is None:
            node = self._reduce(S, dual_ok, role)
            self.memo[key] = node
        return node

    def _reduce(self, S: BinarySES, dual_ok: bool, role: str) -> CertNode:
        if _is_semisimple_ses(S):
            return _leaf("SemisimpleLeaf", S)
        if role == "permutation":
            s, t = finmod.find_splitting(S.i), finmod.find_splitting(S.j)
            if s is None or t is None:
                raise ReductionError("permutation row does not split")
            return self._node(S, "R2", step_split(S, s, t, kind="PermutationStep"))
        if S.Mpp.is_zero() and not S.Mp.is_zero() and dual_ok and self.allow_dual:
            return self._dual(S)
        chosen = _choose_step(S)
        if chosen is not None:
            return self._node(S, *chosen)
        if dual_ok and self.allow_dual:
            Sd = dualize_ses(S)
            if _choose_step(Sd) is not None:
                return self._dual(S)
        cl = classify(S)
        return _leaf(
            "ExceptionalLeaf",
            S,
            {"classification": cl.as_dict(), "matches_pattern": cl.pattern, "outside_known_cases": not cl.covered},
        )

    def _dual(self, S: BinarySES) -> CertNode:
        child = self.reduce(dualize_ses(S), dual_ok=False, role="dual")
        return CertNode("DualStep", S, children=[child], roles=["dual"], data={"rule": "dual"})

    def _node(self, S: BinarySES, rule: str, step) -> CertNode:
        kind, diagrams, kids, terms = step[:4]
        data = {"rule": rule}
        if len(step) > 4:
            data["directness"] = step[4]
        if self.check:
            for D in diagrams:
                bad = verify_diagram(D)
                if bad:
                    raise ReductionError("%s witness failed: %s" % (rule, "; ".join(bad[:3])))
            if kids and any(X.complex() == S.complex() for X, _ in kids if _ != "permutation"):
                raise ReductionError("%s produced its own input as a child" % rule)
        node = CertNode(kind, S, diagrams=list(diagrams), roles=[r for _, r in kids], terms=list(terms), data=data)
        for X, r in kids:
            if r != "permutation" and self.check and not measure(X) < measure(S):
                raise ReductionError("%s does not decrease the measure: %r -> %r" % (rule, measure(S), measure(X)))
            node.children.append(self.reduce(X, dual_ok=True, role=r))
        if self.check:
            bad = _identity_failures(node)
            if bad:
                raise ReductionError("%s bookkeeping failed: %s" % (rule, bad))
        return node


def reduce(S: BinarySES, allow_dual: bool = True, check: bool = True) -> CertNode:
    bad = verify_ses(S)
    if bad:
        raise ValueError("invalid sequence: " + "; ".join(bad))
    return Reducer(allow_dual, check).reduce(S)


# ---------------------------------------------------------------------------
# Verification


def _identity_failures(node: CertNode) -> Optional[str]:
    derived = FormalSum()
    for D in node.diagrams:
        derived = derived + relation_value(D)
    derived = drop_diagonal(derived)
    claimed = []
    selfs = [w for w, r in node.terms if r == "self"]
    if len(selfs) != 1 or abs(selfs[0]) != 1:
        return "the node's own class must appear exactly once with weight +-1"
    used = {r for _, r in node.terms if r != "self"}
    if used != set(range(len(node.children))):
        return "every child must appear in the bookkeeping"
    for w, r in node.terms:
        X = node.ses if r == "self" else node.children[r].ses
        claimed.append((X.complex(), w))
    claimed = drop_diagonal(FormalSum(claimed))
    if claimed != derived:
        return "stored signed sum does not match the diagram relation"
    return None


def verify_certificate(T: CertNode) -> list[str]:
    out: list[str] = []
    done: set = set()

    def visit(n: CertNode, path: str):
        if id(n) in done:
            return
        done.add(id(n))
        where = "%s[%s]" % (path, n.kind)
        out.extend("%s: %s" % (where, m) for m in verify_ses(n.ses))
        if n.kind == "SemisimpleLeaf":
            if not _is_semisimple_ses(n.ses):
                out.append("%s: leaf has a non-semisimple object" % where)
        elif n.kind == "ExceptionalLeaf":
            try:
                cl = classify(n.ses)
            except ValueError as exc:
                out.append("%s: %s" % (where, exc))
            else:
                stored = n.data.get("classification", {})
                if stored != cl.as_dict():
                    out.append("%s: stored classification does not match a recomputation" % where)
                if n.data.get("matches_pattern") != cl.pattern:
                    out.append("%s: pattern flag is wrong" % where)
        elif n.kind == "DualStep":
            if len(n.children) != 1:
                out.append("%s: needs exactly one child" % where)
            elif n.children[0].ses != dualize_ses(n.ses):
                out.append("%s: child is not the dual sequence" % where)
        else:
            if not n.diagrams:
                out.append("%s: no witness diagram" % where)
            for k, D in enumerate(n.diagrams):
                out.extend("%s: diagram %d: %s" % (where, k, m) for m in verify_diagram(D))
            if len(n.roles) != len(n.children):
                out.append("%s: roles and children differ in number" % where)
            bad = _identity_failures(n)
            if bad:
                out.append("%s: %s" % (where, bad))
            for c, r in zip(n.children, n.roles):
                if r not in EXEMPT_ROLES and not measure(c.ses) < measure(n.ses):
                    out.append("%s: measure does not decrease towards a child" % where)
        if n.kind in LEAF_KINDS and n.children:
            out.append("%s: leaf with children" % where)
        for k, c in enumerate(n.children):
            visit(c, "%s/%d" % (path, k))

    visit(T, "")
    return out


# ---------------------------------------------------------------------------
# Duality of certificates


def dualize_certificate(T: CertNode) -> CertNode:
    """A certificate for the dual sequence, obtained by dualising every witness."""
    if T.kind == "DualStep":
        return T.children[0]
    Sd = dualize_ses(T.ses)
    if T.kind == "ExceptionalLeaf":
        cl = classify(Sd)
        return CertNode(
            T.kind, Sd, data={"classification": cl.as_dict(), "matches_pattern": cl.pattern, "outside_known_cases": not cl.covered}
        )
    if T.kind in LEAF_KINDS:
        return CertNode(T.kind, Sd, data=dict(T.data))
    return CertNode(
        T.kind,
        Sd,
        diagrams=[dualize_diagram(D) for D in T.diagrams],
        children=[dualize_certificate(c) for c in T.children],
        roles=list(T.roles),
        terms=list(T.terms),
        data=dict(T.data),
    )
