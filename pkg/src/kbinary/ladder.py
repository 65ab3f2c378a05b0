"""Binary ladders, torsion complexes and the directional Grayson shortening."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from . import finmod
from .bincx import (
    FLAVORS,
    BinaryMultiComplex,
    FormalSum,
    box,
    is_free,
    shifted,
    single,
    validate,
    acyclicity_failures,
)
from .finmod import DirectSum, Morphism


class HypothesisError(ValueError):
    """Input does not satisfy the preconditions of a construction."""


def _insert(deg, n, c):
    return tuple(deg[:n]) + (c,) + tuple(deg[n:])


def _drop(deg, n):
    return tuple(deg[:n]) + tuple(deg[n + 1:])


# ---------------------------------------------------------------------------
# Ladders


@dataclass(frozen=True, eq=False)
class Ladder:
    P: BinaryMultiComplex
    Q: BinaryMultiComplex
    j: int
    sigma: Mapping
    tau: Mapping

    def _get(self, fam, deg):
        f = fam.get(tuple(deg))
        return f if f is not None else Morphism.zero(self.P.obj(deg), self.Q.obj(deg))

    def sig(self, deg) -> Morphism:
        return self._get(self.sigma, deg)

    def tau_at(self, deg) -> Morphism:
        return self._get(self.tau, deg)

    @property
    def bounds(self):
        return tuple(max(a, b) for a, b in zip(self.P.bounds, self.Q.bounds))

    def __eq__(self, other):
        if not isinstance(other, Ladder):
            return False
        if (self.P, self.Q, self.j) != (other.P, other.Q, other.j):
            return False
        return all(
            self.sig(d) == other.sig(d) and self.tau_at(d) == other.tau_at(d) for d in box(self.bounds)
        )

    __hash__ = None


def identity_ladder(P: BinaryMultiComplex, j: int) -> Ladder:
    ids = {d: Morphism.identity(M) for d, M in P.objects.items()}
    return Ladder(P, P, j, ids, dict(ids))


def validate_ladder(L: Ladder, check_acyclic: bool = True) -> list[str]:
    report = []
    if L.P.n != L.Q.n:
        return ["P and Q have different numbers of directions"]
    if not 0 <= L.j < L.P.n:
        return ["ladder direction %d out of range" % L.j]
    for name, X in (("P", L.P), ("Q", L.Q)):
        report += ["%s: %s" % (name, r) for r in validate(X)]
        if check_acyclic and not report:
            report += ["%s: %s" % (name, r) for r in acyclicity_failures(X)]
    if report:
        return report
    fams = (("sigma", L.sig), ("tau", L.tau_at))
    for deg in box(L.bounds):
        for name, fam in fams:
            f = fam(deg)
            if f.src != L.P.obj(deg) or f.tgt != L.Q.obj(deg):
                report.append("%s at %r has the wrong source or target" % (name, deg))
            elif not finmod.is_iso(f):
                report.append("%s at %r is not an isomorphism" % (name, deg))
    if report:
        return report
    for deg in box(L.bounds):
        for a in range(L.P.n):
            if deg[a] == 0:
                continue
            low = shifted(deg, a)
            for name, fam in fams:
                for fl in FLAVORS:
                    if a == L.j and fl != ("top" if name == "sigma" else "bottom"):
                        continue
                    lhs = finmod.compose(L.Q.diff(a, fl, deg), fam(deg))
                    rhs = finmod.compose(fam(low), L.P.diff(a, fl, deg))
                    if lhs != rhs:
                        report.append(
                            "%s does not commute with the %s differential in direction %d at %r" % (name, fl, a, deg)
                        )
    return report


def torsion(L: Ladder, i: int) -> BinaryMultiComplex:
    """The complex P_i => Q_i placed in degrees 1 and 0 of direction j."""
    j = L.j
    bounds = L.bounds
    if bounds[j] < 1:
        raise HypothesisError("direction %d needs bound at least 1" % j)
    if not 0 <= i <= bounds[j]:
        raise HypothesisError("index %d out of range [0, %d]" % (i, bounds[j]))
    objects, diffs = {}, {}
    for deg in box(bounds):
        if deg[j] > 1:
            continue
        src = _insert(_drop(deg, j), j, i)
        X = L.P if deg[j] == 1 else L.Q
        objects[deg] = X.obj(src)
        if deg[j] == 1:
            diffs[(j, "top", deg)] = L.sig(src)
            diffs[(j, "bottom", deg)] = L.tau_at(src)
        for a in range(L.P.n):
            if a != j and deg[a] > 0:
                for fl in FLAVORS:
                    diffs[(a, fl, deg)] = X.diff(a, fl, src)
    return BinaryMultiComplex.build(L.P.ring, bounds, objects, diffs)


@dataclass(frozen=True)
class RelationElement:
    ladder: Ladder
    terms: tuple  # raw (complex, weight) pairs before cancellation
    value: FormalSum
    involution: bool


def _is_involution(fam, L: Ladder) -> bool:
    for deg in box(L.bounds):
        f = fam(deg)
        if finmod.compose(f, f) != Morphism.identity(L.P.obj(deg)):
            return False
    return True


def relation_element(L: Ladder, check: bool = True) -> RelationElement:
    if check:
        bad = validate_ladder(L)
        if bad:
            raise HypothesisError("invalid ladder: " + "; ".join(bad))
    terms = [(L.Q, 1), (L.P, -1)]
    for i in range(L.bounds[L.j] + 1):
        terms.append((torsion(L, i), -((-1) ** i)))
    inv = L.P == L.Q and _is_involution(L.sig, L) and _is_involution(L.tau_at, L)
    return RelationElement(L, tuple(terms), FormalSum(terms), inv)


# ---------------------------------------------------------------------------
# Shortening


@dataclass(frozen=True)
class Kernels:
    J: BinaryMultiComplex
    K: BinaryMultiComplex
    incJ: dict  # deg' -> mono J_deg' -> P_1
    incK: dict


def _kernel_complex(P: BinaryMultiComplex, n: int, flavor: str):
    bounds = _drop(P.bounds, n)
    objs, incs, diffs = {}, {}, {}
    for dd in box(bounds):
        K, inc = finmod.kernel(P.diff(n, flavor, _insert(dd, n, 1)))
        objs[dd], incs[dd] = K, inc
    for dd in box(bounds):
        for a in range(len(bounds)):
            if dd[a] == 0:
                continue
            a_full = a if a < n else a + 1
            low = shifted(dd, a)
            for fl in FLAVORS:
                f = P.diff(a_full, fl, _insert(dd, n, 1))
                diffs[(a, fl, dd)] = finmod.lift_through_mono(incs[low], finmod.compose(f, incs[dd]))
    return BinaryMultiComplex.build(P.ring, bounds, objs, diffs), incs


def _check_direction(P: BinaryMultiComplex, n: int, min_bound: int):
    if not 0 <= n < P.n:
        raise HypothesisError("direction %d out of range" % n)
    if P.bounds[n] < min_bound:
        raise HypothesisError("support too short in direction %d (bound %d, need %d)" % (n, P.bounds[n], min_bound))


def _check_acyclic_in(P: BinaryMultiComplex, n: int):
    bad = validate(P)
    if bad:
        raise HypothesisError("invalid complex: " + "; ".join(bad[:3]))
    for fl in FLAVORS:
        for deg in P.degrees():
            if P.obj(deg).is_zero():
                continue
            ker = finmod.kernel_sub(P.diff(n, fl, deg))
            img = finmod.image(P.diff(n, fl, shifted(deg, n, +1)))
            if ker != img:
                raise HypothesisError("not acyclic in direction %d at %r (%s)" % (n, deg, fl))


def boundary_kernels(P: BinaryMultiComplex, n: int, check: bool = True) -> Kernels:
    """J = ker d_1 and K = ker d'_1 in direction n, as complexes in the remaining directions."""
    _check_direction(P, n, 1)
    if check:
        _check_acyclic_in(P, n)
    J, incJ = _kernel_complex(P, n, "top")
    K, incK = _kernel_complex(P, n, "bottom")
    return Kernels(J, K, incJ, incK)


def _names(c):
    if c == 0:
        return ["J", "K", 0]
    if c == 1:
        return [2, "K", "J", 1]
    if c == 2:
        return [3, "J", "K"]
    return [c + 1]


class _Shortener:
    """Shared bookkeeping for shortening a complex and maps out of it."""

    def __init__(self, P: BinaryMultiComplex, n: int, check: bool = True):
        _check_direction(P, n, 3)
        self.P, self.n = P, n
        self.ker = boundary_kernels(P, n, check=check)
        self.bounds = P.bounds[:n] + (P.bounds[n] - 1,) + P.bounds[n + 1:]
        self.sums = {}
        for deg in box(self.bounds):
            self.sums[deg] = DirectSum([(nm, self.part(nm, deg)) for nm in _names(deg[n])], P.ring)

    def part(self, name, deg):
        dd = _drop(deg, self.n)
        if name == "J":
            return self.ker.J.obj(dd)
        if name == "K":
            return self.ker.K.obj(dd)
        return self.P.obj(_insert(dd, self.n, name))

    def part_diff(self, name, a, fl, deg):
        """Differential of one summand in a direction other than n."""
        dd = _drop(deg, self.n)
        if name in ("J", "K"):
            X = self.ker.J if name == "J" else self.ker.K
            return X.diff(a if a < self.n else a - 1, fl, dd)
        return self.P.diff(a, fl, _insert(dd, self.n, name))

    def n_blocks(self, fl, deg):
        P, n = self.P, self.n
        dd = _drop(deg, n)
        c = deg[n]
        at = lambda k: _insert(dd, n, k)
        d = lambda k: P.diff(n, fl, at(k))
        other = "bottom" if fl == "top" else "top"
        incJ, incK = self.ker.incJ[dd], self.ker.incK[dd]
        own, cross = ("J", "K") if fl == "top" else ("K", "J")
        own_inc = incJ if fl == "top" else incK
        cross_inc = incK if fl == "top" else incJ
        if c == 2:
            return {
                (2, 3): d(3),
                (own, own): Morphism.identity(self.part(own, deg)),
                (1, cross): cross_inc,
            }
        if c == 1:
            return {
                (own, 2): finmod.lift_through_mono(own_inc, d(2)),
                (cross, cross): Morphism.identity(self.part(cross, deg)),
                (0, 1): P.diff(n, other, at(1)),
            }
        return {(c, c + 1): d(c + 1)}

    def build(self) -> BinaryMultiComplex:
        n = self.n
        objects = {deg: s.module for deg, s in self.sums.items()}
        diffs = {}
        for deg, s in self.sums.items():
            for a in range(self.P.n):
                if deg[a] == 0:
                    continue
                tgt = self.sums[shifted(deg, a)]
                for fl in FLAVORS:
                    if a == n:
                        diffs[(a, fl, deg)] = s.block(tgt, self.n_blocks(fl, deg))
                    else:
                        diffs[(a, fl, deg)] = s.diag(tgt, {nm: self.part_diff(nm, a, fl, deg) for nm in s.names})
        return BinaryMultiComplex.build(self.P.ring, self.bounds, objects, diffs)


def shorten(P: BinaryMultiComplex, n: int, check: bool = True) -> BinaryMultiComplex:
    """Grayson shortening in direction n: the bound in that direction drops by one."""
    return _Shortener(P, n, check).build()


def shorten_times(P: BinaryMultiComplex, n: int, times: int, check: bool = True) -> BinaryMultiComplex:
    for _ in range(times):
        P = shorten(P, n, check)
    return P


def _switch_from(J: BinaryMultiComplex, bounds, n: int) -> BinaryMultiComplex:
    ring = J.ring
    sums = {}
    objects, diffs = {}, {}
    for deg in box(bounds):
        if deg[n] > 1:
            continue
        dd = _drop(deg, n)
        sums[deg] = DirectSum([(0, J.obj(dd)), (1, J.obj(dd))], ring)
        objects[deg] = sums[deg].module
    for deg, s in sums.items():
        dd = _drop(deg, n)
        for a in range(len(bounds)):
            if deg[a] == 0:
                continue
            tgt = sums[shifted(deg, a)]
            if a == n:
                idJ = Morphism.identity(J.obj(dd))
                diffs[(a, "top", deg)] = s.diag(tgt, {0: idJ, 1: idJ})
                diffs[(a, "bottom", deg)] = s.block(tgt, {(1, 0): idJ, (0, 1): idJ})
            else:
                for fl in FLAVORS:
                    f = J.diff(a if a < n else a - 1, fl, dd)
                    diffs[(a, fl, deg)] = s.diag(tgt, {0: f, 1: f})
    return BinaryMultiComplex.build(ring, bounds, objects, diffs)


def switch_complex(P: BinaryMultiComplex, n: int, check: bool = True, use: str = "J") -> BinaryMultiComplex:
    """J + J in n-degrees 1 and 0, top differential id, bottom the swap."""
    ker = boundary_kernels(P, n, check=check)
    bounds = P.bounds[:n] + (1,) + P.bounds[n + 1:]
    return _switch_from(ker.J if use == "J" else ker.K, bounds, n)


# ---------------------------------------------------------------------------
# Shortening ladders


def _restrict(f: Morphism, inc_src: Morphism, inc_tgt: Morphism, what: str) -> Morphism:
    try:
        return finmod.lift_through_mono(inc_tgt, finmod.compose(f, inc_src))
    except finmod.ModuleError as exc:
        raise HypothesisError("%s does not restrict to the kernels" % what) from exc


@dataclass
class ShortenedLadder:
    main: Ladder
    switch: Ladder
    readings: dict  # reading name -> None if it yields a valid ladder, else a reason


def shorten_ladder(L: Ladder, n: int, check: bool = True) -> ShortenedLadder:
    """The two ladders replacing L after shortening both complexes in direction n."""
    if n == L.j:
        raise HypothesisError("shortening direction must differ from the ladder direction")
    if check:
        bad = validate_ladder(L)
        if bad:
            raise HypothesisError("invalid ladder: " + "; ".join(bad[:3]))
    sP, sQ = _Shortener(L.P, n, check), _Shortener(L.Q, n, check)
    kP, kQ = sP.ker, sQ.ker
    rest = {}
    for dd in box(_drop(L.bounds, n)):
        at1 = _insert(dd, n, 1)
        for nm, fam in (("sigma", L.sig), ("tau", L.tau_at)):
            f = fam(at1)
            rest[(nm, "J", dd)] = _restrict(f, kP.incJ[dd], kQ.incJ[dd], nm + "_1 on J")
            rest[(nm, "K", dd)] = _restrict(f, kP.incK[dd], kQ.incK[dd], nm + "_1 on K")

    def short_family(nm, fam):
        out = {}
        for deg, s in sP.sums.items():
            dd = _drop(deg, n)
            maps = {}
            for part in s.names:
                if part in ("J", "K"):
                    maps[part] = rest[(nm, part, dd)]
                else:
                    maps[part] = fam(_insert(dd, n, part))
            out[deg] = s.diag(sQ.sums[deg], maps)
        return out

    main = Ladder(sP.build(), sQ.build(), L.j, short_family("sigma", L.sig), short_family("tau", L.tau_at))

    sw_bounds = L.bounds[:n] + (1,) + L.bounds[n + 1:]
    swP = _switch_from(kP.J, sw_bounds, n)
    swQ = _switch_from(kQ.J, sw_bounds, n)

    def doubled(nm, part):
        out = {}
        for deg in box(sw_bounds):
            if deg[n] > 1:
                continue
            dd = _drop(deg, n)
            f = rest[(nm, part, dd)]
            a = DirectSum([(0, f.src), (1, f.src)], L.P.ring)
            b = DirectSum([(0, f.tgt), (1, f.tgt)], L.P.ring)
            out[deg] = a.diag(b, {0: f, 1: f})
        return out

    switch = Ladder(swP, swQ, L.j, doubled("sigma", "J"), doubled("tau", "J"))

    readings = {"J": None}
    same = all(
        kP.J.obj(dd) == kP.K.obj(dd)
        and kQ.J.obj(dd) == kQ.K.obj(dd)
        and finmod.image(kP.incJ[dd]) == finmod.image(kP.incK[dd])
        and finmod.image(kQ.incJ[dd]) == finmod.image(kQ.incK[dd])
        for dd in box(_drop(L.bounds, n))
    )
    if not same:
        readings["mixed"] = "tau_K runs between K-objects while the switch complexes are built on J"
    else:
        mixed = Ladder(swP, swQ, L.j, doubled("sigma", "J"), doubled("tau", "K"))
        bad = validate_ladder(mixed, check_acyclic=False)
        readings["mixed"] = "; ".join(bad) if bad else None
    return ShortenedLadder(main, switch, readings)


def shortening_substitution(X: BinaryMultiComplex, n: int) -> FormalSum:
    """X -> short_n(X) + s_{X,n}, extended linearly to formal sums."""
    return single(shorten(X, n, check=False)) + single(switch_complex(X, n, check=False))


def ladder_identity_failures(L: Ladder, n: int, out: Optional[ShortenedLadder] = None) -> list[str]:
    """Check every identity the shortened ladders are supposed to satisfy."""
    out = out or shorten_ladder(L, n)
    fails = []
    for name, lad in (("main", out.main), ("switch", out.switch)):
        fails += ["%s ladder: %s" % (name, r) for r in validate_ladder(lad)]
    k = L.bounds[L.j]
    for i in range(k + 1):
        T = torsion(L, i)
        if torsion(out.main, i) != shorten(T, n, check=False):
            fails.append("torsion of the shortened ladder differs from the shortened torsion at i=%d" % i)
        if torsion(out.switch, i) != switch_complex(T, n, check=False):
            fails.append("torsion of the switch ladder differs from the switch complex of the torsion at i=%d" % i)
    lhs = relation_element(L, check=False).value.map(lambda X: shortening_substitution(X, n))
    rhs = relation_element(out.main, check=False).value + relation_element(out.switch, check=False).value
    if lhs != rhs:
        fails.append("relation bookkeeping does not balance")
    return fails


# ---------------------------------------------------------------------------
# Tensoring ladders with free complexes


def _copies(M, r, ring):
    return DirectSum([(c, M) for c in range(r)], ring)


def ladder_tensor_free(L: Ladder, X: BinaryMultiComplex) -> Ladder:
    """L (x) X for a free complex X; X's directions are appended."""
    from .bincx import tensor_free

    P, Q = tensor_free(L.P, X), tensor_free(L.Q, X)
    sig, tau = {}, {}
    for zd in box(L.bounds):
        for xd in X.degrees():
            r = X.obj(xd).rank
            a = _copies(L.P.obj(zd), r, P.ring)
            b = _copies(L.Q.obj(zd), r, P.ring)
            sig[zd + xd] = a.diag(b, {c: L.sig(zd) for c in range(r)})
            tau[zd + xd] = a.diag(b, {c: L.tau_at(zd) for c in range(r)})
    return Ladder(P, Q, L.j, sig, tau)


def complex_tensor_free_ladder(Z: BinaryMultiComplex, LX: Ladder) -> Ladder:
    """Z (x) LX for a ladder LX between free complexes; the ladder direction shifts by Z.n."""
    from .bincx import tensor_free

    if not (is_free(LX.P) and is_free(LX.Q)):
        raise HypothesisError("the ladder factor must consist of free modules")
    P, Q = tensor_free(Z, LX.P), tensor_free(Z, LX.Q)
    sig, tau = {}, {}
    for zd in Z.degrees():
        M = Z.obj(zd)
        for xd in box(LX.bounds):
            r = LX.P.obj(xd).rank
            a = _copies(M, r, Z.ring)
            b = _copies(M, LX.Q.obj(xd).rank, Z.ring)
            for fam, out in ((LX.sig, sig), (LX.tau_at, tau)):
                A = fam(xd).matrix
                blocks = {(k, l): Morphism.scalar(M, v) for k, row in enumerate(A) for l, v in enumerate(row) if v}
                out[zd + xd] = a.block(b, blocks)
    return Ladder(P, Q, Z.n + LX.j, sig, tau)
